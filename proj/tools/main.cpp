#include "bayestomo/cli.hpp"

int main(int argc, char** argv) { return bayestomo::run_cli(argc, argv); }
