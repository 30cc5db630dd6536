// Umbrella header.

#ifndef BAYESTOMO_BAYESTOMO_HPP
#define BAYESTOMO_BAYESTOMO_HPP

#include "bayestomo/bench.hpp"
#include "bayestomo/inference.hpp"
#include "bayestomo/io.hpp"
#include "bayestomo/measurements.hpp"
#include "bayestomo/rng.hpp"
#include "bayestomo/states.hpp"

#endif  // BAYESTOMO_BAYESTOMO_HPP
