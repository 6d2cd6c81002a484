#pragma once

// Umbrella header: the whole library in one include.

#include "chain.hpp"
#include "convergence.hpp"
#include "counting.hpp"
#include "csv.hpp"
#include "entropy.hpp"
#include "errors.hpp"
#include "experiment.hpp"
#include "format.hpp"
#include "prob_vector.hpp"
#include "return_time.hpp"
#include "rng.hpp"
#include "summation.hpp"
