#pragma once

// Umbrella header for the pointmatch library.

#include "pointmatch/assignment.hpp"
#include "pointmatch/core.hpp"
#include "pointmatch/fit.hpp"
#include "pointmatch/gradcheck.hpp"
#include "pointmatch/io.hpp"
#include "pointmatch/loss.hpp"
#include "pointmatch/metrics.hpp"
#include "pointmatch/parallel.hpp"
#include "pointmatch/rng.hpp"
#include "pointmatch/synth.hpp"

