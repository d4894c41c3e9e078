#pragma once

// Umbrella header for the predkit library: unsupervised accuracy estimation
// from prediction matrices, plus the synthetic benchmark harness around it.

#include "predkit/bench.hpp"
#include "predkit/commands.hpp"
#include "predkit/errors.hpp"
#include "predkit/estimators.hpp"
#include "predkit/io.hpp"
#include "predkit/labelshift.hpp"
#include "predkit/linalg.hpp"
#include "predkit/matrix.hpp"
#include "predkit/prediction.hpp"
#include "predkit/rng.hpp"
#include "predkit/stats.hpp"
#include "predkit/svg.hpp"
#include "predkit/synth.hpp"
