#pragma once

// Umbrella header: the whole quasi-stationary Monte Carlo toolkit.

#include "builtin.hpp"
#include "common.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "dynamics.hpp"
#include "ensemble.hpp"
#include "expr.hpp"
#include "killing.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "spectral.hpp"
#include "stats.hpp"
#include "tridiag.hpp"
