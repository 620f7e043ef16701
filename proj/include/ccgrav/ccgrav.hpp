#pragma once

// Umbrella header: periodic-grid tensor calculus, conformal transformations,
// modified-gravity constraint operators, York decomposition, conformal
// parametrizations and the Newton-Krylov constraint solver.

#include "ccgrav/conformal.hpp"
#include "ccgrav/constraints.hpp"
#include "ccgrav/errors.hpp"
#include "ccgrav/fft.hpp"
#include "ccgrav/field.hpp"
#include "ccgrav/field_ops.hpp"
#include "ccgrav/geometry.hpp"
#include "ccgrav/grid.hpp"
#include "ccgrav/io.hpp"
#include "ccgrav/metric.hpp"
#include "ccgrav/parallel.hpp"
#include "ccgrav/parametrize.hpp"
#include "ccgrav/rng.hpp"
#include "ccgrav/solver.hpp"
#include "ccgrav/version.hpp"
#include "ccgrav/york.hpp"
