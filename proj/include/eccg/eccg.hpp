#pragma once

// Umbrella header: erasure-coded conjugate gradient solver with fail-stop
// fault injection and exact recovery of the raw solution.

#include "eccg/csr.hpp"
#include "eccg/dense.hpp"
#include "eccg/encoding.hpp"
#include "eccg/errors.hpp"
#include "eccg/experiment.hpp"
#include "eccg/fault.hpp"
#include "eccg/kernels.hpp"
#include "eccg/mask.hpp"
#include "eccg/matrix_market.hpp"
#include "eccg/recovery.hpp"
#include "eccg/rng.hpp"
#include "eccg/solver.hpp"
