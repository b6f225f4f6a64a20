#pragma once

// Finite-dimensional toolkit for almost commuting measurement systems:
// validated POVM types, interaction products and correlation matrices,
// three explicit dilation constructions with measured defects, and a
// see-saw optimizer for Bell-type operator norms under commutator budgets.

#include "epscomm/bell.hpp"
#include "epscomm/core.hpp"
#include "epscomm/dilation.hpp"
#include "epscomm/errors.hpp"
#include "epscomm/io.hpp"
#include "epscomm/matrix.hpp"
#include "epscomm/measurement.hpp"
#include "epscomm/random.hpp"
