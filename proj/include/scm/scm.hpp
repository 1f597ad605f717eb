#pragma once

// Supervised cadre models: soft, feature-sparse subpopulations learned
// jointly with per-subpopulation linear predictors. Everything is header
// only; include this to get the full library.

#include "scm/common.hpp"     // IWYU pragma: export
#include "scm/dataset.hpp"    // IWYU pragma: export
#include "scm/model.hpp"      // IWYU pragma: export
#include "scm/loss.hpp"       // IWYU pragma: export
#include "scm/optim.hpp"      // IWYU pragma: export
#include "scm/baselines.hpp"  // IWYU pragma: export
#include "scm/eval.hpp"       // IWYU pragma: export
#include "scm/select.hpp"     // IWYU pragma: export
#include "scm/model_io.hpp"   // IWYU pragma: export
#include "scm/benchmark.hpp"  // IWYU pragma: export
