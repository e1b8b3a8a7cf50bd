#pragma once

#include "riskgate/errors.hpp"

namespace riskgate {

/// Numerical thresholds for the factorization kernel and everything built
/// on it. Comparisons are relative in the form tol·(1 + ‖·‖), so they
/// degrade to absolute tolerances near zero without dividing by norms.
struct ToleranceConfig {
    double rank_tol = 1e-9;      // row-independence threshold
    double residual_tol = 1e-9;  // span-membership / identity threshold

    void validate() const {
        if (!(rank_tol > 0.0) || !(residual_tol > 0.0))
            throw Error("tolerances must be strictly positive");
    }
};

}  // namespace riskgate
