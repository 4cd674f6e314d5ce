#pragma once

#include <iosfwd>
#include <vector>

#include "mfimpulse/mfg.hpp"

namespace mfimpulse {

/// F_p at the price set by the policy's own supply rate.
double upsilon(const PotentialEngine& engine, const ThresholdPolicy& policy);

struct BestResponse {
    double z = 0.0;
    double price = 0.0;
    ClassicalSolution solution;
    double baseline = 0.0;
    double gap = 0.0;  // solution.value - baseline
};

/// Optimal individual policy when everybody else supplies at rate z.
BestResponse best_response(const PotentialEngine& engine, double z, double baseline,
                           const ClassicalOptions& options = {.cross_validate = false});

struct MfcOptions {
    int grid = 64;
    int starts = 8;
    double tol = 1e-9;        // simplex tolerance in lattice coordinates
    double tie_window = 1e-6; // candidates this close in value are reported as near ties
    ClassicalOptions classical{.cross_validate = false};
};

struct OptimumReport {
    ThresholdPolicy policy;
    double z = 0.0;
    double price = 0.0;
    double value = 0.0;
    int starts = 0;
    int improvements = 0;
    bool optimizer_warning = false;
    std::vector<ThresholdPolicy> near_ties;
    PriceFloor floor;
    BestResponse deviation;
};

OptimumReport solve_mfc(const PotentialEngine& engine, const MfcOptions& options = {});

struct LagrangeDiagnostic {
    double z = 0.0;
    double lambda = 0.0;
    double residual = 0.0;      // |z - zeta(Psi(phi(z) - lambda))|
    double lambda_r = 0.0;      // phi(z) - p0
    double p0 = 0.0;
    ThresholdPolicy policy;     // Psi(phi(z) - lambda)
    double shifted_value = 0.0; // F*_{phi(z) - lambda}
    double identity_gap = 0.0;  // shifted_value + lambda z - upsilon(policy)
};

LagrangeDiagnostic lagrange_multiplier(const PotentialEngine& engine, double z,
                                       const ClassicalOptions& options = {.cross_validate = false});

/// CSV columns: w,y,zeta,upsilon over a rectangular grid (invalid cells omitted).
void write_upsilon_surface(std::ostream& out, const PotentialEngine& engine, double w_lo, double w_hi, double y_lo,
                           double y_hi, int n);

}  // namespace mfimpulse
