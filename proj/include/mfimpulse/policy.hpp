#pragma once

#include <functional>
#include <optional>

#include "mfimpulse/numerics.hpp"
#include "mfimpulse/potentials.hpp"

namespace mfimpulse {

/// Reset to w whenever the state reaches y.
struct ThresholdPolicy {
    double w = 0.0;
    double y = 0.0;
};

/// Throws a precondition error unless a <= w < y < b (w = a only at an entrance boundary).
void validate_policy(const PotentialEngine& engine, const ThresholdPolicy& policy);

/// f(y) - f(w)
double B(const std::function<double(double)>& f, double w, double y);

/// Long-run average reward (Bg + p (y - w) - K) / B xi.
double F_p(const PotentialEngine& engine, const ThresholdPolicy& policy, double p);
/// Supply rate (y - w) / B xi.
double zeta(const PotentialEngine& engine, const ThresholdPolicy& policy);
/// Invariant density of the controlled process at x.
double nu_density(const PotentialEngine& engine, const ThresholdPolicy& policy, double x);

enum class BoundaryCase { interior, w_at_a };
const char* to_string(BoundaryCase c);

struct ClassicalOptions {
    double tol = 1e-9;             // root tolerance for the level equation
    double optimizer_tol = 1e-7;   // simplex tolerance for the 2D cross-check
    bool cross_validate = true;
    int oracle_grid = 48;
    int oracle_starts = 6;
};

struct OracleCheck {
    ThresholdPolicy policy;
    double value = 0.0;
    double disagreement = 0.0;  // level-search value minus oracle value
    bool optimizer_warning = false;
};

struct ClassicalSolution {
    ThresholdPolicy policy;
    double p = 0.0;
    double value = 0.0;
    BoundaryCase boundary_case = BoundaryCase::interior;
    double residual_w = 0.0;  // |h_p(w) - value|; for w = a this is h_p(a) - value (nonnegative)
    double residual_y = 0.0;  // |h_p(y) - value|
    double y_peak = 0.0;      // argmax of h_p
    double h_peak = 0.0;
    double level_floor = 0.0; // lower end of the level bracket
    std::optional<OracleCheck> oracle;
};

/// Argmax of h_p over (a, b).
numerics::ArgMax peak_of_h(const PotentialEngine& engine, double p);

/// Optimal (w, y)-policy for a fixed price p by solving for the level L with
/// F_p(w(L), y(L)) = L, where w(L) < y_p < y(L) solve h_p = L.
ClassicalSolution solve_classical(const PotentialEngine& engine, double p, const ClassicalOptions& options = {});

/// sup of F_p over (w, y) by a grid scan plus simplex refinement, including the
/// w = a edge for an entrance boundary.
OracleCheck maximize_F_p(const PotentialEngine& engine, double p, const ClassicalOptions& options = {});

/// sup F_p > cbar(b) + margin
bool is_feasible(const PotentialEngine& engine, double p, const ClassicalOptions& options = {});
/// Infimum of the feasible prices, by bisection.
double p0(const PotentialEngine& engine, const ClassicalOptions& options = {});

constexpr double kFeasibilityMargin = 1e-9;

}  // namespace mfimpulse
