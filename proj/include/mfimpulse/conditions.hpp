#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mfimpulse/model.hpp"
#include "mfimpulse/policy.hpp"
#include "mfimpulse/potentials.hpp"

namespace mfimpulse {

struct ConditionReport {
    std::string id;
    Verdict verdict = Verdict::indeterminate;
    std::vector<std::pair<std::string, double>> evidence;
    std::string note;
};

struct ConditionOptions {
    EngineOptions engine;
    ClassicalOptions classical;
    numerics::QuadratureSpec quadrature;
    int samples = 400;
};

/// Numeric checks of the standing assumptions, in order:
///   left_boundary_non_attracting, speed_measure_finite_at_a, xi_prime_diverges_at_b,
///   scale_diverges_at_a, shape_condition, running_reward, scale_density_crosscheck,
///   price_function, price_floor_feasible.
/// A divergence that is growing but not certified is reported as indeterminate.
std::vector<ConditionReport> check_conditions(const DiffusionModel& model, const MarketModel& market,
                                              const ConditionOptions& options = {});

/// True when no report failed.
bool conditions_hold(const std::vector<ConditionReport>& reports);

}  // namespace mfimpulse
