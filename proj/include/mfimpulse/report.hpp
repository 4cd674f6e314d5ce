#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfimpulse/conditions.hpp"
#include "mfimpulse/config.hpp"
#include "mfimpulse/mfc.hpp"
#include "mfimpulse/mfg.hpp"
#include "mfimpulse/policy.hpp"
#include "mfimpulse/simulate.hpp"

namespace mfimpulse {

inline constexpr const char* kToolName = "mfimpulse";
inline constexpr const char* kToolVersion = "1.0.0";

/// Rounded to 9 significant digits; non-finite values become null.
nlohmann::ordered_json number(double v);

nlohmann::ordered_json to_json(const ThresholdPolicy& p);
nlohmann::ordered_json to_json(const ConditionReport& r);
nlohmann::ordered_json to_json(const std::vector<ConditionReport>& reports);
nlohmann::ordered_json to_json(const ClassicalSolution& s);
nlohmann::ordered_json to_json(const EquilibriumReport& r);
nlohmann::ordered_json to_json(const BestResponse& r);
nlohmann::ordered_json to_json(const OptimumReport& r, const std::optional<LagrangeDiagnostic>& lagrange = {});
nlohmann::ordered_json to_json(const LagrangeDiagnostic& d);
nlohmann::ordered_json to_json(const SimEstimate& s, const std::optional<HorizonEstimate>& horizon = {});

/// kind is one of: conditions, classical, equilibrium, optimum, best_response, simulation
nlohmann::ordered_json make_envelope(const std::string& command, const RunConfig& config, double seconds,
                                     const std::string& kind, nlohmann::ordered_json report);

}  // namespace mfimpulse
