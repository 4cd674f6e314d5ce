#include "mfimpulse/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace mfimpulse {

using json = nlohmann::ordered_json;

json number(double v) {
    if (!std::isfinite(v)) return nullptr;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::strtod(buf, nullptr);
}

namespace {

json estimate(const Estimate& e) { return {{"value", number(e.value)}, {"se", number(e.se)}}; }

json fixed_point(const FixedPoint& f) {
    return {{"z", number(f.z)},           {"price", number(f.p)},
            {"policy", to_json(f.policy)}, {"value", number(f.value)},
            {"residual", number(f.residual)}, {"value_recheck", number(f.value_recheck)}};
}

json floor_json(const PriceFloor& f) {
    return {{"lo", number(f.lo)}, {"hi", number(f.hi)}, {"arg", number(f.arg)}, {"phi_min", number(f.phi_min)},
            {"feasible", f.feasible}};
}

}  // namespace

json to_json(const ThresholdPolicy& p) { return {{"w", number(p.w)}, {"y", number(p.y)}}; }

json to_json(const ConditionReport& r) {
    json ev = json::object();
    for (const auto& [k, v] : r.evidence) ev[k] = number(v);
    return {{"id", r.id}, {"verdict", to_string(r.verdict)}, {"evidence", ev}, {"note", r.note}};
}

json to_json(const std::vector<ConditionReport>& reports) {
    json list = json::array();
    for (const auto& r : reports) list.push_back(to_json(r));
    return {{"all_hold", conditions_hold(reports)}, {"conditions", list}};
}

json to_json(const ClassicalSolution& s) {
    json j = {{"policy", to_json(s.policy)},
              {"price", number(s.p)},
              {"value", number(s.value)},
              {"boundary_case", to_string(s.boundary_case)},
              {"residual_w", number(s.residual_w)},
              {"residual_y", number(s.residual_y)},
              {"y_peak", number(s.y_peak)},
              {"h_peak", number(s.h_peak)},
              {"level_floor", number(s.level_floor)},
              {"oracle", nullptr}};
    if (s.oracle)
        j["oracle"] = {{"policy", to_json(s.oracle->policy)},
                       {"value", number(s.oracle->value)},
                       {"disagreement", number(s.oracle->disagreement)},
                       {"optimizer_warning", s.oracle->optimizer_warning}};
    return j;
}

json to_json(const EquilibriumReport& r) {
    json fps = json::array();
    for (const auto& f : r.fixed_points) fps.push_back(fixed_point(f));
    return {{"primary", fixed_point(r.primary)},
            {"fixed_points", fps},
            {"z0", number(r.z0)},
            {"floor", floor_json(r.floor)},
            {"grid_points", r.trace.size()},
            {"max_jump", number(r.max_jump)},
            {"jump_flag", r.jump_flag}};
}

json to_json(const BestResponse& r) {
    return {{"z", number(r.z)},
            {"price", number(r.price)},
            {"solution", to_json(r.solution)},
            {"baseline", number(r.baseline)},
            {"gap", number(r.gap)}};
}

json to_json(const LagrangeDiagnostic& d) {
    return {{"z", number(d.z)},           {"lambda", number(d.lambda)},
            {"residual", number(d.residual)}, {"lambda_r", number(d.lambda_r)},
            {"p0", number(d.p0)},         {"policy", to_json(d.policy)},
            {"shifted_value", number(d.shifted_value)}, {"identity_gap", number(d.identity_gap)}};
}

json to_json(const OptimumReport& r, const std::optional<LagrangeDiagnostic>& lagrange) {
    json ties = json::array();
    for (const auto& p : r.near_ties) ties.push_back(to_json(p));
    return {{"policy", to_json(r.policy)},
            {"z", number(r.z)},
            {"price", number(r.price)},
            {"value", number(r.value)},
            {"starts", r.starts},
            {"improvements", r.improvements},
            {"optimizer_warning", r.optimizer_warning},
            {"near_ties", ties},
            {"floor", floor_json(r.floor)},
            {"deviation", to_json(r.deviation)},
            {"lagrange", lagrange ? to_json(*lagrange) : json(nullptr)}};
}

json to_json(const SimEstimate& s, const std::optional<HorizonEstimate>& h) {
    json j = {{"policy", to_json(s.policy)},
              {"price", number(s.price)},
              {"cycles", s.cycles},
              {"tau", estimate(s.tau)},
              {"running_reward", estimate(s.running_reward)},
              {"kappa", estimate(s.kappa)},
              {"J", estimate(s.J)},
              {"steps", s.steps},
              {"guard_activations", s.guard_activations},
              {"guard_fraction", number(s.guard_fraction)},
              {"valid", s.valid},
              {"horizon", nullptr}};
    if (h)
        j["horizon"] = {{"T", number(h->T)},
                        {"impulses", h->impulses},
                        {"running_average", estimate(h->running_average)},
                        {"impulse_average", estimate(h->impulse_average)},
                        {"J", estimate(h->J)},
                        {"kappa", estimate(h->kappa)},
                        {"steps", h->steps},
                        {"guard_activations", h->guard_activations},
                        {"valid", h->valid}};
    return j;
}

json make_envelope(const std::string& command, const RunConfig& config, double seconds, const std::string& kind,
                   json report) {
    return {{"tool", kToolName},
            {"version", kToolVersion},
            {"command", command},
            {"config", to_json(config)},
            {"timing", {{"seconds", number(seconds)}}},
            {"kind", kind},
            {"report", std::move(report)}};
}

}  // namespace mfimpulse
