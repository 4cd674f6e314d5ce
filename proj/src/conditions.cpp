#include "mfimpulse/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "mfimpulse/error.hpp"
#include "mfimpulse/mfg.hpp"

namespace mfimpulse {

namespace {

constexpr double kGrowth = 1e3;

ConditionReport skipped(std::string id, std::string why) {
    return {std::move(id), Verdict::indeterminate, {}, std::move(why)};
}

/// Growth certification on a sample sequence approaching a boundary: the
/// samples must grow monotonically by the factor kGrowth overall.
Verdict certify_growth(const std::vector<double>& v, double& growth) {
    growth = v.back() / v.front();
    const size_t n = v.size();
    const bool tail_increasing = n >= 3 && v[n - 1] > v[n - 2] && v[n - 2] > v[n - 3];
    if (tail_increasing && growth >= kGrowth) return Verdict::pass;
    if (n >= 3 && v[n - 1] < v[n - 2] && v[n - 2] < v[n - 3]) return Verdict::fail;
    return Verdict::indeterminate;
}

}  // namespace

bool conditions_hold(const std::vector<ConditionReport>& reports) {
    return std::none_of(reports.begin(), reports.end(), [](const auto& r) { return r.verdict == Verdict::fail; });
}

std::vector<ConditionReport> check_conditions(const DiffusionModel& model, const MarketModel& market,
                                              const ConditionOptions& options) {
    std::vector<ConditionReport> out;

    ConditionReport attract{"left_boundary_non_attracting", Verdict::pass, {}, ""};
    double mu_a = std::numeric_limits<double>::quiet_NaN();
    try {
        mu_a = model.mu(model.a);
    } catch (...) {
    }
    attract.evidence.emplace_back("mu_a", mu_a);
    if (!std::isfinite(mu_a)) {
        attract.verdict = Verdict::fail;
        attract.note = "drift does not extend finitely to a";
    } else if (mu_a < 0.0) {
        attract.verdict = Verdict::fail;
        attract.note = "left boundary attracting";
    }
    out.push_back(attract);

    const std::vector<std::string> engine_ids = {"speed_measure_finite_at_a", "xi_prime_diverges_at_b",
                                                 "scale_diverges_at_a", "shape_condition", "running_reward",
                                                 "scale_density_crosscheck", "price_function", "price_floor_feasible"};
    if (attract.verdict == Verdict::fail) {
        for (const auto& id : engine_ids) out.push_back(skipped(id, "not evaluated: left boundary check failed"));
        return out;
    }

    std::unique_ptr<PotentialEngine> engine;
    ConditionReport finite_M{"speed_measure_finite_at_a", Verdict::pass, {}, ""};
    try {
        engine = std::make_unique<PotentialEngine>(std::make_shared<const DiffusionModel>(model),
                                                   std::make_shared<const MarketModel>(market), options.engine);
        finite_M.evidence.emplace_back("M_a_x0", engine->speed_measure(model.x0));
        finite_M.evidence.emplace_back("x_resolved", engine->x_min());
        finite_M.note = "increments of M[a, x] decay geometrically towards a";
    } catch (const Error& e) {
        finite_M.verdict = e.kind() == ErrorKind::precondition ? Verdict::fail : Verdict::indeterminate;
        finite_M.note = e.what();
    }
    out.push_back(finite_M);
    if (!engine) {
        for (size_t i = 1; i < engine_ids.size(); ++i)
            out.push_back(skipped(engine_ids[i], "not evaluated: potentials could not be built"));
        return out;
    }
    const PotentialEngine& e = *engine;
    const auto [lat_lo, lat_hi] = e.lattice_range();
    const double u0 = e.to_u(model.x0);

    {
        // s M along u0 + k towards b
        ConditionReport r{"xi_prime_diverges_at_b", Verdict::indeterminate, {}, ""};
        std::vector<double> v;
        double last_x = model.x0;
        for (double u = u0; u < lat_hi; u += 1.0) {
            try {
                const double x = e.to_x(u);
                v.push_back(e.xi_prime(x));
                last_x = x;
            } catch (const Error&) {
                break;
            }
        }
        double growth = 0.0;
        if (v.size() >= 3) r.verdict = certify_growth(v, growth);
        r.evidence = {{"growth", growth}, {"last_x", last_x}, {"last_xi_prime", v.empty() ? 0.0 : v.back()}};
        r.note = r.verdict == Verdict::pass ? "s M grows monotonically towards b"
                 : r.verdict == Verdict::fail ? "s M decreases towards b"
                                              : "growth of s M towards b not certified";
        out.push_back(r);
    }

    if (model.left_boundary == BoundaryKind::natural) {
        // -S(x) = int_x^{x0} s along u0 - k towards a
        ConditionReport r{"scale_diverges_at_a", Verdict::indeterminate, {}, ""};
        std::vector<double> v;
        double last_x = model.x0;
        for (double u = u0 - 1.0; u >= lat_lo; u -= 1.0) {
            const double x = e.to_x(u);
            v.push_back(-e.scale_function(x));
            last_x = x;
        }
        double growth = 0.0;
        if (v.size() >= 3) r.verdict = certify_growth(v, growth);
        r.evidence = {{"growth", growth}, {"last_x", last_x}, {"last_scale", v.empty() ? 0.0 : v.back()}};
        r.note = r.verdict == Verdict::pass ? "S(a, x0] diverges" : "divergence of S(a, x0] not certified";
        out.push_back(r);
    } else {
        out.push_back({"scale_diverges_at_a", Verdict::pass, {}, "not required at an entrance boundary"});
    }

    const auto [win_lo, win_hi] = e.search_window();
    std::vector<double> xs;
    for (int i = 0; i < options.samples; ++i) xs.push_back(e.to_x(win_lo + (win_hi - win_lo) * i / (options.samples - 1)));

    {
        // mu strictly increasing up to some x_hat, mu and c concave beyond it
        ConditionReport r{"shape_condition", Verdict::pass, {}, ""};
        std::vector<double> mu(xs.size()), c(xs.size());
        for (size_t i = 0; i < xs.size(); ++i) {
            mu[i] = model.mu(xs[i]);
            c[i] = market.c(xs[i]);
        }
        size_t k = 0;
        while (k + 1 < xs.size() && mu[k + 1] > mu[k]) ++k;
        auto convex_kinks = [&](const std::vector<double>& f) {
            long bad = 0;
            double scale = 0.0;
            for (double v : f) scale = std::max(scale, std::abs(v));
            for (size_t i = std::max<size_t>(k, 1); i + 1 < xs.size(); ++i) {
                const double left = (f[i] - f[i - 1]) / (xs[i] - xs[i - 1]);
                const double right = (f[i + 1] - f[i]) / (xs[i + 1] - xs[i]);
                if (right - left > 1e-9 * (1.0 + scale) / (xs[i + 1] - xs[i - 1])) ++bad;
            }
            return bad;
        };
        const long mu_bad = convex_kinks(mu), c_bad = convex_kinks(c);
        r.evidence = {{"x_hat", xs[k]}, {"mu_convex_samples", static_cast<double>(mu_bad)},
                      {"c_convex_samples", static_cast<double>(c_bad)}};
        if (mu_bad || c_bad) {
            r.verdict = Verdict::fail;
            r.note = "mu or c is not concave beyond the sampled x_hat";
        } else {
            r.note = "mu increases up to x_hat; mu and c are concave beyond it";
        }
        out.push_back(r);
    }

    {
        ConditionReport r{"running_reward", Verdict::pass, {}, ""};
        long negative = 0, decreasing = 0;
        double prev = market.c(xs.front());
        for (double x : xs) {
            const double v = market.c(x);
            if (v < 0.0) ++negative;
            if (v < prev - 1e-12 * (1.0 + std::abs(prev))) ++decreasing;
            prev = v;
        }
        double cb = std::numeric_limits<double>::quiet_NaN(), ca = market.c(model.a);
        try {
            cb = e.cbar_b();
        } catch (const Error&) {
        }
        r.evidence = {{"negative_samples", static_cast<double>(negative)},
                      {"decreasing_samples", static_cast<double>(decreasing)}, {"c_a", ca}, {"cbar_b", cb}};
        if (negative || decreasing || !std::isfinite(ca)) {
            r.verdict = Verdict::fail;
            r.note = "c must be nonnegative, nondecreasing and finite at a";
        } else if (!std::isfinite(cb)) {
            r.verdict = Verdict::indeterminate;
            r.note = "cbar(b) is not available without an override";
        } else {
            r.note = "c nonnegative and nondecreasing on the sample grid";
        }
        out.push_back(r);
    }

    {
        // lattice scale density against adaptive quadrature of 2 mu / sigma^2
        ConditionReport r{"scale_density_crosscheck", Verdict::pass, {}, ""};
        double worst = 0.0;
        try {
            for (size_t i = 0; i < xs.size(); i += std::max<size_t>(1, xs.size() / 40)) {
                const double direct = scale_density(model, xs[i], options.quadrature);
                worst = std::max(worst, std::abs(e.s(xs[i]) / direct - 1.0));
            }
        } catch (const Error& err) {
            r.verdict = Verdict::indeterminate;
            r.note = err.what();
        }
        r.evidence = {{"max_relative_difference", worst}};
        if (r.verdict == Verdict::pass && worst > 1e-8) {
            r.verdict = Verdict::fail;
            r.note = "lattice and quadrature scale densities disagree";
        }
        out.push_back(r);
    }

    {
        ConditionReport r{"price_function", Verdict::pass, {}, ""};
        long bad = 0;
        for (int i = 0; i <= 1000; ++i) {
            const double v = market.phi(e.z0() * i / 1000.0);
            if (!std::isfinite(v) || v < 0.0) ++bad;
        }
        r.evidence = {{"z0", e.z0()}, {"bad_samples", static_cast<double>(bad)}};
        if (bad) {
            r.verdict = Verdict::fail;
            r.note = "phi must be finite and nonnegative on [0, z0]";
        }
        out.push_back(r);
    }

    {
        ConditionReport r{"price_floor_feasible", Verdict::indeterminate, {}, ""};
        try {
            const PriceFloor floor = minimize_price(e, 0.0, e.z0(), options.classical);
            r.verdict = floor.feasible ? Verdict::pass : Verdict::fail;
            r.evidence = {{"phi_min", floor.phi_min}, {"arg", floor.arg}, {"cbar_b", e.cbar_b()}};
            r.note = floor.feasible ? "min phi over [0, z0] is a feasible price" : "min phi over [0, z0] is not feasible";
        } catch (const Error& err) {
            r.note = err.what();
        }
        out.push_back(r);
    }
    return out;
}

}  // namespace mfimpulse
