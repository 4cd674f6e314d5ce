#include "mfimpulse/mfc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "mfimpulse/error.hpp"

namespace mfimpulse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double upsilon_or_minus_inf(const PotentialEngine& e, const ThresholdPolicy& policy) {
    try {
        if (!(policy.w < policy.y)) return -kInf;
        const double v = upsilon(e, policy);
        return std::isfinite(v) ? v : -kInf;
    } catch (const Error&) {
        return -kInf;
    }
}

}  // namespace

double upsilon(const PotentialEngine& e, const ThresholdPolicy& policy) {
    const double z = zeta(e, policy);
    if (!(z >= 0.0 && z <= e.z0() * (1.0 + 1e-9))) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "supply rate " << z << " lies outside [0, z0]";
        throw Error(ErrorKind::evaluation, msg.str());
    }
    return F_p(e, policy, e.market().phi(z));
}

BestResponse best_response(const PotentialEngine& e, double z, double baseline, const ClassicalOptions& options) {
    BestResponse out;
    out.z = z;
    out.price = e.market().phi(z);
    out.solution = solve_classical(e, out.price, options);
    out.baseline = baseline;
    out.gap = out.solution.value - baseline;
    return out;
}

OptimumReport solve_mfc(const PotentialEngine& e, const MfcOptions& options) {
    OptimumReport report;
    report.floor = minimize_price(e, 0.0, e.z0(), options.classical);
    if (!report.floor.feasible) throw Error(ErrorKind::precondition, "the smallest price on [0, z0] is not feasible");

    const auto [win_lo, win_hi] = e.search_window();
    const auto [lat_lo, lat_hi] = e.lattice_range();
    const double w_lo = std::max(lat_lo, win_lo - 1.0);
    const double w_hi = win_hi;
    // y sits at u_w + e^d in lattice coordinates
    const numerics::Box box{w_lo, w_hi, std::log(1e-3), std::log(w_hi - w_lo + 4.0)};
    auto objective = [&](double uw, double d) {
        const double uy = uw + std::exp(d);
        if (uy >= lat_hi) return -kInf;
        return upsilon_or_minus_inf(e, {e.to_x(uw), e.to_x(uy)});
    };
    numerics::Maximize2dOptions opt;
    opt.grid = options.grid;
    opt.starts = options.starts;
    opt.tol = options.tol;
    const auto r = numerics::maximize_2d(objective, box, opt);
    report.policy = {e.to_x(r.arg[0]), e.to_x(r.arg[0] + std::exp(r.arg[1]))};
    report.value = r.value;
    report.starts = r.starts;
    report.improvements = r.improvements;
    report.optimizer_warning = r.warning;
    for (const auto& [arg, value] : r.candidates) {
        const ThresholdPolicy p{e.to_x(arg[0]), e.to_x(arg[0] + std::exp(arg[1]))};
        const bool distinct = std::abs(p.w - report.policy.w) > 1e-4 || std::abs(p.y - report.policy.y) > 1e-4;
        if (distinct && value >= report.value - options.tie_window) report.near_ties.push_back(p);
    }

    if (e.model().left_boundary == BoundaryKind::entrance) {
        auto edge = [&](double uy) { return upsilon_or_minus_inf(e, {e.a(), e.to_x(uy)}); };
        constexpr double step = 1.0 / 16.0;
        double best = -kInf, best_u = w_lo;
        for (double u = w_lo; u <= w_hi + 2.0 && u < lat_hi; u += step) {
            const double v = edge(u);
            if (v > best) {
                best = v;
                best_u = u;
            }
        }
        if (best > -kInf) {
            const auto g = numerics::maximize_unimodal(edge, best_u - step, best_u + step, options.tol);
            const double v = std::max(g.value, best);
            if (v >= report.value) {
                report.policy = {e.a(), e.to_x(g.value >= best ? g.arg : best_u)};
                report.value = v;
            }
        }
    }
    report.z = zeta(e, report.policy);
    report.price = e.market().phi(report.z);
    report.deviation = best_response(e, report.z, report.value, options.classical);
    return report;
}

LagrangeDiagnostic lagrange_multiplier(const PotentialEngine& e, double z, const ClassicalOptions& options) {
    if (!(z > 0.0 && z < e.z0())) throw Error(ErrorKind::precondition, "lagrange_multiplier needs z in (0, z0)");
    LagrangeDiagnostic out;
    out.z = z;
    const double phi_z = e.market().phi(z);
    out.p0 = p0(e, options);
    out.lambda_r = phi_z - out.p0;

    auto f = [&](double lambda) { return z - zeta(e, solve_classical(e, phi_z - lambda, options).policy); };
    // f < 0 for very negative lambda (high prices supply more)
    double lo = out.lambda_r - 1.0;
    double f_lo = f(lo);
    double width = 1.0;
    for (int k = 0; f_lo >= 0.0; ++k) {
        if (k >= 16) throw Error(ErrorKind::convergence, "no lower bracket for the Lagrange multiplier");
        width *= 2.0;
        lo = out.lambda_r - width;
        f_lo = f(lo);
    }
    // f > 0 close to lambda_r (prices near p0 supply little)
    double hi = lo, f_hi = f_lo;
    for (int k = 1; k <= 60 && !(f_hi > 0.0); ++k) {
        const double candidate = out.lambda_r - (out.lambda_r - lo) * std::ldexp(1.0, -k);
        try {
            const double v = f(candidate);
            if (v > 0.0) {
                hi = candidate;
                f_hi = v;
            } else {
                lo = candidate;
                f_lo = v;
            }
        } catch (const Error&) {
            // too close to p0 for the classical solver; the previous point stands
            break;
        }
    }
    if (!(f_hi > 0.0)) throw Error(ErrorKind::convergence, "no upper bracket for the Lagrange multiplier");
    out.lambda = numerics::find_root(f, numerics::Bracket(lo, hi, f_lo, f_hi), 1e-12);
    const ClassicalSolution sol = solve_classical(e, phi_z - out.lambda, options);
    out.policy = sol.policy;
    out.residual = std::abs(z - zeta(e, sol.policy));
    out.shifted_value = sol.value;
    out.identity_gap = sol.value + out.lambda * z - upsilon(e, sol.policy);
    return out;
}

void write_upsilon_surface(std::ostream& out, const PotentialEngine& e, double w_lo, double w_hi, double y_lo,
                           double y_hi, int n) {
    out << "w,y,zeta,upsilon\n";
    out.precision(9);
    for (int i = 0; i < n; ++i) {
        const double w = w_lo + (w_hi - w_lo) * i / std::max(1, n - 1);
        for (int j = 0; j < n; ++j) {
            const double y = y_lo + (y_hi - y_lo) * j / std::max(1, n - 1);
            if (!(w < y)) continue;
            const double v = upsilon_or_minus_inf(e, {w, y});
            if (!std::isfinite(v)) continue;
            out << w << ',' << y << ',' << zeta(e, {w, y}) << ',' << v << '\n';
        }
    }
}

}  // namespace mfimpulse
