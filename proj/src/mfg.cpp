#include "mfimpulse/mfg.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mfimpulse/error.hpp"
#include "mfimpulse/parallel.hpp"

namespace mfimpulse {

MapEvaluation evaluate_map(const PotentialEngine& e, double z, const ClassicalOptions& options) {
    if (!(z >= 0.0 && z <= e.z0() * (1.0 + 1e-12)))
        throw Error(ErrorKind::precondition, "supply rate outside [0, z0]");
    MapEvaluation out;
    out.z = z;
    out.price = e.market().phi(z);
    const ClassicalSolution sol = solve_classical(e, out.price, options);
    out.policy = sol.policy;
    out.value = sol.value;
    out.mapped = zeta(e, sol.policy);
    return out;
}

PriceFloor minimize_price(const PotentialEngine& e, double lo, double hi, const ClassicalOptions& options) {
    constexpr int n = 4096;
    const auto& phi = e.market().phi;
    double best = std::numeric_limits<double>::infinity(), best_z = lo;
    for (int i = 0; i <= n; ++i) {
        const double z = i == n ? hi : lo + (hi - lo) * i / n;
        const double v = phi(z);
        if (!std::isfinite(v) || v < 0.0) throw Error(ErrorKind::precondition, "phi is negative or not finite on [0, z0]");
        if (v < best) {
            best = v;
            best_z = z;
        }
    }
    const double step = (hi - lo) / n;
    const auto refined = numerics::maximize_unimodal([&](double z) { return -phi(z); }, std::max(lo, best_z - step),
                                                     std::min(hi, best_z + step), 1e-12);
    PriceFloor floor{lo, hi, best_z, best, false};
    if (-refined.value < best) {
        floor.arg = refined.arg;
        floor.phi_min = -refined.value;
    }
    floor.feasible = is_feasible(e, floor.phi_min, options);
    return floor;
}

EquilibriumReport solve_mfg(const PotentialEngine& e, const MfgOptions& options) {
    if (options.grid < 2) throw Error(ErrorKind::precondition, "MFG scan needs at least 2 intervals");
    EquilibriumReport report;
    report.z0 = e.z0();
    report.floor = minimize_price(e, 0.0, report.z0, options.classical);
    if (!report.floor.feasible)
        throw Error(ErrorKind::precondition, "the smallest price on [0, z0] is not feasible");

    const int n = options.grid;
    report.trace.resize(static_cast<size_t>(n) + 1);
    parallel_for(
        report.trace.size(),
        [&](size_t k) {
            const double z = k == static_cast<size_t>(n) ? report.z0 : report.z0 * static_cast<double>(k) / n;
            report.trace[k] = evaluate_map(e, z, options.classical);
        },
        options.threads);

    for (size_t k = 1; k < report.trace.size(); ++k) {
        const double jump = std::abs(report.trace[k].mapped - report.trace[k - 1].mapped);
        report.max_jump = std::max(report.max_jump, jump);
    }
    report.jump_flag = report.max_jump > options.jump_bound;

    auto G = [&](double z) { return z - evaluate_map(e, z, options.classical).mapped; };
    auto make_fixed_point = [&](double z) {
        const MapEvaluation m = evaluate_map(e, z, options.classical);
        FixedPoint fp;
        fp.z = z;
        fp.p = m.price;
        fp.policy = m.policy;
        fp.value = m.value;
        fp.residual = std::abs(z - m.mapped);
        fp.value_recheck = F_p(e, m.policy, m.price);
        return fp;
    };
    for (size_t k = 0; k + 1 < report.trace.size(); ++k) {
        const MapEvaluation& l = report.trace[k];
        const MapEvaluation& r = report.trace[k + 1];
        const double gl = l.z - l.mapped, gr = r.z - r.mapped;
        if (gl == 0.0) {
            report.fixed_points.push_back(make_fixed_point(l.z));
        } else if (gr != 0.0 && (gl < 0.0) != (gr < 0.0)) {
            const double z = numerics::find_root(G, numerics::Bracket(l.z, r.z, gl, gr), 1e-12);
            report.fixed_points.push_back(make_fixed_point(z));
        }
    }
    const MapEvaluation& last = report.trace.back();
    if (last.z - last.mapped == 0.0) report.fixed_points.push_back(make_fixed_point(last.z));
    if (report.fixed_points.empty())
        throw Error(ErrorKind::convergence, "no sign change of z - zeta(Psi(phi(z))) on [0, z0]");

    report.primary = *std::min_element(report.fixed_points.begin(), report.fixed_points.end(),
                                       [](const FixedPoint& x, const FixedPoint& y) {
                                           if (x.value != y.value) return x.value > y.value;
                                           return x.z < y.z;
                                       });
    return report;
}

void write_trace_csv(std::ostream& out, const EquilibriumReport& report) {
    out << "z,phi,w,y,mapped,value\n";
    out.precision(9);
    for (const auto& m : report.trace)
        out << m.z << ',' << m.price << ',' << m.policy.w << ',' << m.policy.y << ',' << m.mapped << ',' << m.value << '\n';
}

}  // namespace mfimpulse
