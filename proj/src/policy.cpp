#include "mfimpulse/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "mfimpulse/error.hpp"

namespace mfimpulse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string describe(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

bool entrance(const PotentialEngine& e) { return e.model().left_boundary == BoundaryKind::entrance; }

struct Span {
    PotentialEngine::Point lo, hi;
};

Span endpoints(const PotentialEngine& e, const ThresholdPolicy& policy) {
    return {e.at(policy.w), e.at(policy.y)};
}

/// F_p with evaluation failures mapped to -inf, for optimizers.
double F_or_minus_inf(const PotentialEngine& e, const ThresholdPolicy& policy, double p) {
    try {
        if (!(policy.w < policy.y)) return -kInf;
        const double v = F_p(e, policy, p);
        return std::isfinite(v) ? v : -kInf;
    } catch (const Error&) {
        return -kInf;
    }
}

}  // namespace

const char* to_string(BoundaryCase c) { return c == BoundaryCase::interior ? "interior" : "w_at_a"; }

void validate_policy(const PotentialEngine& e, const ThresholdPolicy& policy) {
    const double a = e.a(), b = e.b();
    const bool w_ok = policy.w > a || (policy.w == a && entrance(e));
    if (!w_ok || !(policy.w < policy.y) || !(policy.y < b))
        throw Error(ErrorKind::precondition, "invalid policy (w, y) = (" + describe(policy.w) + ", " +
                                                 describe(policy.y) + ")");
}

double B(const std::function<double(double)>& f, double w, double y) { return f(y) - f(w); }

double F_p(const PotentialEngine& e, const ThresholdPolicy& policy, double p) {
    validate_policy(e, policy);
    const Span s = endpoints(e, policy);
    const double bxi = s.hi.xi - s.lo.xi;
    if (!(bxi > 0.0) || !std::isfinite(bxi))
        throw Error(ErrorKind::evaluation, "B xi underflows for w = " + describe(policy.w) + ", y = " + describe(policy.y));
    return (s.hi.g - s.lo.g + p * (policy.y - policy.w) - e.market().K) / bxi;
}

double zeta(const PotentialEngine& e, const ThresholdPolicy& policy) {
    validate_policy(e, policy);
    const Span s = endpoints(e, policy);
    const double bxi = s.hi.xi - s.lo.xi;
    if (!(bxi > 0.0) || !std::isfinite(bxi))
        throw Error(ErrorKind::evaluation, "B xi underflows for w = " + describe(policy.w) + ", y = " + describe(policy.y));
    return (policy.y - policy.w) / bxi;
}

double nu_density(const PotentialEngine& e, const ThresholdPolicy& policy, double x) {
    validate_policy(e, policy);
    if (!(x > e.a()) || x > policy.y) return 0.0;
    const Span s = endpoints(e, policy);
    const double rho = 1.0 / (s.hi.xi - s.lo.xi);
    const PotentialEngine::Point px = e.at(x);
    const double sg = e.model().sigma(x);
    const double m = 2.0 / (sg * sg) * std::exp(-px.log_s);
    const double S_from = x <= policy.w ? s.lo.S : px.S;
    return rho * m * (s.hi.S - S_from);
}

numerics::ArgMax peak_of_h(const PotentialEngine& e, double p) {
    const auto [lat_lo, lat_hi] = e.lattice_range();
    const auto [win_lo, win_hi] = e.search_window();
    const double u_start = std::max(lat_lo, win_lo - 2.0);
    const double u_end = std::min(win_hi + 2.0, lat_hi - 1e-6);
    constexpr double step = 1.0 / 16.0;
    auto h_at = [&](double u) { return e.h_p(e.to_x(u), p); };
    double best = -kInf, best_u = u_start;
    for (double u = u_start; u <= u_end; u += step) {
        double v;
        try {
            v = h_at(u);
        } catch (const Error&) {
            break;
        }
        if (v > best) {
            best = v;
            best_u = u;
        }
    }
    if (!(best > -kInf)) throw Error(ErrorKind::evaluation, "h_p could not be evaluated on the search window");
    const auto found = numerics::maximize_unimodal(h_at, std::max(u_start, best_u - step), std::min(u_end, best_u + step), 1e-10);
    if (found.value >= best) return {e.to_x(found.arg), found.value};
    return {e.to_x(best_u), best};
}

namespace {

class LevelSearch {
public:
    LevelSearch(const PotentialEngine& e, double p, double tol) : e_(e), p_(p), tol_(tol) {
        const auto peak = peak_of_h(e, p);
        y_peak_ = peak.arg;
        h_peak_ = peak.value;
        u_peak_ = e.to_u(y_peak_);
        const auto range = e.lattice_range();
        u_left_ = range.first;
        u_cap_ = range.second - 1e-6;
        h_at_a_ = entrance(e) ? e.h_p(e.a(), p) : e.h_p(e.to_x(u_left_), p);
        floor_ = entrance(e) ? e.cbar_b() : std::max(e.cbar_b(), h_at_a_);
    }

    double y_peak() const { return y_peak_; }
    double h_peak() const { return h_peak_; }
    double floor() const { return floor_; }
    double h_at_a() const { return h_at_a_; }

    double h_u(double u) const { return e_.h_p(e_.to_x(u), p_); }

    double w_of(double L) const {
        if (entrance(e_) && L <= h_at_a_) return e_.a();
        const double f_lo = h_u(u_left_) - L;
        if (f_lo >= 0.0) return entrance(e_) ? e_.a() : e_.to_x(u_left_);
        const double f_hi = h_peak_ - L;
        if (f_hi <= 0.0) return y_peak_;
        const auto f = [&](double u) { return h_u(u) - L; };
        const double u = numerics::find_root(f, numerics::Bracket(u_left_, u_peak_, f_lo, f_hi), 1e-13);
        return e_.to_x(u);
    }

    double y_of(double L) const {
        const double f_lo = h_peak_ - L;
        if (f_lo <= 0.0) return y_peak_;
        double step = 0.25;
        double u_lo = u_peak_, u_hi = u_peak_;
        double f_hi = f_lo;
        while (f_hi > 0.0) {
            u_lo = u_hi;
            u_hi = std::min(u_peak_ + step, u_cap_);
            f_hi = h_u(u_hi) - L;
            if (f_hi > 0.0 && u_hi >= u_cap_)
                throw Error(ErrorKind::convergence, "level " + describe(L) + " of h_p is not reached before b");
            step *= 2.0;
        }
        const auto f = [&](double u) { return h_u(u) - L; };
        const double u = numerics::find_root(f, numerics::Bracket(u_lo, u_hi, h_u(u_lo) - L, f_hi), 1e-13);
        return e_.to_x(u);
    }

    ThresholdPolicy policy_at(double L) const { return {w_of(L), y_of(L)}; }

    double G(double L) const {
        const ThresholdPolicy pol = policy_at(L);
        if (!(pol.w < pol.y)) return -kInf;
        return F_p(e_, pol, p_) - L;
    }

private:
    const PotentialEngine& e_;
    double p_;
    double tol_;
    double y_peak_ = 0.0, h_peak_ = 0.0, u_peak_ = 0.0;
    double u_left_ = 0.0, u_cap_ = 0.0;
    double h_at_a_ = 0.0, floor_ = 0.0;
};

}  // namespace

OracleCheck maximize_F_p(const PotentialEngine& e, double p, const ClassicalOptions& options) {
    const auto [win_lo, win_hi] = e.search_window();
    const auto [lat_lo, lat_hi] = e.lattice_range();
    const double w_lo = std::max(lat_lo, win_lo - 1.0);
    const double w_hi = win_hi;
    const double d_hi = std::log(w_hi - w_lo + 4.0);
    const numerics::Box box{w_lo, w_hi, std::log(1e-3), d_hi};
    auto objective = [&](double uw, double d) {
        const double uy = uw + std::exp(d);
        if (uy >= lat_hi) return -kInf;
        return F_or_minus_inf(e, {e.to_x(uw), e.to_x(uy)}, p);
    };
    numerics::Maximize2dOptions opt;
    opt.grid = options.oracle_grid;
    opt.starts = options.oracle_starts;
    opt.tol = options.optimizer_tol;
    const auto r = numerics::maximize_2d(objective, box, opt);
    OracleCheck out;
    out.policy = {e.to_x(r.arg[0]), e.to_x(r.arg[0] + std::exp(r.arg[1]))};
    out.value = r.value;
    out.optimizer_warning = r.warning;
    if (entrance(e)) {
        // the w = a edge
        auto edge = [&](double uy) { return F_or_minus_inf(e, {e.a(), e.to_x(uy)}, p); };
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
            const auto g = numerics::maximize_unimodal(edge, best_u - step, best_u + step, options.optimizer_tol);
            const double v = std::max(g.value, best);
            const double u = g.value >= best ? g.arg : best_u;
            if (v >= out.value) {
                out.policy = {e.a(), e.to_x(u)};
                out.value = v;
            }
        }
    }
    return out;
}

ClassicalSolution solve_classical(const PotentialEngine& e, double p, const ClassicalOptions& options) {
    if (!std::isfinite(p)) throw Error(ErrorKind::precondition, "price must be finite");
    const LevelSearch search(e, p, options.tol);
    const double top = search.h_peak();
    const double floor = search.floor();
    if (!(top > floor + kFeasibilityMargin))
        throw Error(ErrorKind::precondition, "price " + describe(p) + " is not feasible: max h_p does not exceed the level floor");

    // G > 0 below the optimal level and G < 0 above it.
    const double span = top - floor;
    double L_neg = top - 1e-10 * std::max(1.0, std::abs(top));
    double g_neg = search.G(L_neg);
    if (!(g_neg < 0.0)) throw Error(ErrorKind::convergence, "level equation has no upper bracket end");
    double L_pos = 0.0, g_pos = -kInf;
    for (int k = 1; k <= 40; ++k) {
        const double L = floor + span * std::ldexp(1.0, -k);
        double g;
        try {
            g = search.G(L);
        } catch (const Error& err) {
            if (err.kind() == ErrorKind::precondition) throw;
            continue;
        }
        if (g > 0.0) {
            L_pos = L;
            g_pos = g;
            break;
        }
        L_neg = L;
        g_neg = g;
    }
    if (!(g_pos > 0.0))
        throw Error(ErrorKind::precondition,
                    "price " + describe(p) + " appears infeasible: no bracket for the level equation");
    const auto G = [&](double L) { return search.G(L); };
    const double L_star = numerics::find_root(G, numerics::Bracket(L_pos, L_neg, g_pos, g_neg), 0.01 * options.tol);

    ClassicalSolution sol;
    sol.p = p;
    sol.policy = search.policy_at(L_star);
    sol.value = F_p(e, sol.policy, p);
    sol.boundary_case = sol.policy.w == e.a() ? BoundaryCase::w_at_a : BoundaryCase::interior;
    sol.residual_w = sol.boundary_case == BoundaryCase::interior ? std::abs(e.h_p(sol.policy.w, p) - sol.value)
                                                                 : search.h_at_a() - sol.value;
    sol.residual_y = std::abs(e.h_p(sol.policy.y, p) - sol.value);
    sol.y_peak = search.y_peak();
    sol.h_peak = top;
    sol.level_floor = floor;

    if (options.cross_validate) {
        OracleCheck oracle = maximize_F_p(e, p, options);
        oracle.disagreement = sol.value - oracle.value;
        sol.oracle = oracle;
        if (std::abs(oracle.disagreement) > 10.0 * options.tol)
            throw Error(ErrorKind::consistency,
                        "level search value " + describe(sol.value) + " disagrees with the 2D maximizer value " +
                            describe(oracle.value));
    }
    return sol;
}

bool is_feasible(const PotentialEngine& e, double p, const ClassicalOptions& options) {
    const double threshold = e.cbar_b() + kFeasibilityMargin;
    // F_p < sup h_p, so a low peak settles the question
    if (!(peak_of_h(e, p).value > threshold)) return false;
    return maximize_F_p(e, p, options).value > threshold;
}

double p0(const PotentialEngine& e, const ClassicalOptions& options) {
    double lo = e.model().finite_b() ? e.market().K / (e.b() - e.a()) : 0.0;
    if (is_feasible(e, lo, options)) return lo;
    double hi = std::max(1.0, 2.0 * lo);
    int doublings = 0;
    while (!is_feasible(e, hi, options)) {
        lo = hi;
        hi *= 2.0;
        if (++doublings > 60) throw Error(ErrorKind::precondition, "no feasible price found below 2^60");
    }
    while (hi - lo > 1e-7 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        (is_feasible(e, mid, options) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace mfimpulse
