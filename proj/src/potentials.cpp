#include "mfimpulse/potentials.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mfimpulse/error.hpp"
#include "mfimpulse/numerics.hpp"

namespace mfimpulse {

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kNodes = 20;
constexpr double kMaxLogS = 600.0;    // beyond this s or 1/s no longer fits comfortably in a double
constexpr double kFiniteRightGap = 1e-12;  // closest relative approach to a finite right boundary
constexpr int kMaxCells = 40000;

std::string describe(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

using Vec = std::array<double, kNodes>;
using Mat = std::array<Vec, kNodes>;

/// Chebyshev-Lobatto nodes on [-1, 1] (ascending), the indefinite-integration
/// matrix from -1.
struct Collocation {
    Vec t{};
    Mat integral{};

    Collocation() {
        constexpr int N = kNodes - 1;
        const long double pi = std::numbers::pi_v<long double>;
        std::array<long double, kNodes> theta{};
        for (int j = 0; j < kNodes; ++j) {
            theta[j] = pi * (N - j) / N;
            t[j] = static_cast<double>(std::cos(theta[j]));
        }
        t[0] = -1.0;
        t[N] = 1.0;
        // coefficient c_k = sum_j C[k][j] f_j, with f = sum_k c_k T_k
        std::array<std::array<long double, kNodes>, kNodes> C{};
        for (int k = 0; k <= N; ++k) {
            for (int j = 0; j <= N; ++j) {
                long double w = (j == 0 || j == N) ? 0.5L : 1.0L;
                long double v = 2.0L / N * w * std::cos(k * theta[j]);
                if (k == 0 || k == N) v *= 0.5L;
                C[k][j] = v;
            }
        }
        // I_k(t) = int_{-1}^t T_k
        auto Tm = [](int m, long double th) { return std::cos(m * th); };
        auto Tm_at_minus_one = [](int m) { return (m % 2 == 0) ? 1.0L : -1.0L; };
        for (int i = 0; i <= N; ++i) {
            const long double ti = std::cos(theta[i]);
            std::array<long double, kNodes> I{};
            I[0] = ti + 1.0L;
            I[1] = (ti * ti - 1.0L) / 2.0L;
            for (int k = 2; k <= N; ++k) {
                auto F = [&](long double tk1, long double tkm1) {
                    return (tk1 / (k + 1) - tkm1 / (k - 1)) / 2.0L;
                };
                I[k] = F(Tm(k + 1, theta[i]), Tm(k - 1, theta[i])) - F(Tm_at_minus_one(k + 1), Tm_at_minus_one(k - 1));
            }
            for (int j = 0; j <= N; ++j) {
                long double acc = 0.0L;
                for (int k = 0; k <= N; ++k) acc += I[k] * C[k][j];
                integral[i][j] = static_cast<double>(acc);
            }
        }
    }
};

const Collocation& collocation() {
    static const Collocation c;
    return c;
}

Vec integrate_nodes(const Vec& f, double half) {
    const auto& S = collocation().integral;
    Vec out{};
    for (int i = 0; i < kNodes; ++i) {
        double acc = 0.0;
        for (int j = 0; j < kNodes; ++j) acc += S[i][j] * f[j];
        out[i] = acc * half;
    }
    return out;
}

/// Integrals over a u-interval [u0, u1], relative to the left end:
///   L  = int 2 mu / sigma^2 dx        (so s = s(u0) e^-L)
///   Q1 = int (2 / sigma^2) e^L dx     (M increment times s(u0))
///   Qc = int c (2 / sigma^2) e^L dx
///   E0 = int e^-L dx                  (S increment over s(u0))
///   E1 = int e^-L Q1 dx,  Ec = int e^-L Qc dx
struct CellSums {
    double L = 0.0, Q1 = 0.0, Qc = 0.0, E0 = 0.0, E1 = 0.0, Ec = 0.0;
};

CellSums compose(const CellSums& A, const CellSums& B) {
    const double up = std::exp(A.L), down = std::exp(-A.L);
    return {A.L + B.L,
            A.Q1 + up * B.Q1,
            A.Qc + up * B.Qc,
            A.E0 + down * B.E0,
            A.E1 + down * A.Q1 * B.E0 + B.E1,
            A.Ec + down * A.Qc * B.E0 + B.Ec};
}

}  // namespace

struct PotentialEngine::Impl {
    struct Knot {
        double u, x, log_s, M, C, xi, g, S;
    };

    const DiffusionModel& model;
    const MarketModel& market;
    EngineOptions options;
    bool finite_b;
    double h;
    double u_ref;
    double u_cap;

    mutable std::mutex mutex;
    mutable std::vector<Knot> knots;  // knots[k] sits at index k + i_lo
    int i_lo = 0;
    mutable bool right_capped = false;

    // entrance-boundary values at x = a
    double xi_a = -kInf, g_a = -kInf, S_a = -kInf;

    double x_first = 0.0;  // leftmost knot
    double z0 = 0.0, z0_arg = 0.0;
    double window_lo = 0.0, window_hi = 0.0;

    mutable std::once_flag mass_once;
    mutable Divergence mass;
    mutable double cbar = 0.0;
    mutable bool cbar_known = false;

    Impl(const DiffusionModel& m, const MarketModel& mk, EngineOptions opt)
        : model(m), market(mk), options(opt), finite_b(m.finite_b()), h(opt.cell_width) {
        if (!(h > 0.0 && h <= 1.0)) throw Error(ErrorKind::precondition, "lattice spacing must lie in (0, 1]");
        u_ref = to_u(model.x0);
        u_cap = finite_b ? std::log((1.0 - kFiniteRightGap) / kFiniteRightGap) : u_ref + 40.0;
    }

    double to_x(double u) const {
        if (finite_b) {
            const double w = model.b - model.a;
            return u <= 0.0 ? model.a + w / (1.0 + std::exp(-u)) : model.b - w / (1.0 + std::exp(u));
        }
        return model.a + std::exp(u);
    }
    double dx_du(double u) const {
        if (finite_b) {
            const double w = model.b - model.a;
            return w / ((1.0 + std::exp(-u)) * (1.0 + std::exp(u)));
        }
        return std::exp(u);
    }
    double to_u(double x) const {
        if (finite_b) return std::log((x - model.a) / (model.b - x));
        return std::log(x - model.a);
    }

    CellSums panel(double u0, double u1, int depth) const {
        const auto& col = collocation();
        const double half = 0.5 * (u1 - u0);
        Vec ell{}, q{}, cq{}, xp{};
        for (int j = 0; j < kNodes; ++j) {
            const double v = u0 + (col.t[j] + 1.0) * half;
            const double x = to_x(v);
            const double d = dx_du(v);
            const double sg = model.sigma(x);
            const double inv = 2.0 / (sg * sg);
            ell[j] = model.mu(x) * inv * d;
            q[j] = inv * d;
            cq[j] = market.c(x) * q[j];
            xp[j] = d;
            if (!std::isfinite(ell[j]) || !std::isfinite(q[j]) || !std::isfinite(cq[j]))
                throw Error(ErrorKind::evaluation, "potential integrand is not finite at x = " + describe(x));
        }
        const Vec L = integrate_nodes(ell, half);
        double spread = 0.0;
        for (double v : L) spread = std::max(spread, std::abs(v));
        Vec eq{}, ecq{}, emx{};
        for (int j = 0; j < kNodes; ++j) {
            const double e = std::exp(L[j]);
            eq[j] = q[j] * e;
            ecq[j] = cq[j] * e;
            emx[j] = xp[j] / e;
        }
        // Panels are refined only where the integrands change by large factors;
        // analytic behaviour in u is otherwise resolved by the fixed node count.
        auto log_range = [](const Vec& f) {
            const double lo = std::abs(f.front()), hi = std::abs(f.back());
            return (lo > 0.0 && hi > 0.0) ? std::abs(std::log(hi / lo)) : 0.0;
        };
        const bool unresolved = spread > 2.0 || log_range(q) > 2.0 || log_range(xp) > 2.0;
        if (unresolved && depth < 40) {
            const double mid = 0.5 * (u0 + u1);
            return compose(panel(u0, mid, depth + 1), panel(mid, u1, depth + 1));
        }
        const Vec Q1 = integrate_nodes(eq, half);
        const Vec Qc = integrate_nodes(ecq, half);
        Vec f1{}, fc{};
        for (int j = 0; j < kNodes; ++j) {
            f1[j] = emx[j] * Q1[j];
            fc[j] = emx[j] * Qc[j];
        }
        const Vec E0 = integrate_nodes(emx, half);
        const Vec E1 = integrate_nodes(f1, half);
        const Vec Ec = integrate_nodes(fc, half);
        constexpr int last = kNodes - 1;
        return {L[last], Q1[last], Qc[last], E0[last], E1[last], Ec[last]};
    }

    static Knot advance(const Knot& k, const CellSums& c, double u1, double x1) {
        Knot n;
        n.u = u1;
        n.x = x1;
        n.log_s = k.log_s - c.L;
        const double inv_s = std::exp(-k.log_s);
        const double s = std::exp(k.log_s);
        n.M = k.M + c.Q1 * inv_s;
        n.C = k.C + c.Qc * inv_s;
        n.xi = k.xi + s * k.M * c.E0 + c.E1;
        n.g = k.g + s * k.C * c.E0 + c.Ec;
        n.S = k.S + s * c.E0;
        return n;
    }

    double knot_u(int i) const { return u_ref + i * h; }

    void build_left() {
        struct Cell {
            double u, x, log_s, dM, dC;
            CellSums sums;
        };
        std::vector<Cell> cells;  // cells[j] spans knots -(j+1) .. -j
        double log_s_right = 0.0;
        double total_M = 0.0, total_C = 0.0;
        // deep enough for the divergence test of the scale near a natural boundary
        const double rel_x = model.left_boundary == BoundaryKind::entrance ? 1e-15 : 1e-30;
        const double x_span = model.x0 - model.a;
        for (int i = -1;; --i) {
            if (-i > kMaxCells)
                throw Error(ErrorKind::precondition, "M[a, x] does not settle near the left boundary");
            const double u0 = knot_u(i), u1 = knot_u(i + 1);
            const double x0 = to_x(u0);
            if (!(x0 > model.a))
                throw Error(ErrorKind::precondition, "M[a, x] does not settle before reaching the left boundary");
            const CellSums c = panel(u0, u1, 0);
            const double log_s = log_s_right + c.L;
            if (log_s < -kMaxLogS)
                throw Error(ErrorKind::precondition, "scale density vanishes at the left boundary; M[a, x] is infinite");
            const double inv_s = std::exp(-log_s);
            Cell cell{u0, x0, log_s, c.Q1 * inv_s, c.Qc * inv_s, c};
            cells.push_back(cell);
            total_M += cell.dM;
            total_C += cell.dC;
            log_s_right = log_s;
            const bool decaying = cells.size() < 2 || cell.dM < cells[cells.size() - 2].dM;
            const bool settled = decaying && cell.dM <= 1e-17 * total_M &&
                                 std::abs(cell.dC) <= 1e-17 * std::max(std::abs(total_C), total_M);
            if (settled && ((x0 - model.a) <= rel_x * x_span || log_s > kMaxLogS)) break;
        }
        const int n = static_cast<int>(cells.size());
        i_lo = -n;
        knots.assign(static_cast<size_t>(n + 1), Knot{});

        // geometric remainder for the mass left of the lattice
        auto remainder = [](double last, double prev) {
            if (!(prev > 0.0) || !(std::abs(last) < std::abs(prev))) return 0.0;
            const double q = last / prev;
            return last * q / (1.0 - q);
        };
        double M = n >= 2 ? remainder(cells[n - 1].dM, cells[n - 2].dM) : 0.0;
        double C = n >= 2 ? remainder(cells[n - 1].dC, cells[n - 2].dC) : 0.0;
        for (int j = n - 1; j >= 0; --j) {
            Knot& k = knots[static_cast<size_t>(n - 1 - j)];
            k.u = cells[j].u;
            k.x = cells[j].x;
            k.log_s = cells[j].log_s;
            k.M = M;
            k.C = C;
            M += cells[j].dM;
            C += cells[j].dC;
        }
        x_first = knots.front().x;
        Knot& ref = knots[static_cast<size_t>(n)];
        ref = {u_ref, model.x0, 0.0, M, C, 0.0, 0.0, 0.0};
        // xi, g, S anchored at x0, filled leftwards
        double prev_dxi = 0.0, prev_dg = 0.0, prev_dS = 0.0;
        double dxi = 0.0, dg = 0.0, dS = 0.0;
        for (int j = 0; j < n; ++j) {
            Knot& left = knots[static_cast<size_t>(n - 1 - j)];
            const Knot& right = knots[static_cast<size_t>(n - j)];
            const CellSums& c = cells[j].sums;
            const double s = std::exp(left.log_s);
            prev_dxi = dxi;
            prev_dg = dg;
            prev_dS = dS;
            dxi = s * left.M * c.E0 + c.E1;
            dg = s * left.C * c.E0 + c.Ec;
            dS = s * c.E0;
            left.xi = right.xi - dxi;
            left.g = right.g - dg;
            left.S = right.S - dS;
        }
        if (model.left_boundary == BoundaryKind::entrance && n >= 2) {
            const Knot& first = knots.front();
            xi_a = first.xi - remainder(dxi, prev_dxi);
            g_a = first.g - remainder(dg, prev_dg);
            S_a = first.S - remainder(dS, prev_dS);
        }
    }

    // caller holds the lock
    bool extend_right_locked() const {
        if (right_capped) return false;
        const Knot& last = knots.back();
        const double u1 = last.u + h;
        if (u1 > u_cap || last.log_s > kMaxLogS || last.log_s < -kMaxLogS) {
            right_capped = true;
            return false;
        }
        const CellSums c = panel(last.u, u1, 0);
        const Knot next = advance(last, c, u1, to_x(u1));
        if (!std::isfinite(next.xi) || !std::isfinite(next.M) || !std::isfinite(next.log_s)) {
            right_capped = true;
            return false;
        }
        knots.push_back(next);
        return true;
    }

    /// Copy of knot i, extending the lattice if needed. Throws past the right cap.
    Knot knot(int i) const {
        std::lock_guard lock(mutex);
        while (i - i_lo >= static_cast<int>(knots.size())) {
            if (!extend_right_locked())
                throw Error(ErrorKind::evaluation, "state beyond the resolvable range near b: x = " + describe(to_x(knot_u(i))));
        }
        return knots[static_cast<size_t>(i - i_lo)];
    }

    int right_index() const {
        std::lock_guard lock(mutex);
        return i_lo + static_cast<int>(knots.size()) - 1;
    }

    bool try_extend() const {
        std::lock_guard lock(mutex);
        return extend_right_locked();
    }

    Point at_u(double u, double x) const {
        const int i = static_cast<int>(std::floor((u - u_ref) / h));
        if (i < i_lo)
            throw Error(ErrorKind::evaluation, "state below the resolved range near a: x = " + describe(x));
        const Knot k = knot(i);
        if (u == k.u) return {k.x, k.log_s, k.M, k.C, k.xi, k.g, k.S};
        const CellSums c = panel(k.u, u, 0);
        const Knot n = advance(k, c, u, x);
        return {x, n.log_s, n.M, n.C, n.xi, n.g, n.S};
    }

    Point at(double x) const {
        if (x == model.a && model.left_boundary == BoundaryKind::entrance)
            return {x, kInf, 0.0, 0.0, xi_a, g_a, S_a};
        if (!(x > model.a && x < model.b))
            throw Error(ErrorKind::precondition, "potentials requested outside (a, b) at x = " + describe(x));
        return at_u(to_u(x), x);
    }

    /// Limit of f(x) as x -> a along a + d 2^-k, Richardson-extrapolated.
    template <class F>
    double limit_at_a(F f) const {
        constexpr int levels = 6;
        const double d = 1e-4 * (model.x0 - model.a);
        std::array<std::array<double, levels>, levels> R{};
        for (int k = 0; k < levels; ++k) {
            R[k][0] = f(model.a + d * std::ldexp(1.0, -k));
            for (int j = 1; j <= k; ++j) {
                const double p = std::ldexp(1.0, j);
                R[k][j] = (p * R[k][j - 1] - R[k - 1][j - 1]) / (p - 1.0);
            }
        }
        return R[levels - 1][levels - 1];
    }

    static double ell_of(const Point& p) { return std::exp(-p.log_s) / p.M; }

    void locate_z0() {
        // scan knots until 1/xi' has peaked and fallen well below its peak
        double best = -kInf;
        int best_i = i_lo;
        for (int i = i_lo;; ++i) {
            if (i - i_lo >= static_cast<int>(knots.size()) && !try_extend()) break;
            const Knot k = knot(i);
            const double v = std::exp(-k.log_s) / k.M;
            if (v > best) {
                best = v;
                best_i = i;
            } else if (i > best_i + 8 && v < 1e-3 * best) {
                break;
            }
        }
        const int last = right_index();
        if (best_i == i_lo && model.left_boundary == BoundaryKind::entrance) {
            const double limit = limit_at_a([&](double x) { return ell_of(at(x)); });
            if (limit >= best) {
                z0 = limit;
                z0_arg = model.a;
                return;
            }
        }
        const double lo = knot_u(std::max(best_i - 1, i_lo));
        const double hi = knot_u(std::min(best_i + 1, last));
        const auto found = numerics::maximize_unimodal(
            [&](double u) { return ell_of(at_u(u, to_x(u))); }, lo, hi, 1e-10);
        z0 = std::max(found.value, best);
        z0_arg = found.value >= best ? to_x(found.arg) : to_x(knot_u(best_i));
    }

    void locate_window() {
        const Knot ref = knot(0);
        window_lo = knot_u(i_lo);
        for (int i = i_lo; i <= 0; ++i) {
            if (knot(i).M >= 1e-12 * ref.M) {
                window_lo = knot_u(i);
                break;
            }
        }
        window_hi = knot_u(right_index());
        const int peak = static_cast<int>(std::floor((to_u(std::max(z0_arg, x_first)) - u_ref) / h));
        for (int i = std::max(peak, i_lo);; ++i) {
            if (i > right_index() && !try_extend()) break;
            const Knot k = knot(i);
            if (std::exp(-k.log_s) / k.M <= 1e-6 * z0) {
                window_hi = k.u;
                break;
            }
            window_hi = k.u;
        }
    }

    void classify_mass() const {
        // sample M on whole-unit steps of u towards b
        const int block = std::max(1, static_cast<int>(std::lround(1.0 / h)));
        std::vector<double> samples;
        std::vector<double> Cs;
        std::vector<double> xs;
        for (int i = 0;; i += block) {
            if (i > right_index()) {
                bool grown = true;
                while (i > right_index() && (grown = try_extend())) {}
                if (!grown) break;
            }
            const Knot k = knot(i);
            samples.push_back(k.M);
            Cs.push_back(k.C);
            xs.push_back(k.x);
            const size_t n = samples.size();
            if (n >= 4) {
                const double d1 = samples[n - 1] - samples[n - 2];
                const double d2 = samples[n - 2] - samples[n - 3];
                const double d3 = samples[n - 3] - samples[n - 4];
                if (d1 < d2 && d2 < d3 && d1 <= 1e-16 * samples[n - 1]) break;
            }
        }
        const size_t n = samples.size();
        mass.growth = samples.back() / samples.front();
        mass.last_sample = samples.back();
        mass.last_x = xs.back();
        const double d1 = n >= 2 ? samples[n - 1] - samples[n - 2] : 0.0;
        const double d2 = n >= 3 ? samples[n - 2] - samples[n - 3] : 0.0;
        if (n >= 4 && d1 <= 1e-16 * samples.back() && d1 < d2) {
            mass.diverges = Verdict::fail;
            mass.note = "increments of M[a, x] decay geometrically towards b";
            cbar = Cs.back() / samples.back();
            cbar_known = true;
        } else if (mass.growth >= 1e3 && d1 >= d2) {
            mass.diverges = Verdict::pass;
            mass.note = "M[a, x] grows without decaying increments towards b";
            const double cb = market.c(model.b);
            if (!std::isfinite(cb)) throw Error(ErrorKind::evaluation, "c(b) is not finite");
            cbar = cb;
            cbar_known = true;
        } else {
            mass.diverges = Verdict::indeterminate;
            mass.note = "growth of M[a, x] towards b cannot be classified";
        }
    }
};

double PotentialEngine::Point::xi_prime() const { return std::exp(log_s) * M; }
double PotentialEngine::Point::g_prime() const { return std::exp(log_s) * C; }

PotentialEngine::PotentialEngine(std::shared_ptr<const DiffusionModel> model,
                                 std::shared_ptr<const MarketModel> market, EngineOptions options)
    : model_(std::move(model)), market_(std::move(market)) {
    if (!model_ || !market_) throw Error(ErrorKind::precondition, "engine needs a model and a market");
    model_->validate();
    if (!market_->c) throw Error(ErrorKind::precondition, "market lacks a running reward");
    impl_ = std::make_unique<Impl>(*model_, *market_, options);
    impl_->build_left();
    impl_->locate_z0();
    impl_->locate_window();
}

PotentialEngine::~PotentialEngine() = default;

PotentialEngine::Point PotentialEngine::at(double x) const { return impl_->at(x); }

double PotentialEngine::s(double x) const { return std::exp(at(x).log_s); }
double PotentialEngine::m(double x) const {
    const double sg = model_->sigma(x);
    return 2.0 / (sg * sg) * std::exp(-at(x).log_s);
}
double PotentialEngine::speed_measure(double x) const { return at(x).M; }
double PotentialEngine::scale_function(double x) const { return at(x).S; }
double PotentialEngine::xi(double x) const { return at(x).xi; }
double PotentialEngine::xi_prime(double x) const { return at(x).xi_prime(); }
double PotentialEngine::g(double x) const { return at(x).g; }
double PotentialEngine::g_prime(double x) const { return at(x).g_prime(); }
double PotentialEngine::r_p(double x, double p) const { return market_->c(x) + p * model_->mu(x); }

double PotentialEngine::h_p(double x, double p) const {
    if (x == model_->a && model_->left_boundary == BoundaryKind::entrance)
        return impl_->limit_at_a([&](double v) { return h_p(v, p); });
    const Point pt = at(x);
    if (!(pt.M > 0.0) || !std::isfinite(pt.log_s))
        throw Error(ErrorKind::evaluation, "xi' underflows at x = " + describe(x));
    const double v = (pt.C + p * std::exp(-pt.log_s)) / pt.M;
    if (!std::isfinite(v)) throw Error(ErrorKind::evaluation, "h_p is not finite at x = " + describe(x));
    return v;
}

double PotentialEngine::ell(double x) const {
    if (x == model_->a && model_->left_boundary == BoundaryKind::entrance)
        return impl_->limit_at_a([&](double v) { return ell(v); });
    const Point pt = at(x);
    return std::exp(-pt.log_s) / pt.M;
}

double PotentialEngine::z0() const { return impl_->z0; }
double PotentialEngine::z0_arg() const { return impl_->z0_arg; }

Divergence PotentialEngine::speed_mass_divergence() const {
    std::call_once(impl_->mass_once, [&] { impl_->classify_mass(); });
    return impl_->mass;
}

double PotentialEngine::cbar_b() const {
    const Divergence d = speed_mass_divergence();
    if (impl_->cbar_known) return impl_->cbar;
    if (impl_->options.cbar_override) return *impl_->options.cbar_override;
    throw Error(ErrorKind::precondition,
                "cannot decide whether M[a, b] is finite (" + d.note + "); supply cbar_override in the config");
}

double PotentialEngine::x_min() const {
    if (model_->left_boundary == BoundaryKind::entrance) return model_->a;
    return impl_->x_first;
}

double PotentialEngine::x_max() const { return impl_->to_x(impl_->u_cap); }

double PotentialEngine::to_u(double x) const { return impl_->to_u(x); }
double PotentialEngine::to_x(double u) const { return impl_->to_x(u); }

std::pair<double, double> PotentialEngine::search_window() const { return {impl_->window_lo, impl_->window_hi}; }

std::pair<double, double> PotentialEngine::lattice_range() const {
    return {impl_->knot_u(impl_->i_lo), impl_->u_cap};
}

}  // namespace mfimpulse
