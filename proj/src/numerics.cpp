#include "mfimpulse/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>
#include <vector>

#include "mfimpulse/error.hpp"

namespace mfimpulse::numerics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double checked(const RealFn& f, double x) {
    const double v = f(x);
    if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "integrand is not finite at x = " << x;
        throw Error(ErrorKind::evaluation, msg.str());
    }
    return v;
}

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double lo, hi, value, error;
    bool operator<(const Segment& other) const { return error < other.error; }
};

Segment kronrod(const RealFn& f, double lo, double hi) {
    const double c = 0.5 * (lo + hi);
    const double h = 0.5 * (hi - lo);
    const double fc = checked(f, c);
    double kron = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const double sum = checked(f, c - dx) + checked(f, c + dx);
        kron += kWgk[j] * sum;
        if (j % 2 == 1) gauss += kWg[j / 2] * sum;
    }
    return {lo, hi, kron * h, std::abs((kron - gauss) * h)};
}

Integral adaptive_kronrod(const RealFn& f, double lo, double hi, const QuadratureSpec& spec) {
    std::priority_queue<Segment> heap;
    Segment first = kronrod(f, lo, hi);
    double total = first.value, error = first.error;
    int evaluations = 15;
    heap.push(first);
    int splits = 0;
    while (error > std::max(spec.abs_tol, spec.rel_tol * std::abs(total))) {
        if (splits >= spec.max_subdivisions)
            throw ConvergenceError("adaptive quadrature exceeded max subdivisions", total);
        Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.lo + worst.hi);
        if (mid <= worst.lo || mid >= worst.hi)
            throw ConvergenceError("adaptive quadrature interval underflow", total);
        Segment left = kronrod(f, worst.lo, mid);
        Segment right = kronrod(f, mid, worst.hi);
        evaluations += 30;
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++splits;
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    double sum = 0.0, err = 0.0;
    while (!heap.empty()) {
        sum += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    return {sum, err, evaluations};
}

// Double-exponential rule; nodes are generated by their distance to the
// nearer endpoint so that endpoint singularities are resolved.
Integral tanh_sinh(const RealFn& f, double lo, double hi, const QuadratureSpec& spec) {
    constexpr double t_max = 6.5;
    constexpr int max_level = 12;
    const double width = hi - lo;
    const double pi = std::numbers::pi;
    int evaluations = 0;

    auto node_pair = [&](double t) {
        // contribution of +t and -t
        const double q = std::exp(-pi * std::sinh(t));
        const double delta = width * q / (1.0 + q);
        const double weight = width * pi * std::cosh(t) * q / ((1.0 + q) * (1.0 + q));
        if (weight == 0.0 || delta == 0.0) return 0.0;
        double acc = 0.0;
        const double x_left = lo + delta;
        const double x_right = hi - delta;
        if (x_left > lo && x_left < hi) {
            acc += weight * checked(f, x_left);
            ++evaluations;
        }
        if (t > 0.0 && x_right < hi && x_right > lo) {
            acc += weight * checked(f, x_right);
            ++evaluations;
        }
        return acc;
    };

    double h = 1.0;
    double sum = 0.0;
    for (double t = 0.0; t <= t_max; t += 1.0) sum += node_pair(t);
    double estimate = sum * h;
    double change = kInf;
    for (int level = 1; level <= max_level; ++level) {
        h *= 0.5;
        for (double t = h; t <= t_max; t += 2.0 * h) sum += node_pair(t);
        const double next = sum * h;
        change = std::abs(next - estimate);
        estimate = next;
        if (level >= 3 && change <= std::max(spec.abs_tol, spec.rel_tol * std::abs(estimate)))
            return {estimate, change, evaluations};
    }
    throw ConvergenceError("tanh-sinh quadrature did not converge", estimate);
}

}  // namespace

Integral integrate(const RealFn& f, double lo, double hi, const QuadratureSpec& spec) {
    if (!(spec.abs_tol > 0.0) || !(spec.rel_tol > 0.0))
        throw Error(ErrorKind::precondition, "quadrature tolerances must be positive");
    if (std::isnan(lo) || std::isnan(hi))
        throw Error(ErrorKind::precondition, "integration limits must not be NaN");
    if (lo == hi) return {};
    if (lo > hi) {
        Integral r = integrate(f, hi, lo, spec);
        r.value = -r.value;
        return r;
    }
    if (std::isinf(lo) && std::isinf(hi)) {
        Integral left = integrate(f, lo, 0.0, spec);
        Integral right = integrate(f, 0.0, hi, spec);
        return {left.value + right.value, left.error + right.error,
                left.evaluations + right.evaluations};
    }
    if (std::isinf(hi)) {
        // x = lo + t / (1 - t)
        RealFn g = [&](double t) {
            const double one_minus = 1.0 - t;
            return f(lo + t / one_minus) / (one_minus * one_minus);
        };
        return tanh_sinh(g, 0.0, 1.0, spec);
    }
    if (std::isinf(lo)) {
        RealFn g = [&](double t) {
            const double one_minus = 1.0 - t;
            return f(hi - t / one_minus) / (one_minus * one_minus);
        };
        return tanh_sinh(g, 0.0, 1.0, spec);
    }
    switch (spec.mode) {
        case EndpointMode::left_singular:
        case EndpointMode::right_singular:
        case EndpointMode::right_infinite:
            return tanh_sinh(f, lo, hi, spec);
        case EndpointMode::regular:
            break;
    }
    return adaptive_kronrod(f, lo, hi, spec);
}

Bracket::Bracket(const RealFn& f, double lo, double hi) : Bracket(lo, hi, f(lo), f(hi)) {}

Bracket::Bracket(double lo, double hi, double f_lo, double f_hi)
    : lo_(lo), hi_(hi), f_lo_(f_lo), f_hi_(f_hi) {
    if (!(lo < hi)) throw Error(ErrorKind::precondition, "bracket requires lo < hi");
    if (!std::isfinite(f_lo) || !std::isfinite(f_hi))
        throw Error(ErrorKind::evaluation, "bracket end value is not finite");
    if (f_lo * f_hi > 0.0 || (std::signbit(f_lo) == std::signbit(f_hi) && f_lo != 0.0 && f_hi != 0.0))
        throw Error(ErrorKind::precondition, "bracket ends do not straddle a sign change");
}

double find_root(const RealFn& f, const Bracket& bracket, double tol, int max_iter) {
    double a = bracket.lo(), b = bracket.hi();
    double fa = bracket.f_lo(), fb = bracket.f_hi();
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    double c = a, fc = fa, d = b - a, e = d;
    for (int iter = 0; iter < max_iter; ++iter) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * tol;
        const double xm = 0.5 * (c - b);
        if (std::abs(xm) <= tol1 || fb == 0.0) return b;
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            const double s = fb / fa;
            double p, q;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                const double qa = fa / fc, r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::abs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
        fb = f(b);
        if (!std::isfinite(fb)) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "root function is not finite at x = " << b;
            throw Error(ErrorKind::evaluation, msg.str());
        }
    }
    throw ConvergenceError("root finder exceeded iteration limit", b);
}

ArgMax maximize_unimodal(const RealFn& f, double lo, double hi, double tol) {
    if (!(lo < hi)) throw Error(ErrorKind::precondition, "maximize_unimodal requires lo < hi");
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 >= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    return f1 >= f2 ? ArgMax{x1, f1} : ArgMax{x2, f2};
}

namespace {

struct Vertex {
    std::array<double, 2> x;
    double f;
};

bool better(const Vertex& lhs, const Vertex& rhs) {
    if (lhs.f != rhs.f) return lhs.f > rhs.f;
    return lhs.x < rhs.x;
}

Vertex nelder_mead(const RealFn2& f, const Box& box, Vertex start, std::array<double, 2> step,
                   double tol, int max_evaluations) {
    auto eval = [&](std::array<double, 2> x) {
        if (x[0] < box.lo0 || x[0] > box.hi0 || x[1] < box.lo1 || x[1] > box.hi1) return -kInf;
        const double v = f(x[0], x[1]);
        return std::isfinite(v) ? v : -kInf;
    };
    std::array<Vertex, 3> s;
    s[0] = start;
    for (int k = 0; k < 2; ++k) {
        auto x = start.x;
        x[k] += step[k];
        if (x[k] > (k == 0 ? box.hi0 : box.hi1)) x[k] = start.x[k] - step[k];
        s[k + 1] = {x, eval(x)};
    }
    int evaluations = 2;
    while (evaluations < max_evaluations) {
        std::sort(s.begin(), s.end(), better);
        const double diameter = std::max({std::hypot(s[1].x[0] - s[0].x[0], s[1].x[1] - s[0].x[1]),
                                          std::hypot(s[2].x[0] - s[0].x[0], s[2].x[1] - s[0].x[1])});
        if (diameter <= tol) break;
        std::array<double, 2> centroid = {0.5 * (s[0].x[0] + s[1].x[0]), 0.5 * (s[0].x[1] + s[1].x[1])};
        auto along = [&](double t) {
            return std::array<double, 2>{centroid[0] + t * (s[2].x[0] - centroid[0]),
                                         centroid[1] + t * (s[2].x[1] - centroid[1])};
        };
        Vertex reflected{along(-1.0), 0.0};
        reflected.f = eval(reflected.x);
        ++evaluations;
        if (reflected.f > s[0].f) {
            Vertex expanded{along(-2.0), 0.0};
            expanded.f = eval(expanded.x);
            ++evaluations;
            s[2] = expanded.f > reflected.f ? expanded : reflected;
        } else if (reflected.f > s[1].f) {
            s[2] = reflected;
        } else {
            const bool outside = reflected.f > s[2].f;
            Vertex contracted{along(outside ? -0.5 : 0.5), 0.0};
            contracted.f = eval(contracted.x);
            ++evaluations;
            const bool accept = outside ? contracted.f >= reflected.f : contracted.f > s[2].f;
            if (accept) {
                s[2] = contracted;
            } else {
                for (int k = 1; k < 3; ++k) {
                    for (int d = 0; d < 2; ++d) s[k].x[d] = s[0].x[d] + 0.5 * (s[k].x[d] - s[0].x[d]);
                    s[k].f = eval(s[k].x);
                    ++evaluations;
                }
            }
        }
    }
    std::sort(s.begin(), s.end(), better);
    return s[0];
}

}  // namespace

Maximize2dResult maximize_2d(const RealFn2& f, const Box& box, const Maximize2dOptions& options) {
    if (!(box.lo0 < box.hi0) || !(box.lo1 < box.hi1))
        throw Error(ErrorKind::precondition, "maximize_2d requires a non-degenerate box");
    if (options.grid < 2 || options.starts < 1)
        throw Error(ErrorKind::precondition, "maximize_2d requires grid >= 2 and starts >= 1");
    const int n = options.grid;
    const double d0 = (box.hi0 - box.lo0) / (n - 1);
    const double d1 = (box.hi1 - box.lo1) / (n - 1);
    std::vector<Vertex> grid;
    grid.reserve(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double x0 = i == n - 1 ? box.hi0 : box.lo0 + i * d0;
            const double x1 = j == n - 1 ? box.hi1 : box.lo1 + j * d1;
            const double v = f(x0, x1);
            grid.push_back({{x0, x1}, std::isfinite(v) ? v : -kInf});
        }
    }
    const size_t k = std::min<size_t>(options.starts, grid.size());
    std::partial_sort(grid.begin(), grid.begin() + static_cast<std::ptrdiff_t>(k), grid.end(), better);
    const Vertex grid_best = grid.front();
    if (!(grid_best.f > -kInf)) throw Error(ErrorKind::evaluation, "maximize_2d: objective not finite anywhere on the grid");

    Maximize2dResult result;
    Vertex best = grid_best;
    for (size_t s = 0; s < k; ++s) {
        if (!(grid[s].f > -kInf)) break;
        Vertex v = nelder_mead(f, box, grid[s], {0.5 * d0, 0.5 * d1}, options.tol, options.max_evaluations);
        ++result.starts;
        result.candidates.emplace_back(v.x, v.f);
        if (v.f > grid_best.f) ++result.improvements;
        if (better(v, best)) best = v;
    }
    result.arg = best.x;
    result.value = best.f;
    result.warning = result.improvements == 0;
    return result;
}

}  // namespace mfimpulse::numerics
