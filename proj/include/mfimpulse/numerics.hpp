#pragma once

#include <array>
#include <functional>
#include <utility>
#include <vector>

namespace mfimpulse::numerics {

using RealFn = std::function<double(double)>;

enum class EndpointMode { regular, left_singular, right_singular, right_infinite };

struct QuadratureSpec {
    double abs_tol = 1e-10;
    double rel_tol = 1e-9;
    int max_subdivisions = 2000;
    EndpointMode mode = EndpointMode::regular;
};

struct Integral {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
};

/// Integral of f over [lo, hi]. Either end may be infinite; an infinite end
/// switches to the reciprocal transform regardless of `spec.mode`.
/// Throws ConvergenceError (carrying the best estimate) when the tolerance is missed.
/// f only sees x, so near a singular endpoint hi != 0 distances below one ulp of
/// hi are lost; for a 1/sqrt singularity that costs about sqrt(eps) * |hi|.
Integral integrate(const RealFn& f, double lo, double hi, const QuadratureSpec& spec = {});

/// Sign change of f over [lo, hi], certified at construction.
class Bracket {
public:
    Bracket(const RealFn& f, double lo, double hi);
    Bracket(double lo, double hi, double f_lo, double f_hi);

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double f_lo() const { return f_lo_; }
    double f_hi() const { return f_hi_; }

private:
    double lo_, hi_, f_lo_, f_hi_;
};

/// Brent's method. Returns x with final bracket width <= tol (or an exact zero).
double find_root(const RealFn& f, const Bracket& bracket, double tol = 1e-9, int max_iter = 300);

struct ArgMax {
    double arg = 0.0;
    double value = 0.0;
};

/// Golden-section search on [lo, hi]; exact for strictly unimodal f up to tol.
ArgMax maximize_unimodal(const RealFn& f, double lo, double hi, double tol = 1e-7);

using RealFn2 = std::function<double(double, double)>;

struct Box {
    double lo0, hi0, lo1, hi1;
};

struct Maximize2dOptions {
    int grid = 48;           // points per axis in the coarse scan
    int starts = 6;          // refinements launched from the best grid points
    double tol = 1e-7;       // simplex size tolerance in box coordinates
    int max_evaluations = 4000;  // per start
};

struct Maximize2dResult {
    std::array<double, 2> arg{};
    double value = 0.0;
    int starts = 0;
    int improvements = 0;   // starts that beat the grid best
    bool warning = false;   // no start improved on the grid best
    std::vector<std::pair<std::array<double, 2>, double>> candidates;  // end point of every start
};

/// Coarse grid scan followed by Nelder-Mead from the top grid points.
/// Non-finite values of f are treated as -inf. Deterministic: ties resolve to
/// the lexicographically smallest argument.
Maximize2dResult maximize_2d(const RealFn2& f, const Box& box, const Maximize2dOptions& options = {});

}  // namespace mfimpulse::numerics
