#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mfimpulse/model.hpp"

namespace mfimpulse {

/// Outcome of a numeric test for an improper integral or limit.
enum class Verdict { pass, fail, indeterminate };
const char* to_string(Verdict v);

struct Divergence {
    Verdict diverges = Verdict::indeterminate;  // pass: certified divergent, fail: certified finite
    double growth = 0.0;                        // last sample over first sample
    double last_sample = 0.0;
    double last_x = 0.0;
    std::string note;
};

struct EngineOptions {
    double cell_width = 0.125;              // lattice spacing in the boundary-adapted coordinate
    std::optional<double> cbar_override;    // used when the mass of the speed measure cannot be classified
};

/// Potentials of a diffusion with a running reward: the scale density s, the
/// speed measure M[a, .], the integrals C[a, .] = int c dM, and
///   xi(x) = int_{x0}^x s(v) M[a, v] dv,   g(x) = int_{x0}^x s(v) C[a, v] dv.
///
/// Values are kept on a lattice in u, where x = a + e^u (b infinite) or
/// x = a + (b - a) / (1 + e^-u) (b finite). Each lattice cell is integrated by
/// Chebyshev-Lobatto collocation, and a point between knots is evaluated by
/// integrating the exact integrand from the nearest knot on its left.
/// The left part of the lattice is built eagerly; the right part grows on
/// demand under a lock, so concurrent readers see identical values.
class PotentialEngine {
public:
    struct Point {
        double x = 0.0;
        double log_s = 0.0;  // log s(x)
        double M = 0.0;      // M[a, x]
        double C = 0.0;      // int_a^x c dM
        double xi = 0.0;
        double g = 0.0;
        double S = 0.0;      // int_{x0}^x s

        double xi_prime() const;  // s M
        double g_prime() const;   // s C
    };

    PotentialEngine(std::shared_ptr<const DiffusionModel> model, std::shared_ptr<const MarketModel> market,
                    EngineOptions options = {});
    ~PotentialEngine();
    PotentialEngine(const PotentialEngine&) = delete;
    PotentialEngine& operator=(const PotentialEngine&) = delete;

    const DiffusionModel& model() const { return *model_; }
    const MarketModel& market() const { return *market_; }
    double a() const { return model_->a; }
    double b() const { return model_->b; }

    /// All potentials at x; x = a is allowed for an entrance left boundary.
    Point at(double x) const;

    double s(double x) const;
    double m(double x) const;
    double speed_measure(double x) const;  // M[a, x]
    double scale_function(double x) const; // S(x) = int_{x0}^x s
    double xi(double x) const;
    double xi_prime(double x) const;
    double g(double x) const;
    double g_prime(double x) const;
    double r_p(double x, double p) const;
    /// (g' + p) / xi'; at x = a on an entrance boundary this is the limit of
    /// int_a^x r_p dM / M[a, x], obtained by Richardson extrapolation.
    double h_p(double x, double p) const;
    /// 1 / xi'(x)
    double ell(double x) const;

    /// sup 1/xi' over (a, b).
    double z0() const;
    /// argmax of 1/xi'.
    double z0_arg() const;
    /// Mean of c under the normalized speed measure, or c(b) when M[a, b] is infinite.
    double cbar_b() const;
    /// Divergence test for M[a, b].
    Divergence speed_mass_divergence() const;

    /// Smallest and largest x at which the lattice resolves the potentials.
    double x_min() const;
    double x_max() const;
    /// Lattice coordinate and its inverse.
    double to_u(double x) const;
    double to_x(double u) const;
    /// A u-window holding essentially all the structure of h_p and 1/xi':
    /// from where M[a, x] is negligible to where 1/xi' is negligible against z0.
    std::pair<double, double> search_window() const;
    /// u of the leftmost lattice knot and the largest admissible u.
    std::pair<double, double> lattice_range() const;

private:
    struct Impl;
    std::shared_ptr<const DiffusionModel> model_;
    std::shared_ptr<const MarketModel> market_;
    std::unique_ptr<Impl> impl_;
};

}  // namespace mfimpulse
