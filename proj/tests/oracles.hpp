#pragma once
// Closed-form and nested-quadrature references for the two builtin models.
// Everything here is independent of the lattice engine: densities come from
// the textbook formulas and integrals from Boost.Math.

#include <cmath>
#include <functional>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace oracle {

inline double gk(const std::function<double(double)>& f, double lo, double hi) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 12, 1e-12);
}

inline double ts(const std::function<double(double)>& f, double lo, double hi) {
    thread_local boost::math::quadrature::tanh_sinh<double> q(15);
    auto g = [&f](double x) { return f(x); };
    return q.integrate(g, lo, hi, 1e-13);
}

struct Reference {
    virtual ~Reference() = default;
    virtual double s(double x) const = 0;
    virtual double m(double x) const = 0;
    virtual double M(double x) const = 0;  // M(a, x]
    virtual double c(double x) const = 0;
    double a = 0.0;
    double K = 0.0;

    double C(double x) const {  // int_a^x c dM
        return ts([&](double u) { return c(u) * m(u); }, a, x);
    }
    double xi_prime(double x) const { return s(x) * M(x); }
    double Bxi(double w, double y) const {
        return gk([&](double v) { return s(v) * M(v); }, w, y);
    }
    double Bg(double w, double y) const {
        return gk([&](double v) { return s(v) * C(v); }, w, y);
    }
    double F(double w, double y, double p) const { return (Bg(w, y) + p * (y - w) - K) / Bxi(w, y); }
    double S(double u, double v) const { return gk([&](double t) { return s(t); }, u, v); }
};

/// dX = rX(1 - X/delta)dt + sigma X dW, x0 = 1, c = 1 - e^{-x}
struct Logistic : Reference {
    double r = 5, delta = 5, sigma = 1;
    double alpha, theta;
    Logistic(double r_ = 5, double delta_ = 5, double sigma_ = 1, double K_ = 0.5) : r(r_), delta(delta_), sigma(sigma_) {
        alpha = 2 * r / (sigma * sigma);
        theta = 2 * r / (delta * sigma * sigma);
        K = K_;
    }
    double s(double x) const override { return std::pow(x, -alpha) * std::exp(theta * (x - 1)); }
    double m(double x) const override { return 2 / (sigma * sigma) * std::pow(x, alpha - 2) * std::exp(-theta * (x - 1)); }
    double M(double x) const override {
        return 2 * std::pow(theta, 1 - alpha) * std::exp(theta) / (sigma * sigma) *
               boost::math::tgamma_lower(alpha - 1, theta * x);
    }
    double M_total() const {
        return 2 * std::pow(theta, 1 - alpha) * std::exp(theta) / (sigma * sigma) * std::tgamma(alpha - 1);
    }
    double c(double x) const override { return -std::expm1(-x); }
    double cbar() const { return 1 - std::pow(2 * r / (2 * r + delta * sigma * sigma), alpha - 1); }
    /// residual of the first-order equation for the maximiser of 1/xi'
    double xstar_residual(double x) const {
        return std::exp(theta * x) * boost::math::tgamma_lower(alpha - 1, theta * x) * (alpha - theta * x) -
               std::pow(theta, alpha - 1) * std::pow(x, alpha - 1);
    }
    double z0_from_xstar(double x) const { return sigma * sigma / 2 * x * (alpha - theta * x); }
};

/// dX = rX(b - X)dt + sigma X(b - X)dW, reference point x0, c = 1 - e^{-3x} + 0.01 x^{1/4}
struct Loksendal : Reference {
    double r = 0.75, b = 5, sigma = 0.5, x0 = 2.5;
    double beta;
    explicit Loksendal(double x0_ = 2.5, double K_ = 0.2) : x0(x0_) {
        beta = 2 * r / (b * sigma * sigma);
        K = K_;
    }
    double s(double x) const override {
        return std::pow(x0, beta) * std::pow(b - x0, -beta) * std::pow(b - x, beta) * std::pow(x, -beta);
    }
    double m(double x) const override {
        return 2 / (sigma * sigma) * std::pow(x0, -beta) * std::pow(b - x0, beta) * std::pow(x, beta - 2) *
               std::pow(b - x, -beta - 2);
    }
    double M(double x) const override {
        return ts([&](double u) { return m(u); }, 0.0, x);
    }
    double c(double x) const override { return 1 - std::exp(-3 * x) + 0.01 * std::pow(x, 0.25); }
};

inline double phi_logistic(double z) { return 3 / (3 + z + 2 * std::sin(z)); }
inline double phi_loksendal(double z) { return 2 / (3 + z + std::cos(2 * z)); }

}  // namespace oracle
