#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mfimpulse/forms.hpp"
#include "mfimpulse/numerics.hpp"

namespace mfimpulse {

using RealFn = std::function<double(double)>;

enum class BoundaryKind { entrance, natural };

const char* to_string(BoundaryKind kind);

struct DiffusionModel {
    std::string name;
    double a = 0.0;
    double b = std::numeric_limits<double>::infinity();
    double x0 = 1.0;
    RealFn mu;
    RealFn sigma;
    BoundaryKind left_boundary = BoundaryKind::natural;
    std::optional<FormSpec> spec;  // set for builtin models

    bool finite_b() const { return b < std::numeric_limits<double>::infinity(); }
    /// Throws a precondition error when a, b, x0 or the coefficients are unusable.
    void validate() const;
};

struct MarketModel {
    RealFn c;
    RealFn phi;
    double K = 0.0;
    std::optional<FormSpec> c_spec;
    std::optional<FormSpec> phi_spec;

    void validate() const;
};

/// Extension point for user models given as a drift/diffusion pair.
DiffusionModel make_model(std::string name, double a, double b, double x0, RealFn mu, RealFn sigma,
                          BoundaryKind left_boundary);

/// Builtin diffusions: `logistic`, `loksendal`, `feller_logistic`.
DiffusionModel builtin_model(const FormSpec& spec);
std::vector<std::string> builtin_model_names();

/// Running-reward forms: `one_minus_exp`, `one_minus_exp_plus_power`, `constant`.
RealFn reward_form(const FormSpec& spec);
/// Price forms: `rational_sin`, `rational_cos`, `constant`.
RealFn price_form(const FormSpec& spec);

MarketModel make_market(const FormSpec& c, const FormSpec& phi, double K);

/// s(x) by adaptive quadrature of 2 mu / sigma^2 from x0.
double scale_density(const DiffusionModel& model, double x, const numerics::QuadratureSpec& spec = {});
/// m(x) = 2 / (sigma^2(x) s(x)).
double speed_density(const DiffusionModel& model, double x, const numerics::QuadratureSpec& spec = {});

}  // namespace mfimpulse
