#include "mfimpulse/model.hpp"

#include <cmath>
#include <sstream>

#include "mfimpulse/error.hpp"

namespace mfimpulse {

namespace {

std::string describe(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

}  // namespace

const char* to_string(BoundaryKind kind) {
    return kind == BoundaryKind::entrance ? "entrance" : "natural";
}

void DiffusionModel::validate() const {
    if (!mu || !sigma) throw Error(ErrorKind::precondition, "model '" + name + "' lacks drift or diffusion");
    if (!std::isfinite(a)) throw Error(ErrorKind::precondition, "left boundary must be finite");
    if (!(a < x0 && x0 < b)) throw Error(ErrorKind::precondition, "reference point x0 must lie in (a, b)");
    const double mu_a = mu(a);
    if (!std::isfinite(mu_a)) throw Error(ErrorKind::precondition, "drift does not extend finitely to a");
    if (mu_a < 0.0) throw Error(ErrorKind::precondition, "left boundary attracting: mu(a) < 0");
    const double s0 = sigma(x0);
    if (!(s0 * s0 > 0.0) || !std::isfinite(s0))
        throw Error(ErrorKind::precondition, "diffusion coefficient vanishes at x0");
}

void MarketModel::validate() const {
    if (!c || !phi) throw Error(ErrorKind::precondition, "market lacks running reward or price function");
    if (!(K > 0.0) || !std::isfinite(K)) throw Error(ErrorKind::precondition, "fixed cost K must be positive");
}

DiffusionModel make_model(std::string name, double a, double b, double x0, RealFn mu, RealFn sigma,
                          BoundaryKind left_boundary) {
    DiffusionModel m{std::move(name), a, b, x0, std::move(mu), std::move(sigma), left_boundary, std::nullopt};
    m.validate();
    return m;
}

std::vector<std::string> builtin_model_names() { return {"logistic", "loksendal", "feller_logistic"}; }

DiffusionModel builtin_model(const FormSpec& spec) {
    DiffusionModel m;
    if (spec.name == "logistic") {
        // dX = r X (1 - X/delta) dt + sigma X dW on (0, inf)
        spec.expect_keys({"r", "delta", "sigma", "x0"});
        const double r = spec.get("r"), delta = spec.get("delta"), sig = spec.get("sigma");
        if (!(r > 0 && delta > 0 && sig > 0)) throw Error(ErrorKind::precondition, "logistic needs r, delta, sigma > 0");
        m = make_model("logistic", 0.0, std::numeric_limits<double>::infinity(), spec.get("x0"),
                       [=](double x) { return r * x * (1.0 - x / delta); },
                       [=](double x) { return sig * x; }, BoundaryKind::natural);
    } else if (spec.name == "loksendal") {
        // dX = r X (b - X) dt + sigma X (b - X) dW on (0, b)
        spec.expect_keys({"r", "b", "sigma", "x0"});
        const double r = spec.get("r"), cap = spec.get("b"), sig = spec.get("sigma");
        if (!(r > 0 && cap > 0 && sig > 0)) throw Error(ErrorKind::precondition, "loksendal needs r, b, sigma > 0");
        m = make_model("loksendal", 0.0, cap, spec.get("x0"),
                       [=](double x) { return r * x * (cap - x); },
                       [=](double x) { return sig * x * (cap - x); }, BoundaryKind::natural);
    } else if (spec.name == "feller_logistic") {
        // dX = r (1 + X/2)(1 - X/delta) dt + sigma sqrt(X) dW; entrance at 0 when 2r >= sigma^2
        spec.expect_keys({"r", "delta", "sigma", "x0"});
        const double r = spec.get("r"), delta = spec.get("delta"), sig = spec.get("sigma");
        if (!(r > 0 && delta > 0 && sig > 0))
            throw Error(ErrorKind::precondition, "feller_logistic needs r, delta, sigma > 0");
        if (2.0 * r < sig * sig)
            throw Error(ErrorKind::precondition, "feller_logistic needs 2r >= sigma^2 for an entrance boundary");
        m = make_model("feller_logistic", 0.0, std::numeric_limits<double>::infinity(), spec.get("x0"),
                       [=](double x) { return r * (1.0 + 0.5 * x) * (1.0 - x / delta); },
                       [=](double x) { return sig * std::sqrt(std::max(x, 0.0)); }, BoundaryKind::entrance);
    } else {
        throw Error(ErrorKind::precondition, "unknown model '" + spec.name + "'");
    }
    m.spec = spec;
    return m;
}

RealFn reward_form(const FormSpec& spec) {
    if (spec.name == "one_minus_exp") {
        spec.expect_keys({"rate"});
        const double k = spec.get("rate");
        return [=](double x) { return -std::expm1(-k * x); };
    }
    if (spec.name == "one_minus_exp_plus_power") {
        spec.expect_keys({"rate", "coef", "power"});
        const double k = spec.get("rate"), coef = spec.get("coef"), power = spec.get("power");
        return [=](double x) { return -std::expm1(-k * x) + coef * std::pow(x, power); };
    }
    if (spec.name == "constant") {
        spec.expect_keys({"value"});
        const double v = spec.get("value");
        return [=](double) { return v; };
    }
    throw Error(ErrorKind::precondition, "unknown running reward form '" + spec.name + "'");
}

RealFn price_form(const FormSpec& spec) {
    if (spec.name == "rational_sin") {
        // a / (a + b z + c sin z)
        spec.expect_keys({"a", "b", "c"});
        const double a = spec.get("a"), b = spec.get("b"), c = spec.get("c");
        return [=](double z) { return a / (a + b * z + c * std::sin(z)); };
    }
    if (spec.name == "rational_cos") {
        // n / (a + b z + c cos(k z))
        spec.expect_keys({"n", "a", "b", "c", "k"});
        const double n = spec.get("n"), a = spec.get("a"), b = spec.get("b"), c = spec.get("c"), k = spec.get("k");
        return [=](double z) { return n / (a + b * z + c * std::cos(k * z)); };
    }
    if (spec.name == "constant") {
        spec.expect_keys({"value"});
        const double v = spec.get("value");
        return [=](double) { return v; };
    }
    throw Error(ErrorKind::precondition, "unknown price form '" + spec.name + "'");
}

MarketModel make_market(const FormSpec& c, const FormSpec& phi, double K) {
    MarketModel market{reward_form(c), price_form(phi), K, c, phi};
    market.validate();
    return market;
}

double scale_density(const DiffusionModel& model, double x, const numerics::QuadratureSpec& spec) {
    if (!(x > model.a && x < model.b))
        throw Error(ErrorKind::precondition, "scale density requested outside (a, b) at x = " + describe(x));
    auto integrand = [&](double u) {
        const double sg = model.sigma(u);
        const double v = 2.0 * model.mu(u) / (sg * sg);
        if (!std::isfinite(v))
            throw Error(ErrorKind::evaluation, "2 mu / sigma^2 is not finite at x = " + describe(u));
        return v;
    };
    const double log_s = -numerics::integrate(integrand, model.x0, x, spec).value;
    const double s = std::exp(log_s);
    if (!std::isfinite(s) || s <= 0.0)
        throw Error(ErrorKind::evaluation, "scale density overflows at x = " + describe(x));
    return s;
}

double speed_density(const DiffusionModel& model, double x, const numerics::QuadratureSpec& spec) {
    const double sg = model.sigma(x);
    const double m = 2.0 / (sg * sg * scale_density(model, x, spec));
    if (!std::isfinite(m)) throw Error(ErrorKind::evaluation, "speed density is not finite at x = " + describe(x));
    return m;
}

}  // namespace mfimpulse
