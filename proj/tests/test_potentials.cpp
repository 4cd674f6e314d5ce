#include <doctest.h>

#include <cmath>
#include <random>
#include <thread>

#include "fixtures.hpp"
#include "mfimpulse/error.hpp"
#include "mfimpulse/numerics.hpp"
#include "mfimpulse/potentials.hpp"
#include "oracles.hpp"

using namespace mfimpulse;
using doctest::Approx;

namespace {

std::unique_ptr<PotentialEngine> make(const char* model, const char* c, const char* phi = "rational_sin{a=3,b=1,c=2}",
                                      double K = 0.5) {
    return std::make_unique<PotentialEngine>(
        std::make_shared<const DiffusionModel>(builtin_model(FormSpec::parse(model))),
        std::make_shared<const MarketModel>(make_market(FormSpec::parse(c), FormSpec::parse(phi), K)));
}

constexpr const char* kLogistic = "logistic{r=5,delta=5,sigma=1,x0=1}";
constexpr const char* kLoksendal = "loksendal{r=0.75,b=5,sigma=0.5,x0=2.5}";

}  // namespace

TEST_CASE("potentials vanish at the reference point") {
    for (const char* ex : {"logistic", "loksendal", "feller_logistic"}) {
        const auto& e = fixture::shared(ex);
        CHECK(e.xi(e.model().x0) == 0.0);
        CHECK(e.g(e.model().x0) == 0.0);
        CHECK(e.s(e.model().x0) == Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("logistic: s, m, M and xi' against the closed forms") {
    const auto& e = fixture::shared("logistic");
    const oracle::Logistic ref;
    for (int i = 1; i <= 60; ++i) {
        const double x = 0.15 * i;
        CHECK(e.s(x) == Approx(ref.s(x)).epsilon(1e-11));
        CHECK(e.m(x) == Approx(ref.m(x)).epsilon(1e-11));
        CHECK(e.speed_measure(x) == Approx(ref.M(x)).epsilon(1e-11));
        CHECK(e.xi_prime(x) == Approx(ref.xi_prime(x)).epsilon(1e-11));
    }
    // frozen value of the incomplete-gamma route
    CHECK(e.speed_measure(1.0) == Approx(0.276335581577411).epsilon(1e-12));
}

TEST_CASE("Loksendal: s and m against the closed forms") {
    const auto& e = fixture::shared("loksendal");
    const oracle::Loksendal ref;
    for (int i = 1; i < 100; ++i) {
        const double x = 0.05 * i;
        CHECK(e.s(x) == Approx(ref.s(x)).epsilon(1e-11));
        CHECK(e.m(x) == Approx(ref.m(x)).epsilon(1e-11));
    }
    CHECK(e.speed_measure(1.0) == Approx(ref.M(1.0)).epsilon(1e-10));
}

TEST_CASE("xi strictly increasing, g nondecreasing on a 200-point grid") {
    for (const char* ex : {"logistic", "loksendal", "feller_logistic"}) {
        const auto& e = fixture::shared(ex);
        const auto [lo, hi] = e.search_window();
        double px = -INFINITY, pg = -INFINITY;
        for (int i = 0; i < 200; ++i) {
            const double x = e.to_x(lo + (hi - lo) * i / 199.0);
            const double xi = e.xi(x), g = e.g(x);
            CHECK(xi > px);
            CHECK(g >= pg);
            px = xi;
            pg = g;
        }
    }
}

TEST_CASE("xi' agrees with a central difference of xi") {
    for (const char* ex : {"logistic", "loksendal"}) {
        const auto& e = fixture::shared(ex);
        const auto [lo, hi] = e.search_window();
        for (int i = 0; i < 100; ++i) {
            const double x = e.to_x(lo + (hi - lo) * (i + 0.5) / 100.0);
            const double h = 1e-5 * std::min(x - e.a(), e.model().finite_b() ? e.b() - x : x);
            const double xp = x + h, xm = x - h;  // the realised step, not 2h
            const double fd = (e.xi(xp) - e.xi(xm)) / (xp - xm);
            CHECK(fd == Approx(e.xi_prime(x)).epsilon(1e-6));
        }
    }
}

TEST_CASE("c = 1 makes g coincide with xi") {
    const auto e = make(kLogistic, "constant{value=1}");
    for (double x : {0.1, 0.5, 2.0, 4.0, 7.5, 12.0}) {
        CHECK(e->g(x) == Approx(e->xi(x)).epsilon(1e-12));
        CHECK(e->h_p(x, 0.0) == Approx(1.0).epsilon(1e-12));
    }
    CHECK(e->cbar_b() == Approx(1.0).epsilon(1e-12));
    const auto k = make(kLoksendal, "constant{value=0.3}", "rational_cos{n=2,a=3,b=1,c=1,k=2}", 0.2);
    CHECK(k->cbar_b() == 0.3);
    CHECK(k->h_p(2.0, 0.0) == Approx(0.3).epsilon(1e-12));
}

TEST_CASE("r_p examples") {
    const auto& e = fixture::shared("logistic");
    CHECK(e.r_p(1.7, 0.0) == Approx(-std::expm1(-1.7)));
    CHECK(e.r_p(1.0, 0.463276) == Approx(1 - std::exp(-1.0) + 0.463276 * 5 * 1 * (1 - 1 / 5.0)).epsilon(1e-15));
    const DiffusionModel flat = make_model("driftless", 0.0, INFINITY, 1.0, [](double) { return 0.0; },
                                           [](double x) { return x; }, BoundaryKind::natural);
    const auto cfg = example_config("logistic");
    // r_p does not need the lattice, only mu and c
    CHECK(cfg.market().c(2.0) + 0.7 * flat.mu(2.0) == cfg.market().c(2.0));
}

TEST_CASE("cbar(b)") {
    const oracle::Logistic ref;
    CHECK(fixture::shared("logistic").cbar_b() == Approx(ref.cbar()).epsilon(1e-11));
    CHECK(ref.cbar() == Approx(0.973988).epsilon(1e-6));
    const auto& k = fixture::shared("loksendal");
    CHECK(k.cbar_b() == Approx(1 - std::exp(-15.0) + 0.01 * std::pow(5.0, 0.25)).epsilon(1e-15));
    CHECK(k.speed_mass_divergence().diverges == Verdict::pass);
    CHECK(fixture::shared("logistic").speed_mass_divergence().diverges == Verdict::fail);
}

TEST_CASE("h_p tends to cbar(b) near b; g'/xi' as well") {
    for (const char* ex : {"logistic", "loksendal"}) {
        const auto& e = fixture::shared(ex);
        const double far = e.model().finite_b() ? e.b() - 1e-7 : 40.0;
        for (double p : {0.0, 0.3, 1.0})
            CHECK(std::abs(e.h_p(far, p) - e.cbar_b()) <= 1e-4);
        CHECK(std::abs(e.g_prime(far) / e.xi_prime(far) - e.cbar_b()) <= 1e-4);
    }
}

TEST_CASE("h_p is Lipschitz in p with constant z0, and h_p - h_0 = p / xi'") {
    std::mt19937_64 rng(3);
    for (const char* ex : {"logistic", "loksendal"}) {
        const auto& e = fixture::shared(ex);
        const auto [lo, hi] = e.search_window();
        std::uniform_real_distribution<double> U(lo, hi), P(0.0, 2.0);
        for (int i = 0; i < 50; ++i) {
            const double x = e.to_x(U(rng)), p1 = P(rng), p2 = P(rng);
            CHECK(std::abs(e.h_p(x, p1) - e.h_p(x, p2)) <= e.z0() * std::abs(p1 - p2) * (1 + 1e-12));
            CHECK(e.h_p(x, p1) - e.h_p(x, 0.0) == Approx(p1 / e.xi_prime(x)).epsilon(1e-9));
        }
    }
}

TEST_CASE("z0: logistic bounds and the first-order route") {
    const oracle::Logistic ref;
    auto f = [&](double x) { return ref.xstar_residual(x); };
    const double xs = numerics::find_root(f, numerics::Bracket(f, 2.5, 5.0), 1e-14);
    const double z0_ref = ref.z0_from_xstar(xs);
    const auto& e = fixture::shared("logistic");
    CHECK(e.z0() > 0.0);
    CHECK(e.z0() < 6.25);
    CHECK(std::abs(e.z0() - z0_ref) <= 1e-8);
    CHECK(e.z0() == Approx(6.089029778).epsilon(1e-9));
    CHECK(std::abs(e.z0_arg() - xs) <= 1e-4);
    CHECK(e.ell(e.z0_arg()) == Approx(e.z0()).epsilon(1e-14));
}

TEST_CASE("z0 does not depend on c") {
    const auto a = make(kLogistic, "constant{value=0}");
    const auto b = make(kLogistic, "one_minus_exp{rate=1}");
    CHECK(a->z0() == Approx(b->z0()).epsilon(1e-14));
    const auto c = make(kLoksendal, "constant{value=0}", "rational_cos{n=2,a=3,b=1,c=1,k=2}", 0.2);
    CHECK(c->z0() == Approx(fixture::shared("loksendal").z0()).epsilon(1e-14));
}

TEST_CASE("first-passage time and reward representations") {
    const oracle::Logistic rl;
    const oracle::Loksendal rk;
    std::mt19937_64 rng(5);
    auto check_model = [&](const PotentialEngine& e, const oracle::Reference& ref, double lo, double hi) {
        std::uniform_real_distribution<double> U(lo, hi);
        for (int i = 0; i < 6; ++i) {
            double w = U(rng), y = U(rng);
            if (w > y) std::swap(w, y);
            if (y - w < 0.05) continue;
            const double tau = oracle::gk([&](double u) { return ref.S(u, y) * ref.m(u); }, w, y) + ref.S(w, y) * ref.M(w);
            CHECK(e.xi(y) - e.xi(w) == Approx(tau).epsilon(1e-6));
            const double reward = oracle::gk([&](double u) { return ref.S(u, y) * ref.c(u) * ref.m(u); }, w, y) +
                                  ref.S(w, y) * ref.C(w);
            CHECK(e.g(y) - e.g(w) == Approx(reward).epsilon(1e-6));
        }
    };
    check_model(fixture::shared("logistic"), rl, 0.3, 7.0);
    check_model(fixture::shared("loksendal"), rk, 0.5, 4.9);
}

TEST_CASE("entrance boundary: potentials at a and the limit of h_p") {
    const auto& e = fixture::shared("feller_logistic");
    CHECK(e.speed_measure(e.a()) == 0.0);
    CHECK(std::isfinite(e.xi(e.a())));
    CHECK(std::isfinite(e.g(e.a())));
    // the ratio int_a^x r_p dM / M[a, x] tends to r_p(a) = c(0) + p mu(0) = p
    for (double p : {0.5, 2.0, 4.0}) {
        CHECK(e.h_p(e.a(), p) == Approx(p).epsilon(1e-6));
        CHECK(e.h_p(1e-6, p) == Approx(p).epsilon(1e-4));
    }
}

TEST_CASE("evaluation outside the resolved range is an error") {
    const auto& e = fixture::shared("logistic");
    CHECK_THROWS_AS(e.xi(-1.0), Error);
    CHECK_THROWS_AS(e.xi(1e-300), Error);
    const auto& k = fixture::shared("loksendal");
    CHECK_THROWS_AS(k.xi(5.0), Error);
    CHECK_THROWS_AS(k.xi(0.0), Error);
}

TEST_CASE("concurrent lazy growth yields the same values as sequential growth") {
    const auto seq = fixture::engine("logistic");
    const auto par = fixture::engine("logistic");
    std::vector<double> xs;
    for (int i = 0; i < 64; ++i) xs.push_back(2.0 + 0.7 * i);
    std::vector<double> a(xs.size()), b(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) a[i] = seq->xi(xs[i]) + seq->g(xs[i]);
    std::vector<std::thread> pool;
    for (int t = 0; t < 4; ++t)
        pool.emplace_back([&, t] {
            for (size_t i = xs.size() - 1 - t; i < xs.size(); i -= 4) b[i] = par->xi(xs[i]) + par->g(xs[i]);
        });
    for (auto& th : pool) th.join();
    for (size_t i = 0; i < xs.size(); ++i) CHECK(a[i] == b[i]);
}
