#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "mfimpulse/error.hpp"
#include "mfimpulse/mfc.hpp"
#include "mfimpulse/mfg.hpp"
#include "oracles.hpp"

using namespace mfimpulse;
using doctest::Approx;

namespace {

const EquilibriumReport& mfg(const std::string& ex) {
    static std::map<std::string, EquilibriumReport> cache;
    auto it = cache.find(ex);
    if (it == cache.end()) it = cache.emplace(ex, solve_mfg(fixture::shared(ex))).first;
    return it->second;
}

const OptimumReport& mfc(const std::string& ex) {
    static std::map<std::string, OptimumReport> cache;
    auto it = cache.find(ex);
    if (it == cache.end()) it = cache.emplace(ex, solve_mfc(fixture::shared(ex))).first;
    return it->second;
}

double phi(const PotentialEngine& e, double z) { return e.market().phi(z); }

}  // namespace

TEST_CASE("MFG logistic equilibrium") {
    const auto& r = mfg("logistic");
    const auto& fp = r.primary;
    CHECK(std::abs(fp.policy.w - 1.279499) <= 1e-3);
    CHECK(std::abs(fp.policy.y - 5.368681) <= 1e-3);
    CHECK(std::abs(fp.z - 5.221743) <= 1e-3);
    CHECK(std::abs(fp.p - 0.463276) <= 1e-3);
    CHECK(std::abs(fp.value - 2.674072) <= 1e-3);
    CHECK(fp.residual <= 1e-6);
    CHECK(std::abs(fp.value_recheck - fp.value) <= 1e-9);
    CHECK_FALSE(r.jump_flag);
    CHECK(r.fixed_points.size() >= 1);

    const auto& e = fixture::shared("logistic");
    const auto m = evaluate_map(e, fp.z);
    CHECK(std::abs(m.mapped - fp.z) <= 1e-6);
    CHECK(m.price == Approx(phi(e, fp.z)).epsilon(1e-15));
}

TEST_CASE("the map sends [0, z0] into itself") {
    for (const char* ex : {"logistic", "loksendal"}) {
        const auto& r = mfg(ex);
        REQUIRE(r.trace.size() >= 2);
        for (const auto& t : r.trace) {
            CHECK(t.mapped > 0.0);
            CHECK(t.mapped <= r.z0 * (1 + 1e-12));
        }
        const auto& e = fixture::shared(ex);
        CHECK(evaluate_map(e, 0.0).mapped > 0.0);
        CHECK(evaluate_map(e, e.z0()).mapped < e.z0());
    }
}

TEST_CASE("map at the MFC rate reproduces the deviation thresholds") {
    const auto& e = fixture::shared("logistic");
    const auto m = evaluate_map(e, 4.559874);
    CHECK(std::abs(m.policy.w - 1.326678) <= 1e-3);
    CHECK(std::abs(m.policy.y - 5.216696) <= 1e-3);
}

TEST_CASE("every reported fixed point is self-consistent") {
    for (const char* ex : {"logistic", "loksendal", "feller_logistic"}) {
        const auto& e = fixture::shared(ex);
        for (const auto& fp : mfg(ex).fixed_points) {
            CHECK(fp.residual <= 1e-6);
            CHECK(zeta(e, fp.policy) == Approx(fp.z).epsilon(1e-6));
            CHECK(fp.p == Approx(phi(e, fp.z)).epsilon(1e-12));
            CHECK(F_p(e, fp.policy, fp.p) == Approx(fp.value).epsilon(1e-9));
            const auto s = solve_classical(e, fp.p);
            CHECK(std::abs(s.policy.w - fp.policy.w) <= 1e-6);
            CHECK(std::abs(s.policy.y - fp.policy.y) <= 1e-6);
        }
    }
}

TEST_CASE("trace CSV layout") {
    std::ostringstream os;
    write_trace_csv(os, mfg("logistic"));
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "z,phi,w,y,mapped,value");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == static_cast<int>(mfg("logistic").trace.size()));
}

TEST_CASE("upsilon identity and sandwich") {
    std::mt19937_64 rng(17);
    for (const char* ex : {"logistic", "loksendal"}) {
        const auto& e = fixture::shared(ex);
        const auto floor = minimize_price(e, 0.0, e.z0());
        double phi_max = -INFINITY;
        for (int i = 0; i <= 2000; ++i) phi_max = std::max(phi_max, phi(e, e.z0() * i / 2000.0));
        const auto [lo, hi] = e.search_window();
        std::uniform_real_distribution<double> U(lo, hi);
        for (int i = 0; i < 200; ++i) {
            double w = e.to_x(U(rng)), y = e.to_x(U(rng));
            if (w > y) std::swap(w, y);
            if (!(w < y)) continue;
            const ThresholdPolicy q{w, y};
            const double u = upsilon(e, q);
            CHECK(u == Approx(F_p(e, q, phi(e, zeta(e, q)))).epsilon(1e-14));
            CHECK(F_p(e, q, floor.phi_min) <= u + 1e-12);
            CHECK(u <= F_p(e, q, phi_max) + 1e-12);
        }
    }
}

TEST_CASE("upsilon closed-form check on logistic") {
    const auto& e = fixture::shared("logistic");
    const oracle::Logistic ref;
    const ThresholdPolicy q{1.106231, 6.306876};
    const double z = (q.y - q.w) / ref.Bxi(q.w, q.y);
    const double expected = ref.F(q.w, q.y, oracle::phi_logistic(z));
    CHECK(upsilon(e, q) == Approx(expected).epsilon(1e-8));
    CHECK(std::abs(upsilon(e, q) - 2.916862) <= 1e-4);
}

TEST_CASE("MFC logistic optimum") {
    const auto& r = mfc("logistic");
    CHECK(std::abs(r.policy.w - 1.106231) <= 1e-3);
    CHECK(std::abs(r.policy.y - 6.306876) <= 1e-3);
    CHECK(std::abs(r.z - 4.559874) <= 1e-3);
    CHECK(std::abs(r.price - 0.537337) <= 1e-3);
    CHECK(std::abs(r.value - 2.916862) <= 1e-3);
    CHECK_FALSE(r.optimizer_warning);
    CHECK(std::abs((r.value - mfg("logistic").primary.value) - 0.242790) <= 2e-3);
    CHECK(std::abs(r.deviation.solution.value - 3.064301) <= 1e-3);
}

TEST_CASE("MFC beats a dense grid and the MFG value") {
    for (const char* ex : {"logistic", "loksendal", "feller_logistic"}) {
        const auto& e = fixture::shared(ex);
        const auto& r = mfc(ex);
        const auto [lo, hi] = e.search_window();
        double best = -INFINITY;
        constexpr int n = 200;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                const ThresholdPolicy q{e.to_x(lo + (hi - lo) * i / (n - 1)), e.to_x(lo + (hi - lo) * j / (n - 1))};
                if (!(q.w < q.y)) continue;
                best = std::max(best, upsilon(e, q));
            }
        CHECK(r.value >= best - 1e-9);
        CHECK(r.value >= mfg(ex).primary.value - 1e-9);
        CHECK(upsilon(e, r.policy) == Approx(r.value).epsilon(1e-12));
    }
}

TEST_CASE("MFC value exceeds the boundary reward limit") {
    for (const char* ex : {"logistic", "loksendal"}) {
        const auto& e = fixture::shared(ex);
        CHECK(mfc(ex).value > e.cbar_b());
    }
}

TEST_CASE("best response at the equilibrium rate has no gain") {
    for (const char* ex : {"logistic", "loksendal"}) {
        const auto& e = fixture::shared(ex);
        const auto& fp = mfg(ex).primary;
        const auto br = best_response(e, fp.z, fp.value);
        CHECK(std::abs(br.solution.policy.w - fp.policy.w) <= 1e-6);
        CHECK(std::abs(br.solution.policy.y - fp.policy.y) <= 1e-6);
        CHECK(std::abs(br.gap) <= 1e-8);
    }
}

TEST_CASE("best response at the MFC rate is a profitable deviation") {
    for (const char* ex : {"logistic", "loksendal"}) {
        const auto& r = mfc(ex);
        CHECK(r.deviation.z == Approx(r.z).epsilon(1e-15));
        CHECK(r.deviation.gap > 0.0);
        CHECK(r.deviation.gap == Approx(r.deviation.solution.value - r.value).epsilon(1e-12));
    }
    const auto& e = fixture::shared("logistic");
    const auto br = best_response(e, 4.559874, 2.916862);
    CHECK(std::abs(br.solution.value - 3.064301) <= 1e-3);
    CHECK(std::abs(br.gap - (3.064301 - 2.916862)) <= 1e-3);
}

TEST_CASE("Lagrange multiplier at the MFC optimum") {
    for (const char* ex : {"logistic", "loksendal"}) {
        const auto& e = fixture::shared(ex);
        const auto& r = mfc(ex);
        const auto d = lagrange_multiplier(e, r.z);
        CHECK(d.residual <= 1e-6);
        CHECK(d.lambda < d.lambda_r);
        CHECK(d.lambda_r == Approx(phi(e, r.z) - d.p0).epsilon(1e-12));
        CHECK(std::abs(d.identity_gap) <= 1e-5);
        // the multiplier policy is the optimum itself
        CHECK(std::abs(d.policy.w - r.policy.w) <= 1e-3);
        CHECK(std::abs(d.policy.y - r.policy.y) <= 1e-3);
    }
}

TEST_CASE("Loksendal: structural properties of both solutions") {
    const auto& e = fixture::shared("loksendal");
    const auto& g = mfg("loksendal").primary;
    const auto& c = mfc("loksendal");
    CHECK(g.residual <= 1e-6);
    CHECK(e.a() < g.policy.w);
    CHECK(g.policy.w < g.policy.y);
    CHECK(g.policy.y < e.b());
    CHECK(c.value > g.value);
    CHECK(c.z < g.z);  // the planner restrains supply to lift the price
    CHECK(c.price > g.p);
}

TEST_CASE("entrance fixture solves end to end") {
    const auto& e = fixture::shared("feller_logistic");
    const auto& g = mfg("feller_logistic").primary;
    CHECK(g.residual <= 1e-6);
    CHECK(g.z > 0.0);
    CHECK(g.z <= e.z0());
    const auto& c = mfc("feller_logistic");
    CHECK(c.value >= g.value - 1e-9);
    CHECK(c.policy.w >= e.a());
}

TEST_CASE("surface CSV omits invalid cells") {
    const auto& e = fixture::shared("logistic");
    std::ostringstream os;
    write_upsilon_surface(os, e, 1.0, 3.0, 2.0, 6.0, 5);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "w,y,zeta,upsilon");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows > 0);
    CHECK(rows < 25);
}

TEST_CASE("price floor") {
    const auto& e = fixture::shared("logistic");
    const auto f = minimize_price(e, 0.0, 6.25);
    CHECK(std::abs(f.phi_min - 0.326668) <= 1e-4);
    CHECK(f.feasible);
    for (int i = 0; i <= 5000; ++i) CHECK(phi(e, 6.25 * i / 5000) >= f.phi_min - 1e-12);
}
