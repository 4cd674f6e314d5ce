#include <doctest.h>

#include <fstream>
#include <sstream>

#include "mfimpulse/cli.hpp"
#include "mfimpulse/config.hpp"
#include "mfimpulse/error.hpp"
#include "mfimpulse/report.hpp"

using namespace mfimpulse;
using json = nlohmann::ordered_json;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "mfimpulse");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config round trip is exact") {
    for (const auto& name : example_names()) {
        const RunConfig c = example_config(name);
        const json j = to_json(c);
        const RunConfig back = parse_config(j);
        CHECK(back == c);
        CHECK(to_json(back).dump() == j.dump());
        CHECK(parse_config_text(j.dump(2)) == c);
    }
}

TEST_CASE("decimal strings keep their text") {
    auto j = to_json(example_config("logistic"));
    j["market"]["K"] = "0.1000000000000000055511151231257827";
    const auto c = parse_config(j);
    CHECK(c.K.text == "0.1000000000000000055511151231257827");
    CHECK(c.K.value == 0.1);
    CHECK(to_json(c)["market"]["K"] == "0.1000000000000000055511151231257827");
}

TEST_CASE("shipped config files match the built-in examples") {
    for (const auto& name : example_names()) {
        const auto path = std::string(MF_SOURCE_DIR) + "/configs/" + name + ".json";
        CHECK(load_config(path) == example_config(name));
    }
}

TEST_CASE("malformed configs are rejected") {
    const json base = to_json(example_config("logistic"));
    auto bad = base;
    bad["market"]["extra"] = "1";
    CHECK_THROWS_WITH_AS(parse_config(bad), doctest::Contains("unknown key 'market.extra'"), Error);
    bad = base;
    bad["market"]["K"] = 0.5;
    CHECK_THROWS_WITH_AS(parse_config(bad), doctest::Contains("decimal string"), Error);
    bad = base;
    bad["tolerances"]["root"] = "abc";
    CHECK_THROWS_AS(parse_config(bad), Error);
    bad = base;
    bad["model"] = "nosuch{r=1}";
    CHECK_THROWS_AS(parse_config(bad).diffusion(), Error);
    CHECK_THROWS_AS(parse_config_text("{not json"), Error);
    CHECK_THROWS_AS(load_config("/nonexistent/cfg.json"), Error);
    CHECK_THROWS_AS(example_config("nosuch"), Error);
}

TEST_CASE("validation catches bad values") {
    auto c = example_config("logistic");
    c.K = Decimal("0");
    CHECK_THROWS_AS(c.validate(), Error);
    c = example_config("logistic");
    c.dt = Decimal("-1e-4");
    CHECK_THROWS_AS(c.validate(), Error);
    c = example_config("logistic");
    c.mfg_grid = 1;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("envelope layout") {
    const auto c = example_config("loksendal");
    const json env = make_envelope("solve-mfg", c, 0.5, "equilibrium", json{{"x", 1}});
    std::vector<std::string> keys;
    for (auto it = env.begin(); it != env.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"tool", "version", "command", "config", "timing", "kind", "report"});
    CHECK(env["tool"] == kToolName);
    CHECK(env["version"] == "1.0.0");
    CHECK(parse_config(env["config"]) == c);
    CHECK(json::parse(env.dump()) == env);
}

TEST_CASE("report numbers carry nine significant digits and null for non-finite") {
    CHECK(number(3.14159265358979).get<double>() == 3.14159265);
    CHECK(number(NAN).is_null());
    CHECK(number(INFINITY).is_null());
}

TEST_CASE("cli: version and usage") {
    auto r = cli({"--version"});
    CHECK(r.code == 0);
    CHECK(r.out.find("1.0.0") != std::string::npos);
    r = cli({"no-such-command"});
    CHECK(r.code == 1);
    r = cli({"solve-classical", "--example", "logistic"});  // --price missing
    CHECK(r.code == 1);
}

TEST_CASE("cli: non-positive K gives a precondition error on stderr") {
    const std::string path = "cfg_k0.json";
    auto j = to_json(example_config("logistic"));
    j["market"]["K"] = "0";
    std::ofstream(path) << j.dump();
    const auto r = cli({"check-model", "--config", path});
    CHECK(r.code == 1);
    CHECK(r.out.empty());
    const auto e = json::parse(r.err.substr(0, r.err.find('\n')));
    CHECK(e["error"]["kind"] == "precondition");
    CHECK(e["error"]["exit_code"] == 1);
    std::remove(path.c_str());
}

TEST_CASE("cli: missing config file") {
    const auto r = cli({"check-model", "--config", "/nonexistent/x.json"});
    CHECK(r.code == 1);
    CHECK(json::parse(r.err)["error"]["exit_code"] == 1);
}

TEST_CASE("cli: infeasible price") {
    const auto r = cli({"solve-classical", "--example", "logistic", "--price", "-1"});
    CHECK(r.code == 1);
    CHECK(json::parse(r.err)["error"]["message"].get<std::string>().find("not feasible") != std::string::npos);
}

TEST_CASE("cli: check-model report") {
    const auto r = cli({"check-model", "--example", "logistic"});
    CHECK(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["kind"] == "conditions");
    CHECK(j["report"]["all_hold"] == true);
}

TEST_CASE("cli: solve-classical writes the report file") {
    const std::string path = "classical_report.json";
    const auto r = cli({"solve-classical", "--example", "logistic", "--price", "0.463276", "--out", path});
    CHECK(r.code == 0);
    const auto printed = json::parse(r.out);
    const auto saved = json::parse(slurp(path));
    CHECK(saved["report"] == printed["report"]);
    CHECK(std::abs(printed["report"]["value"].get<double>() - 2.674072) <= 1e-4);
    std::remove(path.c_str());
}

TEST_CASE("cli: reproduce-tables layout and idempotence") {
    const auto a = cli({"reproduce-tables", "--example", "logistic"});
    const auto b = cli({"reproduce-tables", "--example", "logistic"});
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    std::istringstream is(a.out);
    std::string header, mfg, mfc, extra;
    std::getline(is, header);
    std::getline(is, mfg);
    std::getline(is, mfc);
    CHECK(header == "Problem,w*,y*,Supply Rate,Price,Value");
    CHECK(mfg == "MFG,1.279499,5.368681,5.221743,0.463276,2.674072");
    CHECK(mfc.rfind("MFC,1.10", 0) == 0);
    CHECK_FALSE(std::getline(is, extra));
}

TEST_CASE("cli: seed override reaches the simulation") {
    const auto a = cli({"simulate", "--example", "logistic", "--w", "1.3", "--y", "5.3", "--cycles", "50", "--dt",
                        "1e-3", "--seed", "7"});
    const auto b = cli({"simulate", "--example", "logistic", "--w", "1.3", "--y", "5.3", "--cycles", "50", "--dt",
                        "1e-3", "--seed", "8"});
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    const auto ja = json::parse(a.out), jb = json::parse(b.out);
    CHECK(ja["config"]["simulation"]["seed"] == 7);
    CHECK(ja["report"]["tau"] != jb["report"]["tau"]);
}
