#include "mfimpulse/config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "mfimpulse/error.hpp"

namespace mfimpulse {

using json = nlohmann::ordered_json;

Decimal::Decimal(std::string t) : text(std::move(t)), value(parse_real(text, "decimal")) {}

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::precondition, "config: " + what); }

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) bad(where + " must be an object");
    for (const auto& [k, v] : obj.items())
        if (!allowed.count(k)) bad("unknown key '" + (where.empty() ? k : where + "." + k) + "'");
}

std::string path(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

void read(const json& obj, const std::string& where, const char* key, Decimal& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_string()) bad(path(where, key) + " must be a decimal string");
    try {
        out = Decimal(v.get<std::string>());
    } catch (const Error& e) {
        bad(path(where, key) + ": " + e.what());
    }
}

void read(const json& obj, const std::string& where, const char* key, FormSpec& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_string()) bad(path(where, key) + " must be a string like name{k=v}");
    try {
        out = FormSpec::parse(v.get<std::string>());
    } catch (const Error& e) {
        bad(path(where, key) + ": " + e.what());
    }
}

template <class Int>
void read_int(const json& obj, const std::string& where, const char* key, Int& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) bad(path(where, key) + " must be an integer");
    if constexpr (std::is_unsigned_v<Int>) {
        if (v.is_number_unsigned()) {
            const auto u = v.get<std::uint64_t>();
            if (u > std::numeric_limits<Int>::max()) bad(path(where, key) + " out of range");
            out = static_cast<Int>(u);
            return;
        }
        bad(path(where, key) + " must be nonnegative");
    } else {
        const auto i = v.get<std::int64_t>();
        if (i < std::numeric_limits<Int>::min() || i > std::numeric_limits<Int>::max()) bad(path(where, key) + " out of range");
        out = static_cast<Int>(i);
    }
}

void read(const json& obj, const std::string& where, const char* key, bool& out) {
    if (!obj.contains(key)) return;
    if (!obj.at(key).is_boolean()) bad(path(where, key) + " must be true or false");
    out = obj.at(key).get<bool>();
}

void read(const json& obj, const std::string& where, const char* key, std::optional<std::string>& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (v.is_null()) {
        out.reset();
        return;
    }
    if (!v.is_string()) bad(path(where, key) + " must be a string or null");
    out = v.get<std::string>();
}

json opt(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

}  // namespace

RunConfig parse_config(const json& doc) {
    reject_unknown(doc, "", {"model", "market", "tolerances", "solver", "simulation", "output"});
    RunConfig c;
    if (!doc.contains("model")) bad("missing key 'model'");
    if (!doc.contains("market")) bad("missing key 'market'");
    read(doc, "", "model", c.model);

    const auto& m = doc.at("market");
    reject_unknown(m, "market", {"c", "phi", "K"});
    for (const char* k : {"c", "phi", "K"})
        if (!m.contains(k)) bad(std::string("missing key 'market.") + k + "'");
    read(m, "market", "c", c.c);
    read(m, "market", "phi", c.phi);
    read(m, "market", "K", c.K);

    if (doc.contains("tolerances")) {
        const auto& t = doc.at("tolerances");
        reject_unknown(t, "tolerances", {"quadrature_abs", "quadrature_rel", "root", "optimizer"});
        read(t, "tolerances", "quadrature_abs", c.quadrature_abs);
        read(t, "tolerances", "quadrature_rel", c.quadrature_rel);
        read(t, "tolerances", "root", c.root_tol);
        read(t, "tolerances", "optimizer", c.optimizer_tol);
    }
    if (doc.contains("solver")) {
        const auto& s = doc.at("solver");
        reject_unknown(s, "solver",
                       {"mfg_grid", "jump_bound", "mfc_grid", "mfc_starts", "mfc_tol", "oracle_grid", "oracle_starts",
                        "cross_validate", "threads", "cbar_override"});
        read_int(s, "solver", "mfg_grid", c.mfg_grid);
        read(s, "solver", "jump_bound", c.jump_bound);
        read_int(s, "solver", "mfc_grid", c.mfc_grid);
        read_int(s, "solver", "mfc_starts", c.mfc_starts);
        read(s, "solver", "mfc_tol", c.mfc_tol);
        read_int(s, "solver", "oracle_grid", c.oracle_grid);
        read_int(s, "solver", "oracle_starts", c.oracle_starts);
        read(s, "solver", "cross_validate", c.cross_validate);
        read_int(s, "solver", "threads", c.threads);
        if (s.contains("cbar_override") && !s.at("cbar_override").is_null()) {
            Decimal d;
            read(s, "solver", "cbar_override", d);
            c.cbar_override = d;
        }
    }
    if (doc.contains("simulation")) {
        const auto& s = doc.at("simulation");
        reject_unknown(s, "simulation",
                       {"dt", "cycles", "seed", "guard", "batch_size", "bridge_correction", "horizon", "bins"});
        read(s, "simulation", "dt", c.dt);
        read_int(s, "simulation", "cycles", c.cycles);
        read_int(s, "simulation", "seed", c.seed);
        read(s, "simulation", "guard", c.guard);
        read_int(s, "simulation", "batch_size", c.batch_size);
        read(s, "simulation", "bridge_correction", c.bridge_correction);
        read(s, "simulation", "horizon", c.horizon);
        read_int(s, "simulation", "bins", c.bins);
    }
    if (doc.contains("output")) {
        const auto& o = doc.at("output");
        reject_unknown(o, "output", {"report", "trace", "surface", "cycles"});
        read(o, "output", "report", c.report_path);
        read(o, "output", "trace", c.trace_path);
        read(o, "output", "surface", c.surface_path);
        read(o, "output", "cycles", c.cycles_path);
    }
    c.validate();
    return c;
}

RunConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        bad(std::string("not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

RunConfig load_config(const std::string& file) {
    std::ifstream in(file);
    if (!in) bad("cannot open '" + file + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

json to_json(const RunConfig& c) {
    json doc;
    doc["model"] = c.model.str();
    doc["market"] = {{"c", c.c.str()}, {"phi", c.phi.str()}, {"K", c.K.text}};
    doc["tolerances"] = {{"quadrature_abs", c.quadrature_abs.text},
                         {"quadrature_rel", c.quadrature_rel.text},
                         {"root", c.root_tol.text},
                         {"optimizer", c.optimizer_tol.text}};
    doc["solver"] = {{"mfg_grid", c.mfg_grid},
                     {"jump_bound", c.jump_bound.text},
                     {"mfc_grid", c.mfc_grid},
                     {"mfc_starts", c.mfc_starts},
                     {"mfc_tol", c.mfc_tol.text},
                     {"oracle_grid", c.oracle_grid},
                     {"oracle_starts", c.oracle_starts},
                     {"cross_validate", c.cross_validate},
                     {"threads", c.threads},
                     {"cbar_override", c.cbar_override ? json(c.cbar_override->text) : json(nullptr)}};
    doc["simulation"] = {{"dt", c.dt.text},
                         {"cycles", c.cycles},
                         {"seed", c.seed},
                         {"guard", c.guard.text},
                         {"batch_size", c.batch_size},
                         {"bridge_correction", c.bridge_correction},
                         {"horizon", c.horizon.text},
                         {"bins", c.bins}};
    doc["output"] = {{"report", opt(c.report_path)},
                     {"trace", opt(c.trace_path)},
                     {"surface", opt(c.surface_path)},
                     {"cycles", opt(c.cycles_path)}};
    return doc;
}

void RunConfig::validate() const {
    auto positive = [](const Decimal& d, const char* name) {
        if (!(d.value > 0.0)) bad(std::string(name) + " must be positive");
    };
    positive(quadrature_abs, "tolerances.quadrature_abs");
    positive(quadrature_rel, "tolerances.quadrature_rel");
    positive(root_tol, "tolerances.root");
    positive(optimizer_tol, "tolerances.optimizer");
    positive(jump_bound, "solver.jump_bound");
    positive(mfc_tol, "solver.mfc_tol");
    if (mfg_grid < 2) bad("solver.mfg_grid must be at least 2");
    if (mfc_grid < 2) bad("solver.mfc_grid must be at least 2");
    if (oracle_grid < 2) bad("solver.oracle_grid must be at least 2");
    if (mfc_starts < 1 || oracle_starts < 1) bad("solver starts must be at least 1");
    positive(horizon, "simulation.horizon");
    if (bins < 1) bad("simulation.bins must be at least 1");
    sim_config().validate();
    diffusion().validate();
    market().validate();
}

DiffusionModel RunConfig::diffusion() const { return builtin_model(model); }

MarketModel RunConfig::market() const { return make_market(c, phi, K.value); }

EngineOptions RunConfig::engine_options() const {
    EngineOptions o;
    if (cbar_override) o.cbar_override = cbar_override->value;
    return o;
}

ClassicalOptions RunConfig::classical_options() const {
    ClassicalOptions o;
    o.tol = root_tol.value;
    o.optimizer_tol = optimizer_tol.value;
    o.cross_validate = cross_validate;
    o.oracle_grid = oracle_grid;
    o.oracle_starts = oracle_starts;
    return o;
}

MfgOptions RunConfig::mfg_options() const {
    MfgOptions o;
    o.grid = mfg_grid;
    o.jump_bound = jump_bound.value;
    o.threads = threads;
    o.classical = classical_options();
    o.classical.cross_validate = false;
    return o;
}

MfcOptions RunConfig::mfc_options() const {
    MfcOptions o;
    o.grid = mfc_grid;
    o.starts = mfc_starts;
    o.tol = mfc_tol.value;
    o.classical = classical_options();
    o.classical.cross_validate = false;
    return o;
}

SimConfig RunConfig::sim_config() const {
    SimConfig s;
    s.dt = dt.value;
    s.cycles = cycles;
    s.seed = seed;
    s.guard = guard.value;
    s.batch_size = batch_size;
    s.bridge_correction = bridge_correction;
    s.threads = threads;
    return s;
}

ConditionOptions RunConfig::condition_options() const {
    ConditionOptions o;
    o.engine = engine_options();
    o.classical = classical_options();
    o.quadrature.abs_tol = quadrature_abs.value;
    o.quadrature.rel_tol = quadrature_rel.value;
    return o;
}

std::vector<std::string> example_names() { return {"logistic", "loksendal", "feller_logistic"}; }

RunConfig example_config(const std::string& name) {
    RunConfig c;
    if (name == "logistic") {
        c.model = FormSpec::parse("logistic{r=5,delta=5,sigma=1,x0=1}");
        c.c = FormSpec::parse("one_minus_exp{rate=1}");
        c.phi = FormSpec::parse("rational_sin{a=3,b=1,c=2}");
        c.K = Decimal("0.5");
    } else if (name == "loksendal") {
        c.model = FormSpec::parse("loksendal{r=0.75,b=5,sigma=0.5,x0=2.5}");
        c.c = FormSpec::parse("one_minus_exp_plus_power{rate=3,coef=0.01,power=0.25}");
        c.phi = FormSpec::parse("rational_cos{n=2,a=3,b=1,c=1,k=2}");
        c.K = Decimal("0.2");
    } else if (name == "feller_logistic") {
        c.model = FormSpec::parse("feller_logistic{r=1,delta=4,sigma=1,x0=1}");
        c.c = FormSpec::parse("one_minus_exp{rate=1}");
        c.phi = FormSpec::parse("rational_sin{a=3,b=1,c=2}");
        c.K = Decimal("4");
    } else {
        throw Error(ErrorKind::precondition, "unknown example '" + name + "'");
    }
    return c;
}

}  // namespace mfimpulse
