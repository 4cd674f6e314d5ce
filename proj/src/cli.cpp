#include "mfimpulse/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mfimpulse/config.hpp"
#include "mfimpulse/error.hpp"
#include "mfimpulse/report.hpp"

namespace mfimpulse {

namespace {

using json = nlohmann::ordered_json;

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

Level log_level() {
    const char* env = std::getenv("MFIMPULSE_LOG");
    if (!env) return Level::warn;
    const std::string v = env;
    if (v == "error") return Level::error;
    if (v == "info") return Level::info;
    if (v == "debug") return Level::debug;
    return Level::warn;
}

struct Logger {
    std::ostream& err;
    Level level = log_level();
    void operator()(Level l, const std::string& msg) const {
        static const char* names[] = {"error", "warn", "info", "debug"};
        if (l <= level) err << "[" << names[static_cast<int>(l)] << "] " << msg << "\n";
    }
};

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error(ErrorKind::precondition, "cannot write '" + path + "'");
    f.precision(17);
    return f;
}

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

struct Args {
    std::string config_path;
    std::string example;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> tol;
    std::optional<int> grid;
    std::optional<unsigned> threads;
    std::string out_path;

    std::optional<double> price;
    std::optional<double> rate;
    std::optional<double> baseline;
    std::optional<double> w, y;
    std::string policy_from;
    std::optional<long> cycles;
    std::optional<std::string> dt;
    std::optional<double> horizon;
    std::optional<double> x_from, x_to;
    int points = 200;
    int surface_grid = 60;
    std::string csv_path;
    std::string trace_path;
    std::string surface_path;
    std::string cycles_path;
};

int exit_code(ErrorKind k) { return k == ErrorKind::precondition ? 1 : 2; }

void emit_error(std::ostream& err, const std::string& kind, const std::string& message, int code) {
    json j = {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
    err << j.dump() << "\n";
}

class Runner {
public:
    Runner(const Args& args, std::ostream& out, std::ostream& err) : args_(args), out_(out), log_{err} {}

    int run(const std::string& command) {
        command_ = command;
        start_ = std::chrono::steady_clock::now();
        load();
        if (command == "check-model") return check_model();
        if (command == "tabulate") return tabulate();
        if (command == "solve-classical") return solve_classical_cmd();
        if (command == "solve-mfg") return solve_mfg_cmd();
        if (command == "solve-mfc") return solve_mfc_cmd();
        if (command == "best-response") return best_response_cmd();
        if (command == "simulate") return simulate_cmd();
        if (command == "reproduce-tables") return reproduce_tables();
        throw Error(ErrorKind::precondition, "unknown subcommand '" + command + "'");
    }

private:
    void load() {
        if (!args_.config_path.empty())
            config_ = load_config(args_.config_path);
        else if (!args_.example.empty())
            config_ = example_config(args_.example);
        else
            throw Error(ErrorKind::precondition, "no configuration: pass --config FILE or --example NAME");
        if (args_.seed) config_.seed = *args_.seed;
        if (args_.tol) config_.root_tol = Decimal(*args_.tol);
        if (args_.threads) config_.threads = *args_.threads;
        if (args_.grid) {
            if (command_ == "solve-mfc") config_.mfc_grid = *args_.grid;
            else if (command_ == "solve-classical") config_.oracle_grid = *args_.grid;
            else config_.mfg_grid = *args_.grid;
        }
        if (args_.cycles) config_.cycles = *args_.cycles;
        if (args_.dt) config_.dt = Decimal(*args_.dt);
        if (!args_.out_path.empty()) config_.report_path = args_.out_path;
        if (!args_.trace_path.empty()) config_.trace_path = args_.trace_path;
        if (!args_.surface_path.empty()) config_.surface_path = args_.surface_path;
        if (!args_.cycles_path.empty()) config_.cycles_path = args_.cycles_path;
        config_.validate();
        log_(Level::info, "model " + config_.model.str() + ", K = " + config_.K.text);
    }

    const PotentialEngine& engine() {
        if (!engine_) {
            engine_ = std::make_unique<PotentialEngine>(std::make_shared<const DiffusionModel>(config_.diffusion()),
                                                        std::make_shared<const MarketModel>(config_.market()),
                                                        config_.engine_options());
            log_(Level::debug, "z0 = " + std::to_string(engine_->z0()));
        }
        return *engine_;
    }

    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

    int emit(const std::string& kind, json report) {
        const json env = make_envelope(command_, config_, elapsed(), kind, std::move(report));
        const std::string text = env.dump(2);
        out_ << text << "\n";
        if (config_.report_path) open_out(*config_.report_path) << text << "\n";
        return 0;
    }

    int check_model() {
        DiffusionModel model = config_.diffusion();
        const auto reports = check_conditions(model, config_.market(), config_.condition_options());
        for (const auto& r : reports)
            if (r.verdict != Verdict::pass) log_(Level::warn, r.id + ": " + to_string(r.verdict) + " " + r.note);
        emit("conditions", to_json(reports));
        return conditions_hold(reports) ? 0 : 1;
    }

    int tabulate() {
        const auto& e = engine();
        const auto [ulo, uhi] = e.search_window();
        const double lo = args_.x_from.value_or(e.to_x(ulo));
        const double hi = args_.x_to.value_or(e.to_x(uhi));
        const int n = args_.grid.value_or(args_.points);
        if (!(lo < hi) || n < 2) throw Error(ErrorKind::precondition, "tabulate needs from < to and at least 2 points");
        const double p = args_.price.value_or(config_.market().phi(0.0));
        std::ofstream file;
        if (!args_.csv_path.empty()) file = open_out(args_.csv_path);
        std::ostream& os = args_.csv_path.empty() ? out_ : file;
        os.precision(12);
        os << "x,s,m,M,xi,g,h_p\n";
        for (int i = 0; i < n; ++i) {
            const double x = lo + (hi - lo) * i / (n - 1);
            os << x << "," << e.s(x) << "," << e.m(x) << "," << e.speed_measure(x) << "," << e.xi(x) << ","
               << e.g(x) << "," << e.h_p(x, p) << "\n";
        }
        return 0;
    }

    int solve_classical_cmd() {
        if (!args_.price) throw Error(ErrorKind::precondition, "solve-classical needs --price");
        const auto sol = solve_classical(engine(), *args_.price, config_.classical_options());
        return emit("classical", to_json(sol));
    }

    EquilibriumReport mfg() {
        auto rep = solve_mfg(engine(), config_.mfg_options());
        if (rep.jump_flag) log_(Level::warn, "mapped supply rate jumps by " + std::to_string(rep.max_jump) + " on the scan");
        if (rep.fixed_points.size() > 1)
            log_(Level::info, std::to_string(rep.fixed_points.size()) + " fixed points, primary has the largest value");
        return rep;
    }

    OptimumReport mfc() {
        auto rep = solve_mfc(engine(), config_.mfc_options());
        if (rep.optimizer_warning) log_(Level::warn, "optimizer hit its evaluation budget");
        if (!rep.near_ties.empty()) log_(Level::warn, std::to_string(rep.near_ties.size()) + " near ties in the control optimum");
        return rep;
    }

    int solve_mfg_cmd() {
        const auto rep = mfg();
        if (config_.trace_path) {
            auto f = open_out(*config_.trace_path);
            write_trace_csv(f, rep);
        }
        return emit("equilibrium", to_json(rep));
    }

    int solve_mfc_cmd() {
        const auto rep = mfc();
        std::optional<LagrangeDiagnostic> lag;
        try {
            lag = lagrange_multiplier(engine(), rep.z, config_.mfc_options().classical);
        } catch (const Error& e) {
            log_(Level::warn, std::string("multiplier not found: ") + e.what());
        }
        if (config_.surface_path) {
            const auto& e = engine();
            const auto [ulo, uhi] = e.search_window();
            auto f = open_out(*config_.surface_path);
            write_upsilon_surface(f, e, e.to_x(ulo), e.to_x(uhi), e.to_x(ulo), e.to_x(std::min(uhi + 1.0, e.to_u(e.x_max()))),
                                  args_.surface_grid);
        }
        return emit("optimum", to_json(rep, lag));
    }

    int best_response_cmd() {
        if (!args_.rate) throw Error(ErrorKind::precondition, "best-response needs --rate");
        const double base = args_.baseline.value_or(std::numeric_limits<double>::quiet_NaN());
        const auto br = best_response(engine(), *args_.rate, base, config_.classical_options());
        return emit("best_response", to_json(br));
    }

    int simulate_cmd() {
        ThresholdPolicy pol;
        double price;
        if (args_.policy_from == "mfg") {
            const auto rep = mfg();
            pol = rep.primary.policy;
            price = rep.primary.p;
        } else if (args_.policy_from == "mfc") {
            const auto rep = mfc();
            pol = rep.policy;
            price = rep.price;
        } else if (args_.w && args_.y) {
            pol = {*args_.w, *args_.y};
            validate_policy(engine(), pol);
            price = config_.market().phi(zeta(engine(), pol));
        } else {
            throw Error(ErrorKind::precondition, "simulate needs --w and --y, or --policy mfg|mfc");
        }
        if (args_.price) price = *args_.price;
        const auto model = config_.diffusion();
        const auto market = config_.market();
        std::vector<CycleRecord> records;
        log_(Level::info, "simulating " + std::to_string(config_.cycles) + " cycles");
        const auto est = simulate_cycles(model, market, pol, price, config_.sim_config(),
                                         config_.cycles_path ? &records : nullptr);
        if (!est.valid) log_(Level::warn, "boundary guard fired on more than 0.1% of steps");
        std::optional<HorizonEstimate> hor;
        if (args_.horizon) hor = simulate_horizon(model, market, pol, price, *args_.horizon, config_.sim_config());
        if (config_.cycles_path) {
            auto f = open_out(*config_.cycles_path);
            write_cycles_csv(f, records);
        }
        return emit("simulation", to_json(est, hor));
    }

    int reproduce_tables() {
        const auto g = mfg();
        const auto c = mfc();
        std::ofstream file;
        if (!args_.csv_path.empty()) file = open_out(args_.csv_path);
        std::ostream& os = args_.csv_path.empty() ? out_ : file;
        os << "Problem,w*,y*,Supply Rate,Price,Value\n";
        os << "MFG," << fixed6(g.primary.policy.w) << "," << fixed6(g.primary.policy.y) << "," << fixed6(g.primary.z)
           << "," << fixed6(g.primary.p) << "," << fixed6(g.primary.value) << "\n";
        os << "MFC," << fixed6(c.policy.w) << "," << fixed6(c.policy.y) << "," << fixed6(c.z) << ","
           << fixed6(c.price) << "," << fixed6(c.value) << "\n";
        log_(Level::info, "deviation at the control price: (" + fixed6(c.deviation.solution.policy.w) + ", " +
                              fixed6(c.deviation.solution.policy.y) + ") value " + fixed6(c.deviation.solution.value) +
                              " gap " + fixed6(c.deviation.gap));
        return 0;
    }

    const Args& args_;
    std::ostream& out_;
    Logger log_;
    std::string command_;
    RunConfig config_;
    std::unique_ptr<PotentialEngine> engine_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Mean-field impulse control solver"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", kToolVersion);

    Args args;
    app.add_option("--config", args.config_path, "JSON run configuration");
    app.add_option("--example", args.example, "bundled configuration: logistic, loksendal, feller_logistic");
    app.add_option("--seed", args.seed, "simulation seed");
    app.add_option("--tol", args.tol, "root tolerance (decimal)");
    app.add_option("--grid", args.grid, "scan size of the subcommand");
    app.add_option("--threads", args.threads, "worker threads, 0 = hardware");
    app.add_option("--out", args.out_path, "also write the JSON report here");

    auto* check = app.add_subcommand("check-model", "numeric checks of the model assumptions");
    auto* tab = app.add_subcommand("tabulate", "CSV of x,s,m,M,xi,g,h_p");
    tab->add_option("--price", args.price, "price used for h_p (default phi(0))");
    tab->add_option("--points", args.points, "number of rows");
    tab->add_option("--from", args.x_from);
    tab->add_option("--to", args.x_to);
    tab->add_option("--csv", args.csv_path, "write CSV here instead of stdout");
    auto* cls = app.add_subcommand("solve-classical", "optimal policy at a fixed price");
    cls->add_option("--price", args.price)->required();
    auto* g = app.add_subcommand("solve-mfg", "mean field game equilibrium");
    g->add_option("--trace", args.trace_path, "CSV z,phi,w,y,mapped,value");
    auto* c = app.add_subcommand("solve-mfc", "mean field control optimum");
    c->add_option("--surface", args.surface_path, "CSV w,y,zeta,upsilon");
    c->add_option("--surface-grid", args.surface_grid);
    auto* br = app.add_subcommand("best-response", "individual optimum against a supply rate");
    br->add_option("--rate", args.rate)->required();
    br->add_option("--baseline", args.baseline, "value the gap is measured against");
    auto* sim = app.add_subcommand("simulate", "Monte Carlo renewal cycles");
    sim->add_option("--w", args.w);
    sim->add_option("--y", args.y);
    sim->add_option("--policy", args.policy_from, "take the policy from mfg or mfc")
        ->check(CLI::IsMember({"mfg", "mfc"}));
    sim->add_option("--price", args.price, "default phi(zeta(w, y))");
    sim->add_option("--cycles", args.cycles);
    sim->add_option("--dt", args.dt);
    sim->add_option("--horizon", args.horizon, "also run one trajectory of this length");
    sim->add_option("--cycles-csv", args.cycles_path, "CSV cycle,tau,running_reward");
    auto* rep = app.add_subcommand("reproduce-tables", "MFG and MFC rows with 6 decimals");
    rep->add_option("--csv", args.csv_path);
    (void)check;

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::ParseError& e) {
        emit_error(err, "usage", e.what(), 1);
        return 1;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        Runner runner(args, out, err);
        return runner.run(command);
    } catch (const Error& e) {
        emit_error(err, to_string(e.kind()), e.what(), exit_code(e.kind()));
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        emit_error(err, "internal", e.what(), 2);
        return 2;
    }
}

}  // namespace mfimpulse
