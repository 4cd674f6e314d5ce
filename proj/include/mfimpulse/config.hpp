#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfimpulse/conditions.hpp"
#include "mfimpulse/forms.hpp"
#include "mfimpulse/mfc.hpp"
#include "mfimpulse/mfg.hpp"
#include "mfimpulse/model.hpp"
#include "mfimpulse/simulate.hpp"

namespace mfimpulse {

/// A real kept as the decimal text it was written with.
struct Decimal {
    std::string text;
    double value = 0.0;

    Decimal() = default;
    explicit Decimal(std::string t);
    bool operator==(const Decimal& o) const { return text == o.text; }
};

struct RunConfig {
    FormSpec model;
    FormSpec c;
    FormSpec phi;
    Decimal K{"1"};

    Decimal quadrature_abs{"1e-10"};
    Decimal quadrature_rel{"1e-9"};
    Decimal root_tol{"1e-9"};
    Decimal optimizer_tol{"1e-7"};

    int mfg_grid = 256;
    Decimal jump_bound{"0.5"};
    int mfc_grid = 64;
    int mfc_starts = 8;
    Decimal mfc_tol{"1e-9"};
    int oracle_grid = 48;
    int oracle_starts = 6;
    bool cross_validate = true;
    unsigned threads = 0;
    std::optional<Decimal> cbar_override;

    Decimal dt{"1e-4"};
    long cycles = 10000;
    std::uint64_t seed = 20240601;
    Decimal guard{"1e-9"};
    long batch_size = 100;
    bool bridge_correction = true;
    Decimal horizon{"1000"};
    int bins = 100;

    std::optional<std::string> report_path;
    std::optional<std::string> trace_path;
    std::optional<std::string> surface_path;
    std::optional<std::string> cycles_path;

    bool operator==(const RunConfig&) const = default;

    /// Range checks plus model and market construction; precondition error on failure.
    void validate() const;

    DiffusionModel diffusion() const;
    MarketModel market() const;
    EngineOptions engine_options() const;
    ClassicalOptions classical_options() const;
    MfgOptions mfg_options() const;
    MfcOptions mfc_options() const;
    SimConfig sim_config() const;
    ConditionOptions condition_options() const;
};

/// Strict parse: unknown keys, wrong types and non-string reals are precondition errors.
RunConfig parse_config(const nlohmann::ordered_json& doc);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

/// Every field written out; parse_config(to_json(c)) == c.
nlohmann::ordered_json to_json(const RunConfig& config);

/// Configurations of the bundled examples: logistic, loksendal, feller_logistic.
RunConfig example_config(const std::string& name);
std::vector<std::string> example_names();

}  // namespace mfimpulse
