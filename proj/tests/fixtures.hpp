#pragma once

#include <map>
#include <memory>
#include <string>

#include "mfimpulse/config.hpp"
#include "mfimpulse/potentials.hpp"

namespace fixture {

inline std::shared_ptr<const mfimpulse::PotentialEngine> engine(const std::string& example) {
    const auto cfg = mfimpulse::example_config(example);
    return std::make_shared<const mfimpulse::PotentialEngine>(
        std::make_shared<const mfimpulse::DiffusionModel>(cfg.diffusion()),
        std::make_shared<const mfimpulse::MarketModel>(cfg.market()));
}

/// One engine per example for the lifetime of the test binary.
inline const mfimpulse::PotentialEngine& shared(const std::string& example) {
    static std::map<std::string, std::shared_ptr<const mfimpulse::PotentialEngine>> cache;
    auto& slot = cache[example];
    if (!slot) slot = engine(example);
    return *slot;
}

}  // namespace fixture
