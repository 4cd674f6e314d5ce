#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mfimpulse/model.hpp"
#include "mfimpulse/policy.hpp"

namespace mfimpulse {

/// Philox4x32-10 block: counter and key in, four 32-bit words out.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

struct SimConfig {
    double dt = 1e-4;
    long cycles = 10000;
    std::uint64_t seed = 20240601;
    double guard = 1e-9;          // states within this distance of a boundary are pulled back to it
    long batch_size = 100;
    bool bridge_correction = true;  // detect crossings of y between grid times
    unsigned threads = 0;
    long max_steps_per_cycle = 2'000'000'000;

    void validate() const;
};

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

struct SimEstimate {
    ThresholdPolicy policy;
    double price = 0.0;
    long cycles = 0;
    Estimate tau;             // mean cycle length, E_w[tau_y]
    Estimate running_reward;  // mean int c(X) over a cycle
    Estimate kappa;           // (y - w) / mean tau
    Estimate J;               // mean cycle reward / mean cycle length
    long steps = 0;
    long guard_activations = 0;
    double guard_fraction = 0.0;
    bool valid = true;        // guard fraction at most 0.1%
};

struct CycleRecord {
    double tau = 0.0;
    double running_reward = 0.0;
};

/// Renewal cycles from w up to the first passage to y.
SimEstimate simulate_cycles(const DiffusionModel& model, const MarketModel& market, const ThresholdPolicy& policy,
                            double price, const SimConfig& config, std::vector<CycleRecord>* records = nullptr);

struct HorizonEstimate {
    double T = 0.0;
    long impulses = 0;
    Estimate running_average;  // time average of c(X)
    Estimate impulse_average;  // (p (y - w) - K) times impulses per unit time
    Estimate J;
    Estimate kappa;            // harvested volume per unit time
    long steps = 0;
    long guard_activations = 0;
    bool valid = true;
};

/// One trajectory of length T started at x0; without a policy nothing is ever harvested.
HorizonEstimate simulate_horizon(const DiffusionModel& model, const MarketModel& market,
                                 const std::optional<ThresholdPolicy>& policy, double price, double T,
                                 const SimConfig& config);

struct Histogram {
    double lo = 0.0, hi = 0.0;
    std::vector<double> density;  // per bin, normalized by total time
    double mass_above = 0.0;      // fraction of time spent above hi
    double total_mass = 0.0;
    long steps = 0;
    bool valid = true;
};

/// Occupation density of the controlled process on [a, y] over a horizon T.
Histogram occupation_histogram(const DiffusionModel& model, const ThresholdPolicy& policy, double T, int bins,
                               const SimConfig& config);

/// CSV columns: cycle,tau,running_reward
void write_cycles_csv(std::ostream& out, const std::vector<CycleRecord>& records);

}  // namespace mfimpulse
