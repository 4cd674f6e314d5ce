#include "mfimpulse/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <span>

#include "mfimpulse/error.hpp"
#include "mfimpulse/parallel.hpp"

namespace mfimpulse {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
    constexpr std::uint64_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = M0 * c[0];
        const std::uint64_t p1 = M1 * c[2];
        c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
        k[0] += W0;
        k[1] += W1;
    }
    return c;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGuardLimit = 1e-3;

/// Gaussian and uniform draws addressed by (seed, path, step).
class CounterStream {
public:
    CounterStream(std::uint64_t seed, std::uint64_t path)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, path_(path) {}

    double normal(std::uint64_t step) {
        const std::uint64_t block = step >> 1;
        if (block != cached_block_) {
            const auto r = draw(block, 0);
            const double u1 = 1.0 - to_unit(r[0], r[1]);  // (0, 1]
            const double u2 = to_unit(r[2], r[3]);
            const double radius = std::sqrt(-2.0 * std::log(u1));
            const double angle = 2.0 * std::numbers::pi * u2;
            cached_[0] = radius * std::cos(angle);
            cached_[1] = radius * std::sin(angle);
            cached_block_ = block;
        }
        return cached_[step & 1];
    }

    double uniform(std::uint64_t step) {
        const auto r = draw(step, 1);
        return to_unit(r[0], r[1]);
    }

private:
    std::array<std::uint32_t, 4> draw(std::uint64_t index, std::uint32_t stream) const {
        return philox4x32({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                           static_cast<std::uint32_t>(path_),
                           (static_cast<std::uint32_t>(path_ >> 32) & 0x7fffffffu) | (stream << 31)},
                          key_);
    }
    static double to_unit(std::uint32_t hi, std::uint32_t lo) {
        const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
        return static_cast<double>(bits >> 11) * 0x1.0p-53;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t path_;
    std::uint64_t cached_block_ = std::numeric_limits<std::uint64_t>::max();
    std::array<double, 2> cached_{};
};

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const size_t half = v.size() / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

double mean(std::span<const double> v) { return pairwise_sum(v) / static_cast<double>(v.size()); }

double sample_sd(std::span<const double> v) {
    if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double m = mean(v);
    std::vector<double> sq(v.size());
    for (size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - m) * (v[i] - m);
    return std::sqrt(pairwise_sum(sq) / static_cast<double>(v.size() - 1));
}

std::string step_name(std::uint64_t path, std::uint64_t step) {
    std::ostringstream os;
    os << "path " << path << ", step " << step;
    return os.str();
}

/// Euler-Maruyama stepping with the boundary guard and first-passage detection.
struct Stepper {
    const DiffusionModel& model;
    double dt, sqdt, lo_rail, hi_rail;
    bool bridge;

    Stepper(const DiffusionModel& m, const SimConfig& cfg)
        : model(m), dt(cfg.dt), sqdt(std::sqrt(cfg.dt)), lo_rail(m.a + cfg.guard),
          hi_rail(m.finite_b() ? m.b - cfg.guard : kInf), bridge(cfg.bridge_correction) {}

    struct Step {
        double x;
        double elapsed;   // time used in this step
        bool crossed;     // reached the threshold within the step
        bool guarded;
    };

    Step step(double x, double threshold, CounterStream& rng, std::uint64_t n, std::uint64_t path) const {
        const double mu = model.mu(x), sg = model.sigma(x);
        double next = x + mu * dt + sg * sqdt * rng.normal(n);
        if (!std::isfinite(next))
            throw Error(ErrorKind::evaluation, "trajectory left the state space at " + step_name(path, n));
        if (next >= threshold) {
            const double theta = (threshold - x) / (next - x);
            return {threshold, theta * dt, true, false};
        }
        if (bridge && std::isfinite(threshold)) {
            const double e = 2.0 * (threshold - x) * (threshold - next) / (sg * sg * dt);
            if (e < 40.0 && rng.uniform(n) < std::exp(-e)) return {threshold, 0.5 * dt, true, false};
        }
        bool guarded = false;
        if (next < lo_rail) {
            next = lo_rail;
            guarded = true;
        } else if (next > hi_rail) {
            next = hi_rail;
            guarded = true;
        }
        return {next, dt, false, guarded};
    }
};

Estimate ratio_estimate(std::span<const double> num_batches, std::span<const double> den_batches, double ratio,
                        double den_mean) {
    std::vector<double> d(num_batches.size());
    for (size_t j = 0; j < d.size(); ++j) d[j] = num_batches[j] - ratio * den_batches[j];
    return {ratio, sample_sd(d) / std::sqrt(static_cast<double>(d.size())) / den_mean};
}

}  // namespace

void SimConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::precondition, "dt must be positive");
    if (cycles < 1) throw Error(ErrorKind::precondition, "at least one cycle is required");
    if (batch_size < 1) throw Error(ErrorKind::precondition, "batch size must be positive");
    if (!(guard >= 0.0)) throw Error(ErrorKind::precondition, "guard must be nonnegative");
}

SimEstimate simulate_cycles(const DiffusionModel& model, const MarketModel& market, const ThresholdPolicy& policy,
                            double price, const SimConfig& config, std::vector<CycleRecord>* records) {
    config.validate();
    const bool w_ok = policy.w > model.a || (policy.w == model.a && model.left_boundary == BoundaryKind::entrance);
    if (!w_ok || !(policy.w < policy.y) || !(policy.y < model.b))
        throw Error(ErrorKind::precondition, "invalid policy for simulation");

    const size_t n = static_cast<size_t>(config.cycles);
    std::vector<double> tau(n), reward(n);
    std::vector<long> steps(n), guards(n);
    const Stepper stepper(model, config);
    constexpr size_t chunk = 64;
    parallel_for(
        (n + chunk - 1) / chunk,
        [&](size_t c) {
            for (size_t i = c * chunk; i < std::min(n, (c + 1) * chunk); ++i) {
                CounterStream rng(config.seed, i);
                double x = policy.w, t = 0.0, r = 0.0;
                long guard_count = 0;
                std::uint64_t k = 0;
                for (;; ++k) {
                    if (static_cast<long>(k) >= config.max_steps_per_cycle)
                        throw Error(ErrorKind::convergence, "cycle did not reach y within the step limit at " + step_name(i, k));
                    const double cx = market.c(x);
                    const auto s = stepper.step(x, policy.y, rng, k, i);
                    t += s.elapsed;
                    r += cx * s.elapsed;
                    x = s.x;
                    guard_count += s.guarded;
                    if (s.crossed) break;
                }
                tau[i] = t;
                reward[i] = r;
                steps[i] = static_cast<long>(k + 1);
                guards[i] = guard_count;
            }
        },
        config.threads);

    SimEstimate out;
    out.policy = policy;
    out.price = price;
    out.cycles = config.cycles;
    for (size_t i = 0; i < n; ++i) {
        out.steps += steps[i];
        out.guard_activations += guards[i];
    }
    out.guard_fraction = static_cast<double>(out.guard_activations) / static_cast<double>(out.steps);
    out.valid = out.guard_fraction <= kGuardLimit;

    const double impulse = price * (policy.y - policy.w) - market.K;
    std::vector<double> total(n);
    for (size_t i = 0; i < n; ++i) total[i] = reward[i] + impulse;

    const double tau_mean = mean(tau), reward_mean = mean(reward), total_mean = mean(total);
    const size_t batch = std::min<size_t>(static_cast<size_t>(config.batch_size), std::max<size_t>(1, n / 2));
    const size_t nb = n / batch;
    std::vector<double> tau_b(nb), reward_b(nb), total_b(nb);
    for (size_t j = 0; j < nb; ++j) {
        tau_b[j] = mean(std::span<const double>(tau).subspan(j * batch, batch));
        reward_b[j] = mean(std::span<const double>(reward).subspan(j * batch, batch));
        total_b[j] = mean(std::span<const double>(total).subspan(j * batch, batch));
    }
    const double root_nb = std::sqrt(static_cast<double>(nb));
    out.tau = {tau_mean, sample_sd(tau_b) / root_nb};
    out.running_reward = {reward_mean, sample_sd(reward_b) / root_nb};
    const double span = policy.y - policy.w;
    out.kappa = {span / tau_mean, span * out.tau.se / (tau_mean * tau_mean)};
    out.J = ratio_estimate(total_b, tau_b, total_mean / tau_mean, tau_mean);

    if (records) {
        records->resize(n);
        for (size_t i = 0; i < n; ++i) (*records)[i] = {tau[i], reward[i]};
    }
    return out;
}

namespace {

struct Window {
    double time = 0.0, reward = 0.0, harvested = 0.0;
    long impulses = 0;
};

}  // namespace

HorizonEstimate simulate_horizon(const DiffusionModel& model, const MarketModel& market,
                                 const std::optional<ThresholdPolicy>& policy, double price, double T,
                                 const SimConfig& config) {
    config.validate();
    if (!(T > 0.0) || !std::isfinite(T)) throw Error(ErrorKind::precondition, "horizon T must be positive");
    if (policy && (!(policy->w < policy->y) || !(policy->y < model.b) || !(policy->w >= model.a)))
        throw Error(ErrorKind::precondition, "invalid policy for simulation");

    constexpr int windows = 20;
    const double width = T / windows;
    std::vector<Window> win(windows);
    const Stepper stepper(model, config);
    CounterStream rng(config.seed, 0);
    const double threshold = policy ? policy->y : kInf;
    double x = model.x0, t = 0.0;
    HorizonEstimate out;
    out.T = T;
    std::uint64_t k = 0;
    while (t < T) {
        const double cx = market.c(x);
        const auto s = stepper.step(x, threshold, rng, k, 0);
        const double used = std::min(s.elapsed, T - t);
        Window& w = win[std::min(windows - 1, static_cast<int>(t / width))];
        w.time += used;
        w.reward += cx * used;
        t += s.elapsed;
        out.guard_activations += s.guarded;
        ++k;
        if (s.crossed) {
            w.impulses += 1;
            w.harvested += policy->y - policy->w;
            x = policy->w;
        } else {
            x = s.x;
        }
    }
    out.steps = static_cast<long>(k);
    out.valid = static_cast<double>(out.guard_activations) / static_cast<double>(out.steps) <= kGuardLimit;

    const double impulse = policy ? price * (policy->y - policy->w) - market.K : 0.0;
    std::vector<double> run(windows), imp(windows), total(windows), harvest(windows);
    for (int j = 0; j < windows; ++j) {
        run[j] = win[j].reward / win[j].time;
        imp[j] = impulse * static_cast<double>(win[j].impulses) / win[j].time;
        total[j] = run[j] + imp[j];
        harvest[j] = win[j].harvested / win[j].time;
        out.impulses += win[j].impulses;
    }
    const double root = std::sqrt(static_cast<double>(windows));
    out.running_average = {mean(run), sample_sd(run) / root};
    out.impulse_average = {mean(imp), sample_sd(imp) / root};
    out.J = {mean(total), sample_sd(total) / root};
    out.kappa = {mean(harvest), sample_sd(harvest) / root};
    return out;
}

Histogram occupation_histogram(const DiffusionModel& model, const ThresholdPolicy& policy, double T, int bins,
                               const SimConfig& config) {
    config.validate();
    if (!(T > 0.0)) throw Error(ErrorKind::precondition, "horizon T must be positive");
    if (bins < 1) throw Error(ErrorKind::precondition, "at least one bin is required");
    if (!(policy.w >= model.a && policy.w < policy.y && policy.y < model.b))
        throw Error(ErrorKind::precondition, "invalid policy for simulation");
    Histogram hist;
    hist.lo = model.a;
    hist.hi = policy.y;
    std::vector<double> time(static_cast<size_t>(bins), 0.0);
    const double width = (hist.hi - hist.lo) / bins;
    const Stepper stepper(model, config);
    CounterStream rng(config.seed, 0);
    double x = policy.w, t = 0.0, above = 0.0;
    long guards = 0;
    std::uint64_t k = 0;
    while (t < T) {
        const auto s = stepper.step(x, policy.y, rng, k, 0);
        const double used = std::min(s.elapsed, T - t);
        if (x > hist.hi) {
            above += used;
        } else {
            const int bin = std::clamp(static_cast<int>((x - hist.lo) / width), 0, bins - 1);
            time[static_cast<size_t>(bin)] += used;
        }
        t += s.elapsed;
        guards += s.guarded;
        ++k;
        x = s.crossed ? policy.w : s.x;
    }
    hist.steps = static_cast<long>(k);
    hist.valid = static_cast<double>(guards) / static_cast<double>(k) <= kGuardLimit;
    hist.density.resize(static_cast<size_t>(bins));
    double mass = 0.0;
    for (int j = 0; j < bins; ++j) {
        hist.density[static_cast<size_t>(j)] = time[static_cast<size_t>(j)] / (T * width);
        mass += time[static_cast<size_t>(j)] / T;
    }
    hist.mass_above = above / T;
    hist.total_mass = mass + hist.mass_above;
    return hist;
}

void write_cycles_csv(std::ostream& out, const std::vector<CycleRecord>& records) {
    out << "cycle,tau,running_reward\n";
    out.precision(9);
    for (size_t i = 0; i < records.size(); ++i) out << i << ',' << records[i].tau << ',' << records[i].running_reward << '\n';
}

}  // namespace mfimpulse
