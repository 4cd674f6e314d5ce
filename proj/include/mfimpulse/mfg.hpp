#pragma once

#include <iosfwd>
#include <vector>

#include "mfimpulse/policy.hpp"

namespace mfimpulse {

/// One application of z -> zeta(Psi(phi(z))).
struct MapEvaluation {
    double z = 0.0;
    double price = 0.0;
    ThresholdPolicy policy;
    double mapped = 0.0;
    double value = 0.0;
};

struct FixedPoint {
    double z = 0.0;
    double p = 0.0;
    ThresholdPolicy policy;
    double value = 0.0;
    double residual = 0.0;        // |z - mapped(z)|
    double value_recheck = 0.0;   // F_p re-evaluated at the reported policy
};

/// Minimum of phi on an interval and whether it is a feasible price.
struct PriceFloor {
    double lo = 0.0, hi = 0.0;
    double arg = 0.0;
    double phi_min = 0.0;
    bool feasible = false;
};

struct MfgOptions {
    int grid = 256;
    double jump_bound = 0.5;   // largest tolerated change of the mapped rate between grid neighbours
    unsigned threads = 0;
    ClassicalOptions classical{.cross_validate = false};
};

struct EquilibriumReport {
    FixedPoint primary;
    std::vector<FixedPoint> fixed_points;
    double z0 = 0.0;
    PriceFloor floor;
    std::vector<MapEvaluation> trace;
    double max_jump = 0.0;
    bool jump_flag = false;
};

MapEvaluation evaluate_map(const PotentialEngine& engine, double z, const ClassicalOptions& options = {.cross_validate = false});

/// Grid scan plus golden refinement of min phi over [lo, hi]; feasibility tested with `engine`.
PriceFloor minimize_price(const PotentialEngine& engine, double lo, double hi, const ClassicalOptions& options = {});

EquilibriumReport solve_mfg(const PotentialEngine& engine, const MfgOptions& options = {});

/// CSV columns: z,phi,w,y,mapped,value
void write_trace_csv(std::ostream& out, const EquilibriumReport& report);

}  // namespace mfimpulse
