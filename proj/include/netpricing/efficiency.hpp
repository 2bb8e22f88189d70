#pragma once

#include "netpricing/equilibrium.hpp"

namespace netpricing {

// Named efficiency-bound families. The tag is chosen from the demand's class
// (or its parametric kind) when building a report.
enum class BoundClass { uniform, concave, mhr, f_p, f_ced, f_exp, xlp_monotone, none };

struct EfficiencyReport {
    double welfare_opt = 0.0;
    double welfare_eq = 0.0;
    double eta = 1.0;  // welfare_opt / welfare_eq
    BoundClass bound_class = BoundClass::none;
    std::string bound_name;
    int M = 0;
    double alpha = 0.0;  // parameter used by the parametric bounds, 0 if unused
    double bound = std::numeric_limits<double>::infinity();
    double secondary_bound = std::numeric_limits<double>::infinity();  // tighter variant where one exists
    double slackness = 0.0;  // bound - eta
};

// Λ(x) − ΣC_e(x_e); prices never enter.
double welfare(const MarketInstance& inst, const FlowSolution& flow);
double welfare(const MarketInstance& inst, const std::vector<FlowSolution>& flows);

// The bound formula for a class at monopoly count M (α where parametric).
// M = 0 gives 1 for every class except `none`.
double theoretical_bound(BoundClass cls, int M, double alpha = 0.0);

const char* bound_class_name(BoundClass cls);

// Class picked from the demand function: closed-form kinds map directly,
// anything else falls back on classify() tags (tightest class first).
BoundClass bound_class_for(const DemandFunction& d);

// Ratio of optimal to equilibrium welfare plus the applicable bound. Throws
// SolverError when the equilibrium welfare is not positive.
EfficiencyReport efficiency_ratio(const MarketInstance& inst, const EquilibriumSolution& eq,
                                  double tol = 1e-8);

struct SweepRow {
    int M = 0;
    double alpha = 0.0;
    double x_star = 0.0;
    double x_eq = 0.0;
    double welfare_opt = 0.0;
    double welfare_eq = 0.0;
    double eta = 0.0;
    double bound = 0.0;
    std::string error;  // non-empty when this row's solve failed
};

// Per-M solve + ratio over a scenario family; failures land in the row's
// error field and the sweep continues.
std::vector<SweepRow> sweep(const std::string& scenario_id, int m_lo, int m_hi,
                            double alpha = 0.0, double tol = 1e-9);

}  // namespace netpricing
