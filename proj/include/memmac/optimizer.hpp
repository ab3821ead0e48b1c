#pragma once

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memmac/mac_core.hpp"

namespace memmac {

enum class SolutionStatus { SlackInterior, BindingInterior, BindingCorner, Infeasible };

std::string_view to_string(SolutionStatus s);

/// max C_norm over (q, r) in [eps, 1-eps]^2 subject to D_crit <= eta.
struct DesignProblem {
    int n_users = 10;
    double theta = 0.1;
    double eta = std::numeric_limits<double>::infinity();
    double epsilon = 0.01;

    void validate() const;
    bool constrained() const { return eta != std::numeric_limits<double>::infinity(); }
    ProtocolParams protocol(double q, double r) const { return {n_users, theta, q, r}; }
};

struct DesignSolution {
    double q_opt = 0.0;
    double r_opt = 0.0;
    double c_norm = 0.0;
    double d_crit = 0.0;
    double t_c = 0.0;
    // D_crit at the unconstrained maximizer: the constraint is slack iff eta >= eta_star.
    double eta_star = 0.0;
    SolutionStatus status = SolutionStatus::SlackInterior;
};

/// Grid schedule: a coarse pass at `coarse_step`, then `refinement_passes` passes, each with a
/// ten times finer step over a window of one previous step around the incumbent.
struct SearchSchedule {
    double coarse_step = 0.01;
    int refinement_passes = 2;
    // Plateau width inside which ties go to the smaller q, then the smaller r.
    double tie_tolerance = 1e-9;
};

/// Unconstrained optimum; minimizes T_c, which is theta-independent.
DesignSolution maximize_utilization(const DesignProblem& prob, const SearchSchedule& schedule = {});

/// Constrained optimum with regime classification. eta = +inf delegates to maximize_utilization.
DesignSolution solve_design_problem(const DesignProblem& prob, const SearchSchedule& schedule = {});

double critical_eta(const DesignProblem& prob, const SearchSchedule& schedule = {});

enum class SweepAxis { QrGrid, NRange, ThetaRange, EtaRange, NhatRange };

std::string_view to_string(SweepAxis axis);
std::optional<SweepAxis> parse_sweep_axis(std::string_view name);

/// Range for the swept quantity. For QrGrid only `step` is read (the grid spans [eps, 1-eps]).
struct SweepSpec {
    SweepAxis axis = SweepAxis::QrGrid;
    double from = 0.0;
    double to = 0.0;
    double step = 0.01;
};

struct SweepRow {
    int n_users = 0;
    int n_hat = 0;  // N the protocol was designed for (NhatRange), else n_users
    double theta = 0.0;
    double eta = 0.0;
    double q = 0.0;
    double r = 0.0;
    double t_c = 0.0;
    double c_norm = 0.0;
    double d_crit = 0.0;
    double eta_star = 0.0;
    std::optional<SolutionStatus> status;
    bool constraint_violated = false;
    std::string error;  // empty when the point evaluated cleanly
};

struct SweepTable {
    SweepAxis axis = SweepAxis::QrGrid;
    std::vector<SweepRow> rows;
};

/// One row per grid point, in grid order. `base` supplies the fixed quantities.
SweepTable sweep(const DesignProblem& base, const SweepSpec& spec,
                 const SearchSchedule& schedule = {});

}  // namespace memmac
