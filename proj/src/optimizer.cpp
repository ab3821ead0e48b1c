#include "memmac/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "memmac/error.hpp"
#include "memmac/markov.hpp"

namespace memmac {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Incumbent {
    double q = 0.0;
    double r = 0.0;
    double score = -kInf;
    bool found() const { return score > -kInf; }
};

// Score of a grid point; nullopt marks infeasible or unevaluable points.
using ScoreFn = std::function<std::optional<double>(double q, double r)>;

std::vector<double> grid_points(double lo, double hi, double step) {
    std::vector<double> pts;
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= count; ++i) pts.push_back(lo + static_cast<double>(i) * step);
    if (hi - pts.back() > 1e-12) pts.push_back(hi);
    return pts;
}

std::vector<double> window_points(double center, double half_width, double step, double lo,
                                  double hi) {
    std::vector<double> pts;
    const auto half = static_cast<long>(std::lround(half_width / step));
    for (long k = -half; k <= half; ++k) {
        const double x = center + static_cast<double>(k) * step;
        if (x < lo - 1e-12 || x > hi + 1e-12) continue;
        pts.push_back(std::clamp(x, lo, hi));
    }
    return pts;
}

void scan(const std::vector<double>& qs, const std::vector<double>& rs, const ScoreFn& score,
          double tie_tolerance, Incumbent& best) {
    for (double q : qs) {
        for (double r : rs) {
            const auto s = score(q, r);
            if (!s) continue;
            if (!best.found() || *s > best.score + tie_tolerance) best = {q, r, *s};
        }
    }
}

Incumbent grid_search(const DesignProblem& prob, const SearchSchedule& schedule,
                      const ScoreFn& score, const Incumbent* coarse = nullptr) {
    const double lo = prob.epsilon;
    const double hi = 1.0 - prob.epsilon;
    double step = schedule.coarse_step;

    Incumbent best;
    if (coarse) {
        best = *coarse;
    } else {
        const auto pts = grid_points(lo, hi, step);
        scan(pts, pts, score, schedule.tie_tolerance, best);
    }
    if (!best.found()) return best;

    for (int pass = 0; pass < schedule.refinement_passes; ++pass) {
        const double fine = step / 10.0;
        const auto qs = window_points(best.q, step, fine, lo, hi);
        const auto rs = window_points(best.r, step, fine, lo, hi);
        Incumbent refined;
        scan(qs, rs, score, schedule.tie_tolerance, refined);
        if (refined.found() && refined.score > best.score) best = refined;
        step = fine;
    }
    return best;
}

double d_crit_or_inf(const DesignProblem& prob, double q, double r) {
    try {
        return critical_delay(prob.protocol(q, r));
    } catch (const SingularSystem&) {
        return kInf;
    }
}

// Bisects along one coordinate from a feasible `inside` toward an infeasible `outside`,
// returning the last feasible coordinate.
double bisect_boundary(const std::function<double(double)>& d_of, double eta, double inside,
                       double outside) {
    for (int i = 0; i < 200 && std::abs(outside - inside) > 1e-13; ++i) {
        const double mid = 0.5 * (inside + outside);
        (d_of(mid) <= eta ? inside : outside) = mid;
    }
    return inside;
}

DesignSolution finish(const DesignProblem& prob, double q, double r, SolutionStatus status,
                      double eta_star) {
    const auto p = prob.protocol(q, r);
    DesignSolution s;
    s.q_opt = q;
    s.r_opt = r;
    s.t_c = contention_time(p);
    s.c_norm = 1.0 / (prob.theta * s.t_c + 1.0);
    s.d_crit = critical_delay(p);
    s.eta_star = eta_star;
    s.status = status;
    return s;
}

double c_norm_or_neg_inf(const DesignProblem& prob, double q, double r) {
    try {
        return channel_utilization(prob.protocol(q, r));
    } catch (const SingularSystem&) {
        return -kInf;
    }
}

// Best feasible point of column q: the candidate r values plus the D_crit = eta crossing in r.
Incumbent best_in_column(const DesignProblem& prob, double q, const std::vector<double>& rs,
                         double tie_tolerance) {
    const double lo = prob.epsilon;
    const double hi = 1.0 - prob.epsilon;
    Incumbent best;
    if (!(d_crit_or_inf(prob, q, lo) <= prob.eta)) return best;

    const auto d_of = [&](double r) { return d_crit_or_inf(prob, q, r); };
    const double boundary = d_of(hi) <= prob.eta ? hi : bisect_boundary(d_of, prob.eta, lo, hi);

    for (double r : rs) {
        if (r > boundary || !(d_of(r) <= prob.eta)) continue;
        const double c = c_norm_or_neg_inf(prob, q, r);
        if (!best.found() || c > best.score + tie_tolerance) best = {q, r, c};
    }
    const double c = c_norm_or_neg_inf(prob, q, boundary);
    if (!best.found() || c > best.score + tie_tolerance) best = {q, boundary, c};
    return best;
}

Incumbent scan_columns(const DesignProblem& prob, const std::vector<double>& qs,
                       const std::vector<double>& rs, double tie_tolerance) {
    Incumbent best;
    for (double q : qs) {
        const Incumbent col = best_in_column(prob, q, rs, tie_tolerance);
        if (col.found() && (!best.found() || col.score > best.score + tie_tolerance)) best = col;
    }
    return best;
}

DesignSolution solve_constrained(const DesignProblem& prob, const SearchSchedule& schedule,
                                 const DesignSolution& unconstrained) {
    if (unconstrained.d_crit <= prob.eta) {
        DesignSolution s = unconstrained;
        s.status = SolutionStatus::SlackInterior;
        return s;
    }

    const double eps = prob.epsilon;
    if (!(d_crit_or_inf(prob, eps, eps) <= prob.eta))
        return finish(prob, eps, eps, SolutionStatus::Infeasible, unconstrained.eta_star);

    const double lo = eps;
    const double hi = 1.0 - eps;
    double step = schedule.coarse_step;
    const auto coarse = grid_points(lo, hi, step);
    Incumbent best = scan_columns(prob, coarse, coarse, schedule.tie_tolerance);

    for (int pass = 0; pass < schedule.refinement_passes; ++pass) {
        const double fine = step / 10.0;
        const Incumbent refined = scan_columns(prob, window_points(best.q, step, fine, lo, hi),
                                               window_points(best.r, step, fine, lo, hi),
                                               schedule.tie_tolerance);
        if (refined.found() && refined.score > best.score) best = refined;
        step = fine;
    }

    // Corner candidate: the first crossing of D_crit = eta walking up r = eps from q = eps.
    const auto d_edge = [&](double q) { return d_crit_or_inf(prob, q, eps); };
    double q_in = eps;
    double q_out = hi;
    for (double q : coarse) {
        if (d_edge(q) > prob.eta) {
            q_out = q;
            break;
        }
        q_in = q;
    }
    const double q_corner = d_edge(q_out) > prob.eta ? bisect_boundary(d_edge, prob.eta, q_in, q_out)
                                                     : q_out;
    const double c_corner = c_norm_or_neg_inf(prob, q_corner, eps);
    if (c_corner >= best.score - schedule.tie_tolerance) best = {q_corner, eps, c_corner};

    const bool corner = best.r <= eps + 1e-9;
    return finish(prob, best.q, best.r,
                  corner ? SolutionStatus::BindingCorner : SolutionStatus::BindingInterior,
                  unconstrained.eta_star);
}

}  // namespace

std::string_view to_string(SolutionStatus s) {
    switch (s) {
        case SolutionStatus::SlackInterior: return "slack-interior";
        case SolutionStatus::BindingInterior: return "binding-interior";
        case SolutionStatus::BindingCorner: return "binding-corner";
        case SolutionStatus::Infeasible: return "infeasible";
    }
    return "?";
}

void DesignProblem::validate() const {
    protocol(0.5, 0.5).validate();
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw BadParams("epsilon must lie in (0, 0.5)");
    if (!(eta > 0.0)) throw BadParams("eta must be > 0");
}

DesignSolution maximize_utilization(const DesignProblem& prob, const SearchSchedule& schedule) {
    prob.validate();
    if (!(schedule.coarse_step > 0.0)) throw BadParams("grid step must be > 0");
    const ScoreFn score = [&](double q, double r) -> std::optional<double> {
        try {
            return -contention_time(prob.protocol(q, r));
        } catch (const SingularSystem&) {
            return std::nullopt;
        }
    };
    const Incumbent best = grid_search(prob, schedule, score);
    if (!best.found()) throw SingularSystem("no evaluable point in the restricted domain");
    DesignSolution s = finish(prob, best.q, best.r, SolutionStatus::SlackInterior, 0.0);
    s.eta_star = s.d_crit;
    return s;
}

DesignSolution solve_design_problem(const DesignProblem& prob, const SearchSchedule& schedule) {
    const DesignSolution unconstrained = maximize_utilization(prob, schedule);
    if (!prob.constrained()) return unconstrained;
    return solve_constrained(prob, schedule, unconstrained);
}

double critical_eta(const DesignProblem& prob, const SearchSchedule& schedule) {
    return maximize_utilization(prob, schedule).eta_star;
}

std::string_view to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::QrGrid: return "qr";
        case SweepAxis::NRange: return "n";
        case SweepAxis::ThetaRange: return "theta";
        case SweepAxis::EtaRange: return "eta";
        case SweepAxis::NhatRange: return "nhat";
    }
    return "?";
}

std::optional<SweepAxis> parse_sweep_axis(std::string_view name) {
    for (auto a : {SweepAxis::QrGrid, SweepAxis::NRange, SweepAxis::ThetaRange,
                   SweepAxis::EtaRange, SweepAxis::NhatRange})
        if (to_string(a) == name) return a;
    return std::nullopt;
}

namespace {

SweepRow design_row(const DesignProblem& prob, const DesignSolution& s) {
    SweepRow row;
    row.n_users = prob.n_users;
    row.n_hat = prob.n_users;
    row.theta = prob.theta;
    row.eta = prob.eta;
    row.q = s.q_opt;
    row.r = s.r_opt;
    row.t_c = s.t_c;
    row.c_norm = s.c_norm;
    row.d_crit = s.d_crit;
    row.eta_star = s.eta_star;
    row.status = s.status;
    return row;
}

template <typename Fn>
SweepRow guarded(SweepRow seed, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        seed.error = e.what();
        return seed;
    }
}

}  // namespace

SweepTable sweep(const DesignProblem& base, const SweepSpec& spec, const SearchSchedule& schedule) {
    base.validate();
    if (!(spec.step > 0.0)) throw BadParams("sweep step must be > 0");
    if (spec.axis != SweepAxis::QrGrid && spec.to < spec.from)
        throw BadParams("sweep range is empty (to < from)");

    SweepTable table{spec.axis, {}};
    const auto range = [&] { return grid_points(spec.from, spec.to, spec.step); };

    switch (spec.axis) {
        case SweepAxis::QrGrid: {
            const auto pts = grid_points(base.epsilon, 1.0 - base.epsilon, spec.step);
            for (double q : pts) {
                for (double r : pts) {
                    SweepRow seed;
                    seed.n_users = seed.n_hat = base.n_users;
                    seed.theta = base.theta;
                    seed.eta = base.eta;
                    seed.q = q;
                    seed.r = r;
                    table.rows.push_back(guarded(seed, [&] {
                        SweepRow row = seed;
                        const auto p = base.protocol(q, r);
                        row.t_c = contention_time(p);
                        row.c_norm = 1.0 / (base.theta * row.t_c + 1.0);
                        row.d_crit = critical_delay(p);
                        return row;
                    }));
                }
            }
            break;
        }
        case SweepAxis::NRange:
        case SweepAxis::ThetaRange: {
            for (double x : range()) {
                DesignProblem prob = base;
                if (spec.axis == SweepAxis::NRange)
                    prob.n_users = static_cast<int>(std::lround(x));
                else
                    prob.theta = x;
                SweepRow seed;
                seed.n_users = seed.n_hat = prob.n_users;
                seed.theta = prob.theta;
                seed.eta = prob.eta;
                table.rows.push_back(guarded(seed, [&] {
                    prob.validate();
                    return design_row(prob, solve_design_problem(prob, schedule));
                }));
            }
            break;
        }
        case SweepAxis::EtaRange: {
            const DesignSolution unconstrained = maximize_utilization(base, schedule);
            for (double eta : range()) {
                DesignProblem prob = base;
                prob.eta = eta;
                SweepRow seed;
                seed.n_users = seed.n_hat = prob.n_users;
                seed.theta = prob.theta;
                seed.eta = eta;
                table.rows.push_back(guarded(seed, [&] {
                    prob.validate();
                    return design_row(prob, solve_constrained(prob, schedule, unconstrained));
                }));
            }
            break;
        }
        case SweepAxis::NhatRange: {
            for (double x : range()) {
                DesignProblem designed = base;
                designed.n_users = static_cast<int>(std::lround(x));
                SweepRow seed;
                seed.n_users = base.n_users;
                seed.n_hat = designed.n_users;
                seed.theta = base.theta;
                seed.eta = base.eta;
                table.rows.push_back(guarded(seed, [&] {
                    designed.validate();
                    const DesignSolution s = solve_design_problem(designed, schedule);
                    SweepRow row = seed;
                    const auto p = base.protocol(s.q_opt, s.r_opt);
                    row.q = s.q_opt;
                    row.r = s.r_opt;
                    row.t_c = contention_time(p);
                    row.c_norm = 1.0 / (base.theta * row.t_c + 1.0);
                    row.d_crit = critical_delay(p);
                    row.eta_star = s.eta_star;
                    row.status = s.status;
                    row.constraint_violated = base.constrained() && row.d_crit > base.eta;
                    return row;
                }));
            }
            break;
        }
    }
    return table;
}

}  // namespace memmac
