#pragma once

#include <cstddef>
#include <vector>

#include "memmac/linalg.hpp"
#include "memmac/mac_core.hpp"

namespace memmac {

/// Row-stochastic matrix over transmission-count states. Index i is state states[i]; both
/// chains here use natural order, so states[i] == i.
struct TransitionMatrix {
    DenseMatrix entries;
    std::vector<int> states;

    std::size_t dim() const { return entries.dim(); }
    double operator()(std::size_t from, std::size_t to) const { return entries(from, to); }
};

struct PerformanceMetrics {
    double t_s = 0.0;     // mean success-run length, slots
    double t_c = 0.0;     // mean contention-period length, slots
    double c_norm = 0.0;  // normal-phase utilization
    double d_crit = 0.0;  // mean collisions of the critical user before its first success
    double f_norm = 0.0;  // short-term fairness, 1 / t_s
};

/// Per-outcome decomposition of D_crit over the last normal-phase slot (l other transmitters,
/// own action a). Vectors are indexed by l = 0..N-1.
struct DelayDecomposition {
    std::vector<double> d_transmit;
    std::vector<double> d_wait;
    std::vector<double> v_transmit;
    std::vector<double> v_wait;
    // m[k]: expected slots to the critical user's first success from critical-chain state k.
    // m[0] = 0 (absorbing).
    std::vector<double> m;

    double d(std::size_t l, Action a) const {
        return a == Action::Transmit ? d_transmit.at(l) : d_wait.at(l);
    }
    double v(std::size_t l, Action a) const {
        return a == Action::Transmit ? v_transmit.at(l) : v_wait.at(l);
    }
    /// Sum over (l, a) of v(l, a) d(l, a).
    double contract() const;
};

double binomial_pmf(int n, int k, double p);

/// Normal-phase chain on states 0..N.
TransitionMatrix build_normal_matrix(const ProtocolParams& params);

/// Critical-phase chain on states 0..N-1, k = number of normal users transmitting alongside the
/// critical user; state 0 (critical success) is absorbing.
TransitionMatrix build_critical_matrix(const ProtocolParams& params);

/// Mean contention length from an idle slot to the next success. Independent of theta.
double contention_time(const ProtocolParams& params);

double channel_utilization(const ProtocolParams& params);

/// Unique w with w P = w and sum(w) = 1.
std::vector<double> stationary_distribution(const TransitionMatrix& m);

/// Expected slots to absorption in the critical chain, [(I - Q_crit)^{-1} e], padded with m[0] = 0.
std::vector<double> critical_absorption_times(const ProtocolParams& params);

DelayDecomposition delay_decomposition(const ProtocolParams& params,
                                       const std::vector<double>& w_norm);

double critical_delay(const ProtocolParams& params);

/// D_crit when normal users yield after (success, failure): d(1, W) becomes 1 - theta.
double enhanced_critical_delay(const ProtocolParams& params);

PerformanceMetrics analyze(const ProtocolParams& params);

}  // namespace memmac
