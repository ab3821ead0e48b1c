#include "memmac/markov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "memmac/error.hpp"

namespace memmac {

namespace {

std::vector<int> natural_states(std::size_t dim) {
    std::vector<int> s(dim);
    std::iota(s.begin(), s.end(), 0);
    return s;
}

// Fills row `from` with Binomial(from, p) over 0..from.
void binomial_row(DenseMatrix& m, int from, double p) {
    for (int to = 0; to <= from; ++to) m(from, to) = binomial_pmf(from, to, p);
}

std::vector<double> absorption_times(const DenseMatrix& q) {
    DenseMatrix a = DenseMatrix::identity(q.dim());
    for (std::size_t i = 0; i < q.dim(); ++i)
        for (std::size_t j = 0; j < q.dim(); ++j) a(i, j) -= q(i, j);
    return solve(std::move(a), std::vector<double>(q.dim(), 1.0));
}

DelayDecomposition decompose(const ProtocolParams& params, const std::vector<double>& w_norm,
                             bool enhanced) {
    params.validate();
    const int n = params.n_users;
    if (w_norm.size() != static_cast<std::size_t>(n + 1))
        throw BadParams("stationary vector must have N+1 entries");

    DelayDecomposition out;
    out.m = critical_absorption_times(params);
    out.d_transmit.assign(n, 0.0);
    out.d_wait.assign(n, 0.0);
    out.v_transmit.assign(n, 0.0);
    out.v_wait.assign(n, 0.0);

    for (int l = 2; l < n; ++l) out.d_transmit[l] = out.d_wait[l] = out.m[l] - 1.0;
    if (n >= 2) {
        out.d_transmit[1] = out.m[1] - 1.0;
        out.d_wait[1] = enhanced ? 1.0 - params.theta : (1.0 - params.theta) * out.m[1];
    }
    out.d_transmit[0] = 0.0;
    double d0w = 0.0;
    for (int k = 1; k <= n - 1; ++k) d0w += binomial_pmf(n - 1, k, params.q) * out.m[k];
    out.d_wait[0] = d0w;

    const double nn = static_cast<double>(n);
    for (int l = 0; l < n; ++l) {
        out.v_transmit[l] = (l + 1) / nn * w_norm[l + 1];
        out.v_wait[l] = (n - l) / nn * w_norm[l];
    }
    return out;
}

}  // namespace

double DelayDecomposition::contract() const {
    double acc = 0.0;
    for (std::size_t l = 0; l < d_transmit.size(); ++l)
        acc += v_transmit[l] * d_transmit[l] + v_wait[l] * d_wait[l];
    return acc;
}

double binomial_pmf(int n, int k, double p) {
    if (k < 0 || k > n) return 0.0;
    double coeff = 1.0;
    const int kk = std::min(k, n - k);
    for (int i = 1; i <= kk; ++i) coeff = coeff * (n - kk + i) / i;
    return coeff * std::pow(p, k) * std::pow(1.0 - p, n - k);
}

TransitionMatrix build_normal_matrix(const ProtocolParams& params) {
    params.validate();
    const int n = params.n_users;
    DenseMatrix m(n + 1);
    for (int to = 0; to <= n; ++to) m(0, to) = binomial_pmf(n, to, params.q);
    m(1, 0) = params.theta;
    m(1, 1) = 1.0 - params.theta;
    for (int from = 2; from <= n; ++from) binomial_row(m, from, params.r);
    return {std::move(m), natural_states(n + 1)};
}

TransitionMatrix build_critical_matrix(const ProtocolParams& params) {
    params.validate();
    const int n = params.n_users;
    DenseMatrix m(n);
    for (int from = 0; from < n; ++from) binomial_row(m, from, params.r);
    return {std::move(m), natural_states(n)};
}

double contention_time(const ProtocolParams& params) {
    const TransitionMatrix p = build_normal_matrix(params);
    // Transient states: every state except 1 (success).
    std::vector<std::size_t> transient{0};
    for (std::size_t k = 2; k < p.dim(); ++k) transient.push_back(k);
    return absorption_times(p.entries.restrict_to(transient)).front();
}

double channel_utilization(const ProtocolParams& params) {
    return 1.0 / (params.theta * contention_time(params) + 1.0);
}

std::vector<double> stationary_distribution(const TransitionMatrix& m) {
    const std::size_t n = m.dim();
    if (n == 0) throw BadParams("empty transition matrix");
    DenseMatrix a = m.entries.transposed();
    for (std::size_t i = 0; i < n; ++i) a(i, i) -= 1.0;
    // One balance equation is redundant; the normalization takes its place.
    for (std::size_t j = 0; j < n; ++j) a(n - 1, j) = 1.0;
    std::vector<double> b(n, 0.0);
    b[n - 1] = 1.0;
    return solve(std::move(a), std::move(b));
}

std::vector<double> critical_absorption_times(const ProtocolParams& params) {
    const TransitionMatrix p = build_critical_matrix(params);
    std::vector<std::size_t> transient;
    for (std::size_t k = 1; k < p.dim(); ++k) transient.push_back(k);
    std::vector<double> m{0.0};
    if (!transient.empty()) {
        const auto t = absorption_times(p.entries.restrict_to(transient));
        m.insert(m.end(), t.begin(), t.end());
    }
    return m;
}

DelayDecomposition delay_decomposition(const ProtocolParams& params,
                                       const std::vector<double>& w_norm) {
    return decompose(params, w_norm, false);
}

double critical_delay(const ProtocolParams& params) {
    const auto w = stationary_distribution(build_normal_matrix(params));
    return decompose(params, w, false).contract();
}

double enhanced_critical_delay(const ProtocolParams& params) {
    const auto w = stationary_distribution(build_normal_matrix(params));
    return decompose(params, w, true).contract();
}

PerformanceMetrics analyze(const ProtocolParams& params) {
    PerformanceMetrics out;
    out.t_s = 1.0 / params.theta;
    out.f_norm = 1.0 / out.t_s;
    out.t_c = contention_time(params);
    out.c_norm = 1.0 / (params.theta * out.t_c + 1.0);
    out.d_crit = critical_delay(params);
    return out;
}

}  // namespace memmac
