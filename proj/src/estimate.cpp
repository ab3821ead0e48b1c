#include "memmac/estimate.hpp"

#include <algorithm>
#include <cmath>

#include "memmac/error.hpp"

namespace memmac {

Estimate IntegerMoments::estimate(double scale) const {
    Estimate e;
    e.samples = n_;
    if (n_ == 0) return e;
    const double n = static_cast<double>(n_);
    const double mean = static_cast<double>(sum_) / n;
    e.mean = mean / scale;
    if (n_ > 1) {
        const double var = (static_cast<double>(sum_sq_) - n * mean * mean) / (n - 1.0);
        e.se = std::sqrt(std::max(var, 0.0) / n) / scale;
    }
    return e;
}

void DurationSample::bump(std::vector<std::uint64_t>& h, int at) {
    if (at < 0) throw BadParams("negative duration");
    if (h.size() <= static_cast<std::size_t>(at)) h.resize(static_cast<std::size_t>(at) + 1, 0);
    ++h[static_cast<std::size_t>(at)];
}

void DurationSample::add_complete(int length) {
    if (length < 1) throw BadParams("durations are at least one slot");
    bump(events_, length);
}

void DurationSample::add_truncated(int observed) {
    if (observed < 1) throw BadParams("durations are at least one slot");
    bump(censored_, observed - 1);
}

void DurationSample::merge(const DurationSample& other) {
    const auto add = [](std::vector<std::uint64_t>& into, const std::vector<std::uint64_t>& from) {
        if (into.size() < from.size()) into.resize(from.size(), 0);
        for (std::size_t i = 0; i < from.size(); ++i) into[i] += from[i];
    };
    add(events_, other.events_);
    add(censored_, other.censored_);
}

std::uint64_t DurationSample::complete_count() const {
    std::uint64_t n = 0;
    for (auto c : events_) n += c;
    return n;
}

std::uint64_t DurationSample::truncated_count() const {
    std::uint64_t n = 0;
    for (auto c : censored_) n += c;
    return n;
}

Estimate DurationSample::complete_mean() const {
    Estimate e;
    double sum = 0.0, sum_sq = 0.0, n = 0.0;
    for (std::size_t t = 0; t < events_.size(); ++t) {
        const double c = static_cast<double>(events_[t]);
        n += c;
        sum += c * static_cast<double>(t);
        sum_sq += c * static_cast<double>(t) * static_cast<double>(t);
    }
    e.samples = static_cast<std::uint64_t>(n);
    if (n == 0.0) return e;
    e.mean = sum / n;
    if (n > 1.0) e.se = std::sqrt(std::max((sum_sq - n * e.mean * e.mean) / (n - 1.0), 0.0) / n);
    return e;
}

Estimate DurationSample::kaplan_meier_mean() const {
    Estimate e;
    e.samples = complete_count() + truncated_count();
    if (complete_count() == 0) return e;

    const std::size_t horizon = std::max(events_.size(), censored_.size());
    const auto at = [](const std::vector<std::uint64_t>& h, std::size_t t) {
        return t < h.size() ? static_cast<double>(h[t]) : 0.0;
    };

    // Durations are >= 1, so S(0) = 1 and the mean is sum_{t >= 0} S(t).
    double at_risk = static_cast<double>(e.samples) - at(censored_, 0);
    double survival = 1.0;
    std::vector<double> s_after(horizon, 1.0);  // S(t)
    std::vector<double> d(horizon, 0.0), n_risk(horizon, 0.0);
    double mean = 1.0;
    for (std::size_t t = 1; t < horizon; ++t) {
        d[t] = at(events_, t);
        n_risk[t] = at_risk;
        if (at_risk > 0.0) survival *= 1.0 - d[t] / at_risk;
        s_after[t] = survival;
        at_risk -= d[t] + at(censored_, t);
        if (t + 1 < horizon) mean += survival;
    }
    e.mean = mean;

    // Var = sum_j A_j^2 d_j / (n_j (n_j - d_j)), A_j the area under S beyond event time j.
    double var = 0.0;
    double tail = 0.0;
    for (std::size_t t = horizon; t-- > 1;) {
        if (t + 1 < horizon) tail += s_after[t];
        if (d[t] > 0.0 && n_risk[t] > d[t])
            var += tail * tail * d[t] / (n_risk[t] * (n_risk[t] - d[t]));
    }
    e.se = std::sqrt(var);
    return e;
}

}  // namespace memmac
