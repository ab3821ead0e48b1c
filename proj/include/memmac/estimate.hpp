#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace memmac {

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
    std::uint64_t samples = 0;
};

/// Running moments over integer samples. Integer sums keep aggregation exact and
/// order-independent.
class IntegerMoments {
public:
    void add(std::int64_t x) {
        ++n_;
        sum_ += x;
        sum_sq_ += x * x;
    }
    void merge(const IntegerMoments& other) {
        n_ += other.n_;
        sum_ += other.sum_;
        sum_sq_ += other.sum_sq_;
    }
    std::uint64_t count() const { return n_; }
    /// Sample mean of x / scale with the standard error of that mean.
    Estimate estimate(double scale = 1.0) const;

private:
    std::uint64_t n_ = 0;
    std::int64_t sum_ = 0;
    std::int64_t sum_sq_ = 0;
};

/// Histogram of positive integer durations, some of them right-censored.
class DurationSample {
public:
    void add_complete(int length);
    /// The duration was cut off after `observed` units, so only length >= observed is known.
    void add_truncated(int observed);
    void merge(const DurationSample& other);

    std::uint64_t complete_count() const;
    std::uint64_t truncated_count() const;

    /// Plain mean over complete durations.
    Estimate complete_mean() const;
    /// Kaplan-Meier mean restricted to the largest observed time, with a Greenwood-type SE.
    Estimate kaplan_meier_mean() const;

private:
    static void bump(std::vector<std::uint64_t>& h, int at);
    std::vector<std::uint64_t> events_;    // events_[t]: durations equal to t
    std::vector<std::uint64_t> censored_;  // censored_[t]: known only to exceed t
};

}  // namespace memmac
