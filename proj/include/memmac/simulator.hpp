#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "memmac/estimate.hpp"
#include "memmac/mac_core.hpp"

namespace memmac {

enum class Scenario {
    SingleCritical,
    TwoCriticalDuringSuccess,
    TwoCriticalSimultaneous,
    TwoCriticalDuringCollision,
};

std::string_view to_string(Scenario s);
std::optional<Scenario> parse_scenario(std::string_view name);

/// Length X of a critical traffic burst, in packets (one packet per slot).
struct CriticalTrafficModel {
    enum class Kind { Fixed, Geometric };
    Kind kind = Kind::Fixed;
    double value = 20.0;  // the fixed length, or the mean of the geometric law

    static CriticalTrafficModel fixed(int length) { return {Kind::Fixed, double(length)}; }
    static CriticalTrafficModel geometric(double mean) { return {Kind::Geometric, mean}; }
    void validate() const;
};

/// How runs cut off by the end of a normal phase enter the T_s and T_c estimates.
enum class TruncationPolicy { KaplanMeier, Exclude };

struct SimConfig {
    ProtocolParams params;
    EnhancementConfig enhancement;
    int normal_phase_slots = 100;
    int rounds = 1000;
    CriticalTrafficModel traffic_model;
    std::uint64_t seed = 1;
    Scenario scenario = Scenario::SingleCritical;
    TruncationPolicy truncation = TruncationPolicy::KaplanMeier;
    unsigned threads = 1;  // 0 picks the hardware concurrency

    /// Unlike ProtocolParams::validate this accepts a single user.
    void validate() const;
};

enum class Phase { Normal, Critical };

std::string_view to_string(Phase p);

struct UserSlot {
    Action action = Action::Wait;
    Observation observation = Observation::Idle;
    TrafficType traffic = TrafficType::Normal;
};

struct SlotRecord {
    Phase phase = Phase::Normal;
    // The first slot of the next normal phase, kept so the hand-over can be inspected.
    bool epilogue = false;
    std::vector<UserSlot> users;
};

struct SlotTrace {
    std::vector<SlotRecord> slots;
};

struct RoundStats {
    std::vector<int> success_runs;
    std::vector<int> contention_lengths;
    // Observed lengths of runs cut off by the end of the normal phase.
    std::vector<int> truncated_success_runs;
    std::vector<int> truncated_contention;
    int normal_successes = 0;
    int normal_slots = 0;
    int critical_collisions = 0;
    int critical_user = -1;
    int critical_slots = 0;
};

struct RoundResult {
    SlotTrace trace;
    RoundStats stats;
};

/// One normal phase followed by a single-user critical phase and the epilogue slot.
/// Round 0 starts from all-idle memories; later rounds start right after the previous round's
/// critical phase, whose user is drawn from that round's stream.
RoundResult run_round(const SimConfig& cfg, std::uint64_t round_index);

struct ExperimentResult {
    Estimate t_s;
    Estimate t_c;
    Estimate c_norm;
    Estimate d_crit;
    int max_d_crit = 0;
    int rounds = 0;
    std::uint64_t truncated_success_runs = 0;
    std::uint64_t truncated_contention = 0;
};

ExperimentResult run_experiment(const SimConfig& cfg);

/// Result of one two-critical run. Slot indices are relative to the first critical slot.
struct TwoCriticalReport {
    Scenario scenario = Scenario::TwoCriticalSimultaneous;
    std::array<int, 2> users{-1, -1};  // [0] became critical first (or at the same time)
    int both_critical_slot = -1;
    // First slot each user spent under rule g, or -1.
    std::array<int, 2> inference_slot{-1, -1};
    // Consecutive failures observed while critical when each user switched to rule g.
    std::array<int, 2> failures_at_inference{0, 0};
    std::array<int, 2> completion_slot{-1, -1};
    int first_completed = -1;  // 0 or 1, index into `users`

    // Checked on the trace.
    bool inference_finite = false;
    bool inference_within_bound = false;  // both switched within B+2 slots of both being critical
    bool sharing_ok = false;  // strict alternation from the first critical success to the first completion
    bool yield_ok = false;                // the first finisher waits in the slot after the idle slot
    int alternating_slots = 0;

    SlotTrace trace;  // critical phase plus epilogue

    int slots_to_inference(int k) const {
        return inference_slot[k] < 0 ? -1 : inference_slot[k] - both_critical_slot;
    }
};

/// Throws ScenarioUnsatisfiable unless the scenario is a two-critical one and the enhancement is
/// enabled with the post-critical yield.
TwoCriticalReport simulate_two_critical(const SimConfig& cfg, std::uint64_t run_index);

struct TwoCriticalSummary {
    int runs = 0;
    int inference_failures = 0;
    int bound_violations = 0;
    int sharing_violations = 0;
    int yield_violations = 0;
    // Simultaneous case: runs in which some user did not switch after exactly B+1 collisions.
    int exact_trigger_violations = 0;
    int max_slots_to_inference = 0;
    Estimate slots_to_inference;  // over both users of every run
};

TwoCriticalSummary summarize_two_critical(const SimConfig& cfg);

struct OracleEstimate {
    Estimate t_c;
    Estimate c_norm;
    Estimate d_crit;
};

/// Baseline protocol, one critical user. Each round draws an independent contention period
/// from all-idle memories, a 100-slot utilization window after a 200-slot warm-up, and a
/// critical phase after that window.
OracleEstimate estimate_metrics_oracle(const ProtocolParams& params, std::uint64_t rounds,
                                       std::uint64_t seed);

/// One JSON object per slot: round, slot, phase, epilogue, then per-user [action, observation,
/// traffic] triples in user order.
void write_trace_ndjson(std::ostream& out, std::uint64_t round, const SlotTrace& trace);

}  // namespace memmac
