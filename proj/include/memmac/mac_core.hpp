#pragma once

#include <cstdint>
#include <string_view>

namespace memmac {

/// What a user learns about a slot: channel sensing while waiting, ACK feedback while transmitting.
enum class Observation : std::uint8_t { Idle, Busy, Success, Failure };

enum class TrafficType : std::uint8_t { Normal, Critical };

enum class Action : std::uint8_t { Wait, Transmit };

std::string_view to_string(Observation y);
std::string_view to_string(TrafficType z);
std::string_view to_string(Action a);

/// A theta-fair non-intrusive adaptive protocol with 1-slot memory.
///
/// Only (q, r) are free. The remaining entries of the decision rule are pinned by the family:
/// critical users always transmit, normal users wait after a busy slot, and a successful normal
/// user keeps the channel with probability 1 - theta.
struct ProtocolParams {
    int n_users = 2;
    double theta = 0.1;
    double q = 0.1;  // f(idle, normal)
    double r = 0.5;  // f(failure, normal)

    /// Throws BadParams unless n_users >= 2, theta in (0,1], q and r in [0,1].
    void validate() const;
};

/// Longer-memory enhancement: (success, failure) yield, B-collision backoff, post-critical yield.
struct EnhancementConfig {
    bool enabled = false;
    int backoff_bound = 5;
    bool suppress_after_critical = true;

    void validate() const;
};

/// The slice of a user's history the baseline and enhanced rules read.
struct UserState {
    Observation last_observation = Observation::Idle;  // y^{t-1}
    Observation prev_observation = Observation::Idle;  // y^{t-2}
    int consecutive_failures = 0;
    TrafficType traffic = TrafficType::Normal;       // z^t
    TrafficType prev_traffic = TrafficType::Normal;  // z^{t-1}
    int critical_remaining = 0;
    int critical_slots = 0;  // slots spent with critical traffic in the current burst
    bool two_crit_mode = false;
    // Rule g starts from an idle observation on the first slot after the mode switch.
    bool g_fresh = false;
    // Set when the user finished its critical traffic while sharing the channel under rule g;
    // the user then waits in the slot that follows the next idle slot.
    bool yield_after_idle = false;

    /// Shift the observation window and update the failure run.
    void observe(Observation y);
};

/// f(y, z) for the theta-fair non-intrusive family.
double transmission_probability(const ProtocolParams& params, Observation y, TrafficType z);

/// Rules 1-4 in listing order: yield after (success, failure), yield after B consecutive
/// failures, yield in the first normal slot after a critical phase, else f(y, z).
double enhanced_transmission_probability(const ProtocolParams& params,
                                         const EnhancementConfig& cfg,
                                         const UserState& state);

/// Channel-sharing rule for two critical users.
double rule_g(Observation y);

/// Whether a critical user can infer a second critical user from its own history: more than B
/// consecutive failures while critical, or a success followed by a failure, both while critical.
/// Neither pattern is reachable with at most one critical user under the enhanced protocol.
bool two_critical_mode_trigger(const UserState& state, const EnhancementConfig& cfg);

}  // namespace memmac
