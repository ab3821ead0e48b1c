#include "memmac/mac_core.hpp"

#include <algorithm>
#include <string>

#include "memmac/error.hpp"

namespace memmac {

std::string_view to_string(Observation y) {
    switch (y) {
        case Observation::Idle: return "idle";
        case Observation::Busy: return "busy";
        case Observation::Success: return "success";
        case Observation::Failure: return "failure";
    }
    return "?";
}

std::string_view to_string(TrafficType z) {
    return z == TrafficType::Critical ? "critical" : "normal";
}

std::string_view to_string(Action a) {
    return a == Action::Transmit ? "T" : "W";
}

void ProtocolParams::validate() const {
    if (n_users < 2) throw BadParams("n_users must be >= 2, got " + std::to_string(n_users));
    if (!(theta > 0.0 && theta <= 1.0)) throw BadParams("theta must lie in (0,1]");
    if (!(q >= 0.0 && q <= 1.0)) throw BadParams("q must lie in [0,1]");
    if (!(r >= 0.0 && r <= 1.0)) throw BadParams("r must lie in [0,1]");
}

void EnhancementConfig::validate() const {
    if (backoff_bound < 2) throw BadParams("backoff bound B must be >= 2");
}

void UserState::observe(Observation y) {
    prev_observation = last_observation;
    last_observation = y;
    consecutive_failures = (y == Observation::Failure) ? consecutive_failures + 1 : 0;
}

double transmission_probability(const ProtocolParams& params, Observation y, TrafficType z) {
    if (z == TrafficType::Critical) return 1.0;
    switch (y) {
        case Observation::Idle: return params.q;
        case Observation::Busy: return 0.0;
        case Observation::Success: return 1.0 - params.theta;
        case Observation::Failure: return params.r;
    }
    return 0.0;
}

double enhanced_transmission_probability(const ProtocolParams& params,
                                         const EnhancementConfig& cfg,
                                         const UserState& state) {
    if (state.traffic == TrafficType::Normal) {
        // 1: a collision right after a success exposes a critical user.
        if (state.prev_observation == Observation::Success &&
            state.last_observation == Observation::Failure)
            return 0.0;
        // 2: colliding normal users share the same run length and back off together.
        if (state.consecutive_failures >= cfg.backoff_bound) return 0.0;
        // 3
        if (cfg.suppress_after_critical && state.prev_traffic == TrafficType::Critical) return 0.0;
    }
    return transmission_probability(params, state.last_observation, state.traffic);
}

double rule_g(Observation y) {
    switch (y) {
        case Observation::Idle:
        case Observation::Busy: return 1.0;
        case Observation::Success: return 0.0;
        case Observation::Failure: return 0.5;
    }
    return 0.0;
}

bool two_critical_mode_trigger(const UserState& state, const EnhancementConfig& cfg) {
    if (state.traffic != TrafficType::Critical) return false;
    if (state.two_crit_mode) return true;
    if (std::min(state.consecutive_failures, state.critical_slots) >= cfg.backoff_bound + 1)
        return true;
    return state.critical_slots >= 2 && state.prev_observation == Observation::Success &&
           state.last_observation == Observation::Failure;
}

}  // namespace memmac
