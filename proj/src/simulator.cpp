#include "memmac/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <ostream>
#include <random>
#include <string>
#include <thread>

#include <json.hpp>

#include "memmac/error.hpp"

namespace memmac {

namespace {

constexpr int kMaxCriticalSlots = 1'000'000;
constexpr int kMaxScenarioAttempts = 100'000;

enum class Stream : std::uint64_t { Round = 1, TwoCritical = 2, Oracle = 3, Aux = 4 };

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

Rng make_stream(std::uint64_t seed, std::uint64_t index, Stream stream, std::uint64_t attempt = 0) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ index);
    h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
    h = splitmix64(h ^ attempt);
    return Rng(h);
}

int uniform_index(Rng& rng, int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

int draw_length(const CriticalTrafficModel& m, Rng& rng) {
    if (m.kind == CriticalTrafficModel::Kind::Fixed) return static_cast<int>(std::lround(m.value));
    return 1 + std::geometric_distribution<int>(1.0 / m.value)(rng);
}

struct Outcome {
    int transmitters = 0;
    int winner = -1;
    bool success() const { return transmitters == 1; }
};

// The shared channel: per-user memories plus the slot update.
class Channel {
public:
    Channel(const ProtocolParams& params, const EnhancementConfig& enh)
        : users(static_cast<std::size_t>(params.n_users)), params_(params), enh_(enh),
          actions_(users.size()) {}

    std::vector<UserState> users;

    // Memories at the end of a critical phase finished by `last`.
    void post_critical_start(int last) {
        for (auto& u : users) u = UserState{Observation::Busy, Observation::Busy};
        auto& s = users[static_cast<std::size_t>(last)];
        s.last_observation = s.prev_observation = Observation::Success;
        s.prev_traffic = TrafficType::Critical;
    }

    void make_critical(int u, int packets) {
        auto& s = users[static_cast<std::size_t>(u)];
        s.traffic = TrafficType::Critical;
        s.critical_remaining = packets;
    }

    double probability(const UserState& s) const {
        if (s.traffic == TrafficType::Critical) {
            if (s.two_crit_mode) return rule_g(s.g_fresh ? Observation::Idle : s.last_observation);
            return 1.0;
        }
        if (s.yield_after_idle && s.last_observation == Observation::Idle) return 0.0;
        return enh_.enabled ? enhanced_transmission_probability(params_, enh_, s)
                            : transmission_probability(params_, s.last_observation, s.traffic);
    }

    Outcome step(Rng& rng, SlotRecord* rec = nullptr) {
        Outcome out;
        for (std::size_t u = 0; u < users.size(); ++u) {
            const double p = probability(users[u]);
            bool tx;
            if (p >= 1.0)
                tx = true;
            else if (p <= 0.0)
                tx = false;
            else
                tx = std::bernoulli_distribution(p)(rng);
            actions_[u] = tx ? Action::Transmit : Action::Wait;
            if (tx) {
                ++out.transmitters;
                out.winner = static_cast<int>(u);
            }
        }
        if (!out.success()) out.winner = -1;
        if (rec) rec->users.resize(users.size());

        for (std::size_t u = 0; u < users.size(); ++u) {
            Observation y;
            if (actions_[u] == Action::Transmit)
                y = out.success() ? Observation::Success : Observation::Failure;
            else
                y = out.transmitters == 0 ? Observation::Idle : Observation::Busy;
            if (rec) rec->users[u] = {actions_[u], y, users[u].traffic};
            update(users[u], y);
        }
        return out;
    }

private:
    void update(UserState& s, Observation y) const {
        s.g_fresh = false;
        if (s.yield_after_idle && s.last_observation == Observation::Idle) s.yield_after_idle = false;
        s.observe(y);
        s.prev_traffic = s.traffic;
        if (s.traffic == TrafficType::Critical) ++s.critical_slots;
        if (s.traffic == TrafficType::Critical && y == Observation::Success &&
            --s.critical_remaining == 0) {
            s.traffic = TrafficType::Normal;
            s.critical_slots = 0;
            if (s.two_crit_mode) s.yield_after_idle = true;
            s.two_crit_mode = false;
        }
        if (!enh_.enabled || s.traffic != TrafficType::Critical) return;
        if (!s.two_crit_mode) {
            if (two_critical_mode_trigger(s, enh_)) s.two_crit_mode = s.g_fresh = true;
        } else if (s.prev_observation == Observation::Success &&
                   s.last_observation == Observation::Idle) {
            // Own success then silence: the other critical user is gone.
            s.two_crit_mode = false;
        }
    }

    const ProtocolParams& params_;
    const EnhancementConfig& enh_;
    std::vector<Action> actions_;
};

// Splits a normal phase into success runs and contention periods.
void tally_normal_phase(const std::vector<char>& success, bool left_complete, RoundStats& st) {
    const int n = static_cast<int>(success.size());
    int begin = 0;
    while (begin < n) {
        int end = begin;
        while (end < n && success[end] == success[begin]) ++end;
        const int len = end - begin;
        const bool cut = end == n;
        const bool dropped = begin == 0 && !left_complete && !success[begin];
        if (!dropped) {
            if (success[begin])
                (cut ? st.truncated_success_runs : st.success_runs).push_back(len);
            else
                (cut ? st.truncated_contention : st.contention_lengths).push_back(len);
        }
        begin = end;
    }
}

int critical_user_of(const SimConfig& cfg, std::uint64_t round) {
    Rng rng = make_stream(cfg.seed, round, Stream::Round);
    return uniform_index(rng, cfg.params.n_users);
}

RoundStats simulate_round(const SimConfig& cfg, std::uint64_t round, SlotTrace* trace) {
    Rng rng = make_stream(cfg.seed, round, Stream::Round);
    const int n = cfg.params.n_users;
    RoundStats st;
    st.critical_user = uniform_index(rng, n);
    const int packets = draw_length(cfg.traffic_model, rng);

    Channel ch(cfg.params, cfg.enhancement);
    if (round > 0) ch.post_critical_start(critical_user_of(cfg, round - 1));

    const auto record = [&](Phase phase, bool epilogue) -> SlotRecord* {
        if (!trace) return nullptr;
        trace->slots.push_back({phase, epilogue, {}});
        return &trace->slots.back();
    };

    std::vector<char> success(static_cast<std::size_t>(cfg.normal_phase_slots));
    for (int t = 0; t < cfg.normal_phase_slots; ++t) {
        const Outcome o = ch.step(rng, record(Phase::Normal, false));
        success[static_cast<std::size_t>(t)] = o.success();
        st.normal_successes += o.success();
    }
    st.normal_slots = cfg.normal_phase_slots;
    tally_normal_phase(success, round > 0, st);

    const auto crit = static_cast<std::size_t>(st.critical_user);
    ch.make_critical(st.critical_user, packets);
    while (ch.users[crit].traffic == TrafficType::Critical) {
        if (st.critical_slots == kMaxCriticalSlots)
            throw Error("critical phase did not finish within " +
                        std::to_string(kMaxCriticalSlots) + " slots");
        ch.step(rng, record(Phase::Critical, false));
        ++st.critical_slots;
        st.critical_collisions += ch.users[crit].last_observation == Observation::Failure;
    }
    ch.step(rng, record(Phase::Normal, true));
    return st;
}

struct Partial {
    DurationSample success_runs;
    DurationSample contention;
    IntegerMoments successes;
    IntegerMoments collisions;
    int max_collisions = 0;

    void add(const RoundStats& st) {
        for (int x : st.success_runs) success_runs.add_complete(x);
        for (int x : st.truncated_success_runs) success_runs.add_truncated(x);
        for (int x : st.contention_lengths) contention.add_complete(x);
        for (int x : st.truncated_contention) contention.add_truncated(x);
        successes.add(st.normal_successes);
        collisions.add(st.critical_collisions);
        max_collisions = std::max(max_collisions, st.critical_collisions);
    }
    void merge(const Partial& o) {
        success_runs.merge(o.success_runs);
        contention.merge(o.contention);
        successes.merge(o.successes);
        collisions.merge(o.collisions);
        max_collisions = std::max(max_collisions, o.max_collisions);
    }
};

// Runs body(i, partial) for i in [0, count) over contiguous blocks and merges in block order.
template <typename P, typename Body>
P parallel_blocks(std::uint64_t count, unsigned threads, Body body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(count, 1)));
    std::vector<P> parts(threads);
    const auto run = [&](unsigned k) {
        const std::uint64_t lo = count * k / threads;
        const std::uint64_t hi = count * (k + 1) / threads;
        for (std::uint64_t i = lo; i < hi; ++i) body(i, parts[k]);
    };
    if (threads == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(threads);
        for (unsigned k = 0; k < threads; ++k)
            pool.emplace_back([&, k] {
                try {
                    run(k);
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    for (unsigned k = 1; k < threads; ++k) parts[0].merge(parts[k]);
    return std::move(parts[0]);
}

void check_two_critical(const SimConfig& cfg) {
    if (cfg.scenario == Scenario::SingleCritical)
        throw ScenarioUnsatisfiable("scenario is single-critical");
    if (!cfg.enhancement.enabled)
        throw ScenarioUnsatisfiable("two-critical inference needs the enhanced protocol");
    if (!cfg.enhancement.suppress_after_critical)
        throw ScenarioUnsatisfiable(
            "two-critical sharing needs the post-critical yield (suppress_after_critical)");
}

// One attempt; false when the sampled history does not realize the scenario.
bool try_two_critical(const SimConfig& cfg, std::uint64_t run, std::uint64_t attempt,
                      TwoCriticalReport& rep) {
    Rng rng = make_stream(cfg.seed, run, Stream::TwoCritical, attempt);
    Rng aux = make_stream(cfg.seed, run, Stream::Aux, attempt);
    const int n = cfg.params.n_users;
    const int b = cfg.enhancement.backoff_bound;

    const int i = uniform_index(rng, n);
    int j = uniform_index(rng, n - 1);
    if (j >= i) ++j;
    const int xi = std::max(2, draw_length(cfg.traffic_model, rng));
    const int xj = std::max(2, draw_length(cfg.traffic_model, rng));

    Channel ch(cfg.params, cfg.enhancement);
    for (int t = 0; t < cfg.normal_phase_slots; ++t) ch.step(rng);

    const auto ui = static_cast<std::size_t>(i);
    int arrival = 0;  // slot at which j turns critical
    switch (cfg.scenario) {
        case Scenario::TwoCriticalSimultaneous: break;
        case Scenario::TwoCriticalDuringSuccess: {
            // j arrives in a slot right after one of i's successes, while i still has packets.
            Channel probe = ch;
            Rng probe_rng = rng;
            probe.make_critical(i, xi);
            int t = 0;
            do {
                if (t == kMaxCriticalSlots) return false;
                probe.step(probe_rng);
                ++t;
            } while (probe.users[ui].last_observation != Observation::Success);
            // i succeeds at slot t - 1 and keeps the channel for xi slots in total.
            arrival = t + uniform_index(aux, xi - 1);
            break;
        }
        case Scenario::TwoCriticalDuringCollision: {
            Channel probe = ch;
            Rng probe_rng = rng;
            probe.make_critical(i, xi);
            int streak = 0;
            for (int t = 0; t < kMaxCriticalSlots; ++t) {
                probe.step(probe_rng);
                if (probe.users[ui].last_observation != Observation::Failure) break;
                ++streak;
            }
            if (streak == 0) return false;
            arrival = 1 + uniform_index(aux, streak);
            break;
        }
        case Scenario::SingleCritical: return false;
    }

    rep = TwoCriticalReport{};
    rep.scenario = cfg.scenario;
    rep.users = {i, j};
    rep.both_critical_slot = arrival;
    const std::array<std::size_t, 2> idx{ui, static_cast<std::size_t>(j)};

    ch.make_critical(i, xi);
    if (arrival == 0) ch.make_critical(j, xj);

    std::vector<Outcome> outcomes;
    int t = 0;
    const auto done = [&] {
        return t > arrival && ch.users[idx[0]].traffic == TrafficType::Normal &&
               ch.users[idx[1]].traffic == TrafficType::Normal;
    };
    while (!done()) {
        if (t == kMaxCriticalSlots) throw Error("two-critical run did not finish");
        if (t == arrival && t > 0) ch.make_critical(j, xj);
        for (int k = 0; k < 2; ++k) {
            const auto& s = ch.users[idx[k]];
            if (rep.inference_slot[k] < 0 && s.two_crit_mode) {
                rep.inference_slot[k] = t;
                rep.failures_at_inference[k] = std::min(s.consecutive_failures, s.critical_slots);
            }
        }
        rep.trace.slots.push_back({Phase::Critical, false, {}});
        outcomes.push_back(ch.step(rng, &rep.trace.slots.back()));
        for (int k = 0; k < 2; ++k) {
            if (rep.completion_slot[k] < 0 && t >= (k == 0 ? 0 : arrival) &&
                ch.users[idx[k]].traffic == TrafficType::Normal) {
                rep.completion_slot[k] = t;
                if (rep.first_completed < 0) rep.first_completed = k;
            }
        }
        ++t;
    }

    // Epilogue: run until the slot after the first idle slot that follows the first completion.
    const int first_done = rep.completion_slot[rep.first_completed];
    int idle_slot = -1;
    for (int s = first_done + 1; s < t; ++s)
        if (outcomes[static_cast<std::size_t>(s)].transmitters == 0) {
            idle_slot = s;
            break;
        }
    const int epilogue_cap = t + 16;
    do {
        rep.trace.slots.push_back({Phase::Normal, true, {}});
        outcomes.push_back(ch.step(rng, &rep.trace.slots.back()));
        if (idle_slot < 0 && outcomes.back().transmitters == 0) idle_slot = t;
        ++t;
    } while ((idle_slot < 0 || t <= idle_slot + 1) && t < epilogue_cap);

    // Property checks.
    rep.inference_finite = rep.inference_slot[0] >= 0 && rep.inference_slot[1] >= 0;
    rep.inference_within_bound = rep.inference_finite &&
                                 rep.slots_to_inference(0) <= b + 2 &&
                                 rep.slots_to_inference(1) <= b + 2;

    if (rep.inference_finite) {
        const int g_start = std::max(rep.inference_slot[0], rep.inference_slot[1]);
        bool ok = g_start >= 1 && outcomes[static_cast<std::size_t>(g_start - 1)].transmitters >= 2;
        // Idle slots before the first critical success admit normal users (they see idle and
        // transmit with probability q); from that success on the two must alternate alone.
        int last_winner = -1;
        bool sharing = false;
        rep.alternating_slots = 0;
        for (int s = g_start; s <= first_done && ok; ++s) {
            const Outcome& o = outcomes[static_cast<std::size_t>(s)];
            const bool critical_success =
                o.success() && (o.winner == static_cast<int>(idx[0]) || o.winner == static_cast<int>(idx[1]));
            if (!sharing && !critical_success) continue;
            if (!critical_success || o.winner == last_winner) ok = false;
            sharing = true;
            last_winner = o.winner;
            ++rep.alternating_slots;
        }
        rep.sharing_ok = ok && sharing;
    }
    if (idle_slot >= 0 && idle_slot + 1 < static_cast<int>(rep.trace.slots.size())) {
        const auto& rec = rep.trace.slots[static_cast<std::size_t>(idle_slot + 1)];
        rep.yield_ok = rec.users[idx[static_cast<std::size_t>(rep.first_completed)]].action ==
                       Action::Wait;
    }
    return true;
}

}  // namespace

std::string_view to_string(Scenario s) {
    switch (s) {
        case Scenario::SingleCritical: return "single";
        case Scenario::TwoCriticalDuringSuccess: return "two-critical-during-success";
        case Scenario::TwoCriticalSimultaneous: return "two-critical-simultaneous";
        case Scenario::TwoCriticalDuringCollision: return "two-critical-during-collision";
    }
    return "?";
}

std::optional<Scenario> parse_scenario(std::string_view name) {
    for (auto s : {Scenario::SingleCritical, Scenario::TwoCriticalDuringSuccess,
                   Scenario::TwoCriticalSimultaneous, Scenario::TwoCriticalDuringCollision})
        if (to_string(s) == name) return s;
    return std::nullopt;
}

std::string_view to_string(Phase p) { return p == Phase::Critical ? "critical" : "normal"; }

void CriticalTrafficModel::validate() const {
    if (kind == Kind::Fixed && !(value >= 1.0 && value == std::floor(value)))
        throw BadParams("fixed critical length must be an integer >= 1");
    if (kind == Kind::Geometric && !(value >= 1.0))
        throw BadParams("geometric critical length needs mean >= 1");
}

void SimConfig::validate() const {
    if (params.n_users < 1) throw BadParams("n_users must be >= 1");
    ProtocolParams p = params;
    p.n_users = std::max(2, p.n_users);
    p.validate();
    enhancement.validate();
    traffic_model.validate();
    if (normal_phase_slots < 1) throw BadParams("normal_phase_slots must be >= 1");
    if (rounds < 1) throw BadParams("rounds must be >= 1");
}

RoundResult run_round(const SimConfig& cfg, std::uint64_t round_index) {
    cfg.validate();
    RoundResult out;
    out.stats = simulate_round(cfg, round_index, &out.trace);
    return out;
}

ExperimentResult run_experiment(const SimConfig& cfg) {
    cfg.validate();
    const auto rounds = static_cast<std::uint64_t>(cfg.rounds);
    const Partial all = parallel_blocks<Partial>(rounds, cfg.threads, [&](std::uint64_t k, Partial& p) {
        p.add(simulate_round(cfg, k, nullptr));
    });

    ExperimentResult r;
    r.rounds = cfg.rounds;
    const bool km = cfg.truncation == TruncationPolicy::KaplanMeier;
    r.t_s = km ? all.success_runs.kaplan_meier_mean() : all.success_runs.complete_mean();
    r.t_c = km ? all.contention.kaplan_meier_mean() : all.contention.complete_mean();
    r.c_norm = all.successes.estimate(static_cast<double>(cfg.normal_phase_slots));
    r.d_crit = all.collisions.estimate();
    r.max_d_crit = all.max_collisions;
    r.truncated_success_runs = all.success_runs.truncated_count();
    r.truncated_contention = all.contention.truncated_count();
    return r;
}

TwoCriticalReport simulate_two_critical(const SimConfig& cfg, std::uint64_t run_index) {
    cfg.validate();
    check_two_critical(cfg);
    if (cfg.params.n_users < 2) throw ScenarioUnsatisfiable("two critical users need N >= 2");
    TwoCriticalReport rep;
    for (int attempt = 0; attempt < kMaxScenarioAttempts; ++attempt)
        if (try_two_critical(cfg, run_index, static_cast<std::uint64_t>(attempt), rep)) return rep;
    throw ScenarioUnsatisfiable("no sampled history realized " + std::string(to_string(cfg.scenario)));
}

TwoCriticalSummary summarize_two_critical(const SimConfig& cfg) {
    cfg.validate();
    check_two_critical(cfg);
    const int b = cfg.enhancement.backoff_bound;
    TwoCriticalSummary sum;
    IntegerMoments slots;
    for (int k = 0; k < cfg.rounds; ++k) {
        const TwoCriticalReport rep = simulate_two_critical(cfg, static_cast<std::uint64_t>(k));
        ++sum.runs;
        sum.inference_failures += !rep.inference_finite;
        sum.bound_violations += !rep.inference_within_bound;
        sum.sharing_violations += !rep.sharing_ok;
        sum.yield_violations += !rep.yield_ok;
        if (cfg.scenario == Scenario::TwoCriticalSimultaneous) {
            bool exact = true;
            for (int u = 0; u < 2; ++u)
                exact = exact && rep.slots_to_inference(u) == b + 1 &&
                        rep.failures_at_inference[u] == b + 1;
            sum.exact_trigger_violations += !exact;
        }
        for (int u = 0; u < 2; ++u) {
            const int s = rep.slots_to_inference(u);
            if (s < 0) continue;
            slots.add(s);
            sum.max_slots_to_inference = std::max(sum.max_slots_to_inference, s);
        }
    }
    sum.slots_to_inference = slots.estimate();
    return sum;
}

OracleEstimate estimate_metrics_oracle(const ProtocolParams& params, std::uint64_t rounds,
                                       std::uint64_t seed) {
    params.validate();
    if (rounds < 2) throw BadParams("oracle needs at least two rounds");
    constexpr int kWarmup = 200;
    constexpr int kWindow = 100;
    const EnhancementConfig baseline;

    struct Acc {
        IntegerMoments contention, successes, collisions;
        void merge(const Acc& o) {
            contention.merge(o.contention);
            successes.merge(o.successes);
            collisions.merge(o.collisions);
        }
    };
    const Acc acc = parallel_blocks<Acc>(rounds, 1, [&](std::uint64_t k, Acc& a) {
        Rng rng = make_stream(seed, k, Stream::Oracle);

        // Contention period: the idle slot itself plus every slot before the next success.
        Channel ch(params, baseline);
        int len = 1;
        while (!ch.step(rng).success()) {
            if (++len > kMaxCriticalSlots) throw Error("contention period did not end");
        }
        a.contention.add(len);

        Channel run(params, baseline);
        for (int t = 0; t < kWarmup; ++t) run.step(rng);
        int hits = 0;
        for (int t = 0; t < kWindow; ++t) hits += run.step(rng).success();
        a.successes.add(hits);

        const int crit = uniform_index(rng, params.n_users);
        const auto c = static_cast<std::size_t>(crit);
        run.make_critical(crit, 1);
        int collisions = 0;
        for (int t = 0; run.users[c].traffic == TrafficType::Critical; ++t) {
            if (t == kMaxCriticalSlots) throw Error("critical phase did not finish");
            run.step(rng);
            collisions += run.users[c].last_observation == Observation::Failure;
        }
        a.collisions.add(collisions);
    });
    return {acc.contention.estimate(), acc.successes.estimate(kWindow), acc.collisions.estimate()};
}

void write_trace_ndjson(std::ostream& out, std::uint64_t round, const SlotTrace& trace) {
    for (std::size_t t = 0; t < trace.slots.size(); ++t) {
        const SlotRecord& rec = trace.slots[t];
        nlohmann::ordered_json row;
        row["round"] = round;
        row["slot"] = t;
        row["phase"] = to_string(rec.phase);
        row["epilogue"] = rec.epilogue;
        auto users = nlohmann::ordered_json::array();
        for (const auto& u : rec.users)
            users.push_back({to_string(u.action), to_string(u.observation), to_string(u.traffic)});
        row["users"] = std::move(users);
        out << row.dump() << '\n';
    }
}

}  // namespace memmac
