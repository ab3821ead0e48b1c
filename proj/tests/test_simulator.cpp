#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include <json.hpp>

#include "memmac/error.hpp"
#include "memmac/markov.hpp"
#include "memmac/simulator.hpp"

using namespace memmac;

namespace {

SimConfig config(int n, double theta, double q, double r, bool enhanced = false) {
    SimConfig c;
    c.params = {n, theta, q, r};
    c.enhancement.enabled = enhanced;
    c.rounds = 200;
    return c;
}

bool same(const SlotTrace& a, const SlotTrace& b) {
    if (a.slots.size() != b.slots.size()) return false;
    for (std::size_t t = 0; t < a.slots.size(); ++t) {
        const auto& x = a.slots[t];
        const auto& y = b.slots[t];
        if (x.phase != y.phase || x.epilogue != y.epilogue || x.users.size() != y.users.size()) return false;
        for (std::size_t u = 0; u < x.users.size(); ++u)
            if (x.users[u].action != y.users[u].action || x.users[u].observation != y.users[u].observation ||
                x.users[u].traffic != y.users[u].traffic)
                return false;
    }
    return true;
}

bool same(const Estimate& a, const Estimate& b) {
    return a.mean == b.mean && a.se == b.se && a.samples == b.samples;
}

int transmitters(const SlotRecord& rec) {
    int n = 0;
    for (const auto& u : rec.users) n += u.action == Action::Transmit;
    return n;
}

bool is_success(const SlotRecord& rec) { return transmitters(rec) == 1; }

}  // namespace

TEST_CASE("estimators") {
    IntegerMoments m;
    for (int x : {1, 2, 3, 4}) m.add(x);
    auto e = m.estimate();
    CHECK(e.mean == 2.5);
    CHECK(e.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
    CHECK(m.estimate(10.0).mean == 0.25);

    DurationSample plain;
    for (int x : {1, 2, 2, 5}) plain.add_complete(x);
    CHECK(plain.complete_mean().mean == 2.5);
    CHECK(plain.kaplan_meier_mean().mean == doctest::Approx(2.5));

    // one run cut after 2 slots: known to last at least 2
    DurationSample cut;
    for (int x : {1, 2, 3}) cut.add_complete(x);
    cut.add_truncated(2);
    CHECK(cut.complete_count() == 3);
    CHECK(cut.truncated_count() == 1);
    CHECK(cut.kaplan_meier_mean().mean == doctest::Approx(1.0 + 0.75 + 0.375));
    CHECK(cut.kaplan_meier_mean().samples == 4);

    DurationSample merged;
    merged.merge(plain);
    merged.merge(cut);
    CHECK(merged.complete_count() == 7);
    CHECK_THROWS_AS(merged.add_complete(0), BadParams);
}

TEST_CASE("every slot obeys the channel law") {
    for (bool enhanced : {false, true}) {
        auto cfg = config(10, 0.1, 0.1051, 0.4786, enhanced);
        for (std::uint64_t k = 0; k < 50; ++k) {
            auto rr = run_round(cfg, k);
            for (const auto& rec : rr.trace.slots) {
                const int tx = transmitters(rec);
                for (const auto& u : rec.users) {
                    Observation want = u.action == Action::Transmit
                                           ? (tx == 1 ? Observation::Success : Observation::Failure)
                                           : (tx == 0 ? Observation::Idle : Observation::Busy);
                    REQUIRE(u.observation == want);
                }
            }
        }
    }
}

TEST_CASE("a seed fixes the trace") {
    auto cfg = config(10, 0.2, 0.1051, 0.4786, true);
    cfg.seed = 99;
    for (std::uint64_t k : {0u, 1u, 17u}) CHECK(same(run_round(cfg, k).trace, run_round(cfg, k).trace));
    auto other = cfg;
    other.seed = 100;
    CHECK_FALSE(same(run_round(cfg, 3).trace, run_round(other, 3).trace));
}

TEST_CASE("aggregates do not depend on the thread count") {
    auto cfg = config(10, 0.1, 0.1051, 0.4786);
    cfg.rounds = 300;
    cfg.threads = 1;
    auto a = run_experiment(cfg);
    cfg.threads = 4;
    auto b = run_experiment(cfg);
    CHECK(same(a.t_s, b.t_s));
    CHECK(same(a.t_c, b.t_c));
    CHECK(same(a.c_norm, b.c_norm));
    CHECK(same(a.d_crit, b.d_crit));
    CHECK(a.max_d_crit == b.max_d_crit);
}

TEST_CASE("the backoff bound caps critical collisions") {
    for (int n : {3, 10, 50}) {
        auto cfg = config(n, 0.1, n == 3 ? 0.3397 : n == 10 ? 0.1051 : 0.0213, 0.48, true);
        for (std::uint64_t k = 0; k < 500; ++k) REQUIRE(run_round(cfg, k).stats.critical_collisions <= 5);
    }
}

TEST_CASE("no normal user outlasts the backoff bound") {
    auto cfg = config(10, 0.1, 0.3, 0.9, true);
    for (std::uint64_t k = 0; k < 200; ++k) {
        auto rr = run_round(cfg, k);
        std::vector<int> run(10, 0);
        for (const auto& rec : rr.trace.slots)
            for (std::size_t u = 0; u < rec.users.size(); ++u) {
                const auto& s = rec.users[u];
                run[u] = s.traffic == TrafficType::Normal && s.observation == Observation::Failure ? run[u] + 1 : 0;
                REQUIRE(run[u] <= 5);
            }
    }
}

TEST_CASE("baseline critical user is never interrupted after its first success") {
    auto cfg = config(10, 0.1, 0.1051, 0.4786);
    for (std::uint64_t k = 0; k < 300; ++k) {
        auto rr = run_round(cfg, k);
        const auto c = static_cast<std::size_t>(rr.stats.critical_user);
        bool succeeded = false;
        for (const auto& rec : rr.trace.slots) {
            if (rec.phase != Phase::Critical) continue;
            if (succeeded) REQUIRE(rec.users[c].observation == Observation::Success);
            succeeded = succeeded || rec.users[c].observation == Observation::Success;
        }
        CHECK(succeeded);
    }
}

TEST_CASE("contention periods start with an idle slot") {
    auto cfg = config(10, 0.3, 0.1051, 0.4786);
    int periods = 0;
    for (std::uint64_t k = 0; k < 100; ++k) {
        auto rr = run_round(cfg, k);
        const auto& s = rr.trace.slots;
        for (std::size_t t = 1; t < s.size(); ++t) {
            if (s[t].phase != Phase::Normal || s[t - 1].phase != Phase::Normal || s[t].epilogue) continue;
            if (is_success(s[t - 1]) && !is_success(s[t])) {
                ++periods;
                REQUIRE(transmitters(s[t]) == 0);
            }
        }
    }
    CHECK(periods > 1000);
}

TEST_CASE("the finishing critical user keeps the channel with probability 1 - theta") {
    const double theta = 0.3;
    auto cfg = config(10, theta, 0.1051, 0.4786);
    const int rounds = 4000;
    int kept = 0;
    for (std::uint64_t k = 1; k <= static_cast<std::uint64_t>(rounds); ++k) {
        auto rr = run_round(cfg, k);
        const auto& epi = rr.trace.slots.back();
        REQUIRE(epi.epilogue);
        const auto c = static_cast<std::size_t>(rr.stats.critical_user);
        for (std::size_t u = 0; u < epi.users.size(); ++u)
            if (u != c) REQUIRE(epi.users[u].action == Action::Wait);
        kept += epi.users[c].action == Action::Transmit;
    }
    const double p = 1.0 - theta;
    const double se = std::sqrt(p * (1 - p) / rounds);
    CHECK(std::abs(double(kept) / rounds - p) <= 4 * se);
}

TEST_CASE("a single user never collides") {
    auto cfg = config(1, 0.25, 0.4, 0.5);
    for (std::uint64_t k = 0; k < 50; ++k) {
        auto rr = run_round(cfg, k);
        CHECK(rr.stats.critical_collisions == 0);
        Observation last = k == 0 ? Observation::Idle : Observation::Success;
        for (const auto& rec : rr.trace.slots) {
            const auto& u = rec.users[0];
            REQUIRE(u.observation != Observation::Failure);
            REQUIRE(u.observation != Observation::Busy);
            if (rec.phase == Phase::Normal && last == Observation::Idle && u.action == Action::Transmit)
                REQUIRE(u.observation == Observation::Success);
            last = u.observation;
        }
    }
}

TEST_CASE("config validation") {
    auto cfg = config(10, 0.1, 0.1, 0.5);
    cfg.rounds = 0;
    CHECK_THROWS_AS(run_experiment(cfg), BadParams);
    cfg = config(0, 0.1, 0.1, 0.5);
    CHECK_THROWS_AS(run_experiment(cfg), BadParams);
    cfg = config(10, 0.1, 0.1, 0.5);
    cfg.traffic_model = CriticalTrafficModel::fixed(0);
    CHECK_THROWS_AS(run_experiment(cfg), BadParams);
    cfg.traffic_model = CriticalTrafficModel::geometric(0.5);
    CHECK_THROWS_AS(run_experiment(cfg), BadParams);
    CHECK(parse_scenario("two-critical-simultaneous") == Scenario::TwoCriticalSimultaneous);
    CHECK_FALSE(parse_scenario("three-critical").has_value());
}

TEST_CASE("geometric critical lengths") {
    auto cfg = config(10, 0.1, 0.1051, 0.4786);
    cfg.traffic_model = CriticalTrafficModel::geometric(8.0);
    double slots = 0;
    const int rounds = 2000;
    for (std::uint64_t k = 0; k < rounds; ++k) slots += run_round(cfg, k).stats.critical_slots;
    // critical slots = packets + collisions before the first success
    const double mean_delay = critical_delay(cfg.params);
    CHECK(std::abs(slots / rounds - (8.0 + mean_delay)) < 0.6);
}

TEST_CASE("two-critical scenarios") {
    for (auto sc : {Scenario::TwoCriticalSimultaneous, Scenario::TwoCriticalDuringSuccess,
                    Scenario::TwoCriticalDuringCollision}) {
        for (int n : {3, 10}) {
            auto cfg = config(n, 0.1, n == 3 ? 0.3397 : 0.1051, n == 3 ? 0.4896 : 0.4786, true);
            cfg.scenario = sc;
            cfg.rounds = 200;
            CAPTURE(to_string(sc));
            CAPTURE(n);
            auto s = summarize_two_critical(cfg);
            CHECK(s.runs == 200);
            CHECK(s.inference_failures == 0);
            CHECK(s.bound_violations == 0);
            CHECK(s.sharing_violations == 0);
            CHECK(s.yield_violations == 0);
            CHECK(s.exact_trigger_violations == 0);
            CHECK(s.max_slots_to_inference <= 7);
            if (sc == Scenario::TwoCriticalSimultaneous) {
                CHECK(s.slots_to_inference.mean == 6.0);
                CHECK(s.max_slots_to_inference == 6);
            }
        }
    }
}

TEST_CASE("two-critical report details") {
    auto cfg = config(10, 0.1, 0.1051, 0.4786, true);
    cfg.scenario = Scenario::TwoCriticalSimultaneous;
    auto rep = simulate_two_critical(cfg, 4);
    CHECK(rep.both_critical_slot == 0);
    CHECK(rep.failures_at_inference[0] == 6);
    CHECK(rep.failures_at_inference[1] == 6);
    CHECK(rep.users[0] != rep.users[1]);
    CHECK(rep.alternating_slots >= 3);
    CHECK(rep.completion_slot[rep.first_completed] <= rep.completion_slot[1 - rep.first_completed]);
    // the first six slots collide between the two
    for (int t = 0; t < 6; ++t) {
        const auto& rec = rep.trace.slots[static_cast<std::size_t>(t)];
        CHECK(rec.users[static_cast<std::size_t>(rep.users[0])].observation == Observation::Failure);
        CHECK(rec.users[static_cast<std::size_t>(rep.users[1])].observation == Observation::Failure);
    }
    CHECK(same(rep.trace, simulate_two_critical(cfg, 4).trace));
}

TEST_CASE("two-critical preconditions") {
    auto cfg = config(10, 0.1, 0.1051, 0.4786, false);
    cfg.scenario = Scenario::TwoCriticalSimultaneous;
    CHECK_THROWS_AS(simulate_two_critical(cfg, 0), ScenarioUnsatisfiable);
    cfg.enhancement.enabled = true;
    cfg.enhancement.suppress_after_critical = false;
    CHECK_THROWS_AS(simulate_two_critical(cfg, 0), ScenarioUnsatisfiable);
    cfg.enhancement.suppress_after_critical = true;
    cfg.scenario = Scenario::SingleCritical;
    CHECK_THROWS_AS(summarize_two_critical(cfg), ScenarioUnsatisfiable);
    cfg = config(1, 0.1, 0.1, 0.5, true);
    cfg.scenario = Scenario::TwoCriticalSimultaneous;
    CHECK_THROWS_AS(simulate_two_critical(cfg, 0), ScenarioUnsatisfiable);
}

TEST_CASE("trace records") {
    auto cfg = config(3, 0.1, 0.3397, 0.4896);
    auto rr = run_round(cfg, 2);
    std::ostringstream out;
    write_trace_ndjson(out, 2, rr.trace);
    std::istringstream in(out.str());
    std::string line;
    std::size_t count = 0;
    while (std::getline(in, line)) {
        auto j = nlohmann::json::parse(line);
        CHECK(j["round"] == 2);
        CHECK(j["slot"] == count);
        CHECK(j["users"].size() == 3);
        CHECK(j["users"][0].size() == 3);
        ++count;
    }
    CHECK(count == rr.trace.slots.size());
    CHECK(out.str().rfind("{\"round\":2,\"slot\":0,\"phase\":\"normal\",\"epilogue\":false,\"users\":[[", 0) == 0);
}

TEST_CASE("oracle with r = 0 matches the closed form") {
    const ProtocolParams p{4, 0.3, 0.25, 0.0};
    auto o = estimate_metrics_oracle(p, 100000, 3);
    CHECK(std::abs(o.d_crit.mean - critical_delay(p)) <= 3 * o.d_crit.se);
    CHECK(std::abs(o.t_c.mean - contention_time(p)) <= 3 * o.t_c.se);
}

TEST_CASE("oracle agrees with the analysis at smaller scale") {
    for (double theta : {0.1, 0.5}) {
        const ProtocolParams p{3, theta, 0.3397, 0.4896};
        auto o = estimate_metrics_oracle(p, 100000, 11);
        auto a = analyze(p);
        CAPTURE(theta);
        CHECK(std::abs(o.t_c.mean - a.t_c) <= 3 * o.t_c.se);
        CHECK(std::abs(o.c_norm.mean - a.c_norm) <= 3 * o.c_norm.se);
        CHECK(std::abs(o.d_crit.mean - a.d_crit) <= 3 * o.d_crit.se);
    }
}

TEST_CASE("simulation agrees with the analysis") {
    auto cfg = config(10, 0.1, 0.1051, 0.4786);
    cfg.rounds = 1000;
    auto r = run_experiment(cfg);
    auto a = analyze(cfg.params);
    CHECK(std::abs(r.t_s.mean - a.t_s) <= 3 * r.t_s.se);
    CHECK(std::abs(r.t_c.mean - a.t_c) <= 3 * r.t_c.se);
    CHECK(std::abs(r.c_norm.mean - a.c_norm) <= 3 * r.c_norm.se);
    CHECK(std::abs(r.d_crit.mean - a.d_crit) <= 3 * r.d_crit.se);
    CHECK(r.rounds == 1000);
    CHECK(r.truncated_success_runs + r.truncated_contention == 1000);

    cfg.enhancement.enabled = true;
    auto e = run_experiment(cfg);
    CHECK(e.max_d_crit <= 5);
    CHECK(std::abs(e.d_crit.mean - 0.918) < 0.1);
}
