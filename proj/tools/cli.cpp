#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "memmac/error.hpp"
#include "memmac/markov.hpp"
#include "memmac/optimizer.hpp"
#include "memmac/simulator.hpp"

namespace memmac::cli {

namespace {

using Json = nlohmann::ordered_json;

enum class Format { Table, Json, Csv };

std::string fixed4(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return fmt::format("{:.4f}", x);
}

// Shortest round-trip representation; fmt never consults the locale here.
std::string exact(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return fmt::format("{}", x);
}

Json json_number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

std::string csv_line(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    return line + '\n';
}

struct Output {
    std::string format = "table";
    std::string path;

    Format kind() const {
        if (format == "json") return Format::Json;
        if (format == "csv") return Format::Csv;
        return Format::Table;
    }
};

void add_output_options(CLI::App* sub, Output& o) {
    sub->add_option("--format", o.format, "table, json or csv")
        ->check(CLI::IsMember({"table", "json", "csv"}));
    sub->add_option("--output", o.path, "write the report here instead of stdout");
}

void emit(const Output& o, const std::string& text, std::ostream& out) {
    if (o.path.empty()) {
        out << text;
        return;
    }
    std::ofstream file(o.path, std::ios::binary);
    if (!file) throw BadParams("cannot open output file " + o.path);
    file << text;
}

std::string dump(const Json& j) { return j.dump(2) + '\n'; }

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
    int n = 0;
    double theta = 0, q = 0, r = 0;
    bool enhanced = false;
    Output out;
};

std::string cmd_analyze(const AnalyzeArgs& a) {
    const ProtocolParams p{a.n, a.theta, a.q, a.r};
    p.validate();
    const PerformanceMetrics m = analyze(p);
    const double d_enhanced = a.enhanced ? enhanced_critical_delay(p) : 0.0;

    switch (a.out.kind()) {
        case Format::Json: {
            Json j;
            j["command"] = "analyze";
            j["params"] = {{"n", p.n_users}, {"theta", p.theta}, {"q", p.q}, {"r", p.r}};
            Json metrics = {{"t_s", m.t_s}, {"t_c", m.t_c}, {"c_norm", m.c_norm},
                            {"d_crit", m.d_crit}, {"f_norm", m.f_norm}};
            if (a.enhanced) metrics["d_crit_enhanced"] = d_enhanced;
            j["metrics"] = std::move(metrics);
            return dump(j);
        }
        case Format::Csv:
            return csv_line({"n", "theta", "q", "r", "t_s", "t_c", "c_norm", "d_crit", "f_norm",
                             "d_crit_enhanced"}) +
                   csv_line({std::to_string(p.n_users), exact(p.theta), exact(p.q), exact(p.r),
                             exact(m.t_s), exact(m.t_c), exact(m.c_norm), exact(m.d_crit),
                             exact(m.f_norm), a.enhanced ? exact(d_enhanced) : ""});
        case Format::Table: break;
    }
    std::string s = fmt::format("N = {}, theta = {}, q = {}, r = {}\n", p.n_users, fixed4(p.theta),
                                fixed4(p.q), fixed4(p.r));
    const auto row = [&](std::string_view k, double v) { s += fmt::format("{:<20}{:>10}\n", k, fixed4(v)); };
    row("T_s", m.t_s);
    row("T_c", m.t_c);
    row("C_norm", m.c_norm);
    row("D_crit", m.d_crit);
    if (a.enhanced) row("D_crit (enhanced)", d_enhanced);
    row("F_norm", m.f_norm);
    return s;
}

// ---------------------------------------------------------------- optimize

struct OptimizeArgs {
    DesignProblem prob;
    SearchSchedule schedule;
    Output out;
};

// Infeasible designs are reported in full, then mapped to their own exit code.
struct OptimizeReport {
    std::string text;
    bool infeasible = false;
};

OptimizeReport cmd_optimize(const OptimizeArgs& a) {
    a.prob.validate();
    if (!(a.schedule.coarse_step > 0.0)) throw BadParams("--step must be > 0");
    if (a.schedule.refinement_passes < 0) throw BadParams("--passes must be >= 0");
    const DesignSolution s = solve_design_problem(a.prob, a.schedule);
    std::string text;
    switch (a.out.kind()) {
        case Format::Json: {
            Json j;
            j["command"] = "optimize";
            j["problem"] = {{"n", a.prob.n_users},
                            {"theta", a.prob.theta},
                            {"eta", json_number(a.prob.eta)},
                            {"epsilon", a.prob.epsilon}};
            j["solution"] = {{"q", s.q_opt},       {"r", s.r_opt},         {"c_norm", s.c_norm},
                             {"d_crit", s.d_crit}, {"t_c", s.t_c},         {"eta_star", s.eta_star},
                             {"status", to_string(s.status)}};
            text = dump(j);
            break;
        }
        case Format::Csv:
            text = csv_line({"n", "theta", "eta", "epsilon", "q", "r", "c_norm", "d_crit", "t_c",
                             "eta_star", "status"}) +
                   csv_line({std::to_string(a.prob.n_users), exact(a.prob.theta), exact(a.prob.eta),
                             exact(a.prob.epsilon), exact(s.q_opt), exact(s.r_opt), exact(s.c_norm),
                             exact(s.d_crit), exact(s.t_c), exact(s.eta_star),
                             std::string(to_string(s.status))});
            break;
        case Format::Table: {
            text = fmt::format("N = {}, theta = {}, eta = {}, epsilon = {}\n", a.prob.n_users,
                               fixed4(a.prob.theta), fixed4(a.prob.eta), fixed4(a.prob.epsilon));
            const auto row = [&](std::string_view k, const std::string& v) {
                text += fmt::format("{:<12}{:>18}\n", k, v);
            };
            row("q", fixed4(s.q_opt));
            row("r", fixed4(s.r_opt));
            row("C_norm", fixed4(s.c_norm));
            row("D_crit", fixed4(s.d_crit));
            row("T_c", fixed4(s.t_c));
            row("eta*", fixed4(s.eta_star));
            row("status", std::string(to_string(s.status)));
            break;
        }
    }
    return {text, s.status == SolutionStatus::Infeasible};
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    int n = 0;
    double theta = 0;
    std::optional<double> q, r;
    int rounds = 1000;
    int slots = 100;
    std::uint64_t seed = 1;
    bool enhanced = false;
    int b = 5;
    bool no_suppress = false;
    int x = 20;
    std::optional<double> x_mean;
    std::string scenario = "single";
    std::string truncation = "km";
    unsigned threads = 1;
    std::string trace;
    Output out;
};

SimConfig make_sim_config(const SimulateArgs& a) {
    SimConfig cfg;
    cfg.params.n_users = a.n;
    cfg.params.theta = a.theta;
    if (!a.q || !a.r) {
        const DesignSolution opt = maximize_utilization({a.n, a.theta});
        cfg.params.q = a.q.value_or(opt.q_opt);
        cfg.params.r = a.r.value_or(opt.r_opt);
    } else {
        cfg.params.q = *a.q;
        cfg.params.r = *a.r;
    }
    cfg.enhancement = {a.enhanced, a.b, !a.no_suppress};
    cfg.normal_phase_slots = a.slots;
    cfg.rounds = a.rounds;
    cfg.traffic_model =
        a.x_mean ? CriticalTrafficModel::geometric(*a.x_mean) : CriticalTrafficModel::fixed(a.x);
    cfg.seed = a.seed;
    cfg.scenario = *parse_scenario(a.scenario);
    cfg.truncation = a.truncation == "exclude" ? TruncationPolicy::Exclude : TruncationPolicy::KaplanMeier;
    cfg.threads = a.threads;
    cfg.validate();
    return cfg;
}

void write_traces(const SimConfig& cfg, const std::string& path) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw BadParams("cannot open trace file " + path);
    for (int k = 0; k < cfg.rounds; ++k) {
        const auto idx = static_cast<std::uint64_t>(k);
        if (cfg.scenario == Scenario::SingleCritical)
            write_trace_ndjson(file, idx, run_round(cfg, idx).trace);
        else
            write_trace_ndjson(file, idx, simulate_two_critical(cfg, idx).trace);
    }
}

Json params_json(const SimConfig& cfg) {
    return {{"n", cfg.params.n_users},
            {"theta", cfg.params.theta},
            {"q", cfg.params.q},
            {"r", cfg.params.r},
            {"rounds", cfg.rounds},
            {"normal_phase_slots", cfg.normal_phase_slots},
            {"seed", cfg.seed},
            {"enhanced", cfg.enhancement.enabled},
            {"backoff_bound", cfg.enhancement.backoff_bound},
            {"suppress_after_critical", cfg.enhancement.suppress_after_critical},
            {"scenario", to_string(cfg.scenario)}};
}

std::string header_line(const SimConfig& cfg) {
    std::string s = fmt::format("N = {}, theta = {}, q = {}, r = {}, rounds = {}, slots = {}, seed = {}",
                                cfg.params.n_users, fixed4(cfg.params.theta), fixed4(cfg.params.q),
                                fixed4(cfg.params.r), cfg.rounds, cfg.normal_phase_slots, cfg.seed);
    if (cfg.enhancement.enabled) s += fmt::format(", B = {}", cfg.enhancement.backoff_bound);
    return s + '\n';
}

std::string report_single(const SimConfig& cfg, Format format) {
    const ExperimentResult e = run_experiment(cfg);
    std::optional<PerformanceMetrics> a;
    if (cfg.params.n_users >= 2) a = analyze(cfg.params);
    const std::string label = cfg.enhancement.enabled ? "EAP (simulation)" : "AP (simulation)";

    switch (format) {
        case Format::Json: {
            Json j;
            j["command"] = "simulate";
            j["config"] = params_json(cfg);
            if (a)
                j["analysis"] = {{"t_s", a->t_s}, {"t_c", a->t_c}, {"c_norm", a->c_norm},
                                 {"d_crit", a->d_crit}};
            const auto est = [](const Estimate& x) {
                return Json{{"mean", x.mean}, {"se", x.se}, {"samples", x.samples}};
            };
            j["simulation"] = {{"t_s", est(e.t_s)},       {"t_c", est(e.t_c)},
                               {"c_norm", est(e.c_norm)}, {"d_crit", est(e.d_crit)},
                               {"max_d_crit", e.max_d_crit}};
            return dump(j);
        }
        case Format::Csv: {
            std::string s = csv_line({"label", "n", "theta", "q", "r", "t_s", "t_c", "c_norm", "d_crit",
                                      "max_d_crit", "t_s_se", "t_c_se", "c_norm_se", "d_crit_se"});
            const std::vector<std::string> key{std::to_string(cfg.params.n_users),
                                               exact(cfg.params.theta), exact(cfg.params.q),
                                               exact(cfg.params.r)};
            auto row = std::vector<std::string>{"AP (analysis)"};
            if (a) {
                row.insert(row.end(), key.begin(), key.end());
                for (double v : {a->t_s, a->t_c, a->c_norm, a->d_crit}) row.push_back(exact(v));
                row.insert(row.end(), 5, "");
                s += csv_line(row);
            }
            row = {label};
            row.insert(row.end(), key.begin(), key.end());
            for (const Estimate* v : {&e.t_s, &e.t_c, &e.c_norm, &e.d_crit}) row.push_back(exact(v->mean));
            row.push_back(std::to_string(e.max_d_crit));
            for (const Estimate* v : {&e.t_s, &e.t_c, &e.c_norm, &e.d_crit}) row.push_back(exact(v->se));
            return s + csv_line(row);
        }
        case Format::Table: break;
    }
    std::string s = header_line(cfg);
    s += fmt::format("{:<18}{:>10}{:>10}{:>10}{:>10}{:>12}\n", "", "T_s", "T_c", "C_norm", "D_crit",
                     "max D_crit");
    if (a)
        s += fmt::format("{:<18}{:>10}{:>10}{:>10}{:>10}\n", "AP (analysis)", fixed4(a->t_s),
                         fixed4(a->t_c), fixed4(a->c_norm), fixed4(a->d_crit));
    s += fmt::format("{:<18}{:>10}{:>10}{:>10}{:>10}{:>12}\n", label, fixed4(e.t_s.mean),
                     fixed4(e.t_c.mean), fixed4(e.c_norm.mean), fixed4(e.d_crit.mean), e.max_d_crit);
    s += fmt::format("{:<18}{:>10}{:>10}{:>10}{:>10}\n", "std. error", fixed4(e.t_s.se),
                     fixed4(e.t_c.se), fixed4(e.c_norm.se), fixed4(e.d_crit.se));
    return s;
}

std::string report_two_critical(const SimConfig& cfg, Format format) {
    const TwoCriticalSummary t = summarize_two_critical(cfg);
    const std::vector<std::pair<std::string, std::string>> rows{
        {"runs", std::to_string(t.runs)},
        {"inference_failures", std::to_string(t.inference_failures)},
        {"bound_violations", std::to_string(t.bound_violations)},
        {"sharing_violations", std::to_string(t.sharing_violations)},
        {"yield_violations", std::to_string(t.yield_violations)},
        {"exact_trigger_violations", std::to_string(t.exact_trigger_violations)},
        {"mean_slots_to_inference", fixed4(t.slots_to_inference.mean)},
        {"max_slots_to_inference", std::to_string(t.max_slots_to_inference)},
    };
    switch (format) {
        case Format::Json: {
            Json j;
            j["command"] = "simulate";
            j["config"] = params_json(cfg);
            j["two_critical"] = {{"runs", t.runs},
                                 {"inference_failures", t.inference_failures},
                                 {"bound_violations", t.bound_violations},
                                 {"sharing_violations", t.sharing_violations},
                                 {"yield_violations", t.yield_violations},
                                 {"exact_trigger_violations", t.exact_trigger_violations},
                                 {"mean_slots_to_inference", t.slots_to_inference.mean},
                                 {"max_slots_to_inference", t.max_slots_to_inference}};
            return dump(j);
        }
        case Format::Csv: {
            std::vector<std::string> head{"scenario", "n", "b"}, vals{
                std::string(to_string(cfg.scenario)), std::to_string(cfg.params.n_users),
                std::to_string(cfg.enhancement.backoff_bound)};
            for (const auto& [k, v] : rows) {
                head.push_back(k);
                vals.push_back(k == "mean_slots_to_inference" ? exact(t.slots_to_inference.mean) : v);
            }
            return csv_line(head) + csv_line(vals);
        }
        case Format::Table: break;
    }
    std::string s = fmt::format("scenario {}\n", to_string(cfg.scenario)) + header_line(cfg);
    for (const auto& [k, v] : rows) s += fmt::format("{:<28}{:>10}\n", k, v);
    return s;
}

std::string cmd_simulate(const SimulateArgs& a) {
    const SimConfig cfg = make_sim_config(a);
    std::string text = cfg.scenario == Scenario::SingleCritical ? report_single(cfg, a.out.kind())
                                                                : report_two_critical(cfg, a.out.kind());
    if (!a.trace.empty()) write_traces(cfg, a.trace);
    return text;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
    DesignProblem base;
    SearchSchedule schedule;
    std::string axis;
    std::optional<double> from, to, step;
    Output out{"csv", ""};
};

std::string cmd_sweep(const SweepArgs& a) {
    SweepSpec spec;
    spec.axis = *parse_sweep_axis(a.axis);
    if (spec.axis != SweepAxis::QrGrid && (!a.from || !a.to))
        throw BadParams("--from and --to are required for axis " + a.axis);
    spec.from = a.from.value_or(0.0);
    spec.to = a.to.value_or(0.0);
    const bool integral = spec.axis == SweepAxis::NRange || spec.axis == SweepAxis::NhatRange;
    spec.step = a.step.value_or(integral ? 1.0 : 0.01);
    const SweepTable table = sweep(a.base, spec, a.schedule);

    const std::vector<std::string> head{"axis",   "n",        "n_hat",  "theta",    "eta",
                                        "q",      "r",        "t_c",    "c_norm",   "d_crit",
                                        "eta_star", "status", "constraint_violated", "error"};
    switch (a.out.kind()) {
        case Format::Json: {
            Json rows = Json::array();
            for (const auto& r : table.rows) {
                Json j = {{"n", r.n_users},          {"n_hat", r.n_hat},       {"theta", r.theta},
                          {"eta", json_number(r.eta)}, {"q", r.q},             {"r", r.r},
                          {"t_c", r.t_c},            {"c_norm", r.c_norm},     {"d_crit", r.d_crit},
                          {"eta_star", r.eta_star}};
                j["status"] = r.status ? Json(to_string(*r.status)) : Json(nullptr);
                j["constraint_violated"] = r.constraint_violated;
                j["error"] = r.error.empty() ? Json(nullptr) : Json(r.error);
                rows.push_back(std::move(j));
            }
            Json j;
            j["command"] = "sweep";
            j["axis"] = to_string(table.axis);
            j["rows"] = std::move(rows);
            return dump(j);
        }
        case Format::Csv: {
            std::string s = csv_line(head);
            for (const auto& r : table.rows) {
                std::string err = r.error;
                for (char& c : err)
                    if (c == ',' || c == '\n') c = ';';
                s += csv_line({std::string(to_string(table.axis)), std::to_string(r.n_users),
                               std::to_string(r.n_hat), exact(r.theta), exact(r.eta), exact(r.q),
                               exact(r.r), exact(r.t_c), exact(r.c_norm), exact(r.d_crit),
                               exact(r.eta_star), r.status ? std::string(to_string(*r.status)) : "",
                               r.constraint_violated ? "1" : "0", err});
            }
            return s;
        }
        case Format::Table: break;
    }
    std::string s = fmt::format("{:>5}{:>7}{:>9}{:>9}{:>9}{:>9}{:>9}{:>9}{:>9}  {}\n", "N", "N_hat",
                                "theta", "eta", "q", "r", "T_c", "C_norm", "D_crit", "status");
    for (const auto& r : table.rows) {
        std::string status = r.status ? std::string(to_string(*r.status)) : "";
        if (r.constraint_violated) status += " (constraint violated)";
        if (!r.error.empty()) status = r.error;
        s += fmt::format("{:>5}{:>7}{:>9}{:>9}{:>9}{:>9}{:>9}{:>9}{:>9}  {}\n", r.n_users, r.n_hat,
                         fixed4(r.theta), fixed4(r.eta), fixed4(r.q), fixed4(r.r), fixed4(r.t_c),
                         fixed4(r.c_norm), fixed4(r.d_crit), status);
    }
    return s;
}

// ---------------------------------------------------------------- config file

std::string trim(std::string s) {
    const auto ws = " \t\r\n";
    s.erase(0, s.find_first_not_of(ws));
    s.erase(s.find_last_not_of(ws) + 1);
    return s;
}

// Flat key=value lines become --key=value tokens.
std::vector<std::string> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw BadParams("cannot read config file " + path);
    std::vector<std::string> tokens;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw BadParams(fmt::format("{}:{}: expected key=value", path, lineno));
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        while (!key.empty() && key.front() == '-') key.erase(0, 1);
        if (key.empty()) throw BadParams(fmt::format("{}:{}: empty key", path, lineno));
        tokens.push_back("--" + key + "=" + value);
    }
    return tokens;
}

// Splices config tokens in right after the subcommand so that later command-line flags win.
std::vector<std::string> expand_config(std::vector<std::string> args,
                                       const std::vector<std::string>& commands) {
    std::optional<std::string> path;
    for (std::size_t i = 0; i < args.size();) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw BadParams("--config needs a file");
            path = args[i + 1];
            args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<long>(i));
        } else {
            ++i;
        }
    }
    if (!path) return args;
    const auto tokens = read_config(*path);
    auto at = std::find_if(args.begin(), args.end(), [&](const std::string& a) {
        return std::find(commands.begin(), commands.end(), a) != commands.end();
    });
    if (at != args.end()) ++at;
    args.insert(at, tokens.begin(), tokens.end());
    return args;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Analyze, optimize and simulate theta-fair adaptive MAC protocols with 1-slot memory",
                 "memmac"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "help for every subcommand");
    app.add_option("--config", "key=value file; command-line flags override it");

    AnalyzeArgs an;
    auto* analyze_cmd = app.add_subcommand("analyze", "closed-form metrics for one protocol");
    analyze_cmd->add_option("--n", an.n, "number of users N")->required();
    analyze_cmd->add_option("--theta", an.theta, "fairness parameter theta")->required();
    analyze_cmd->add_option("--q", an.q, "f(idle, normal)")->required();
    analyze_cmd->add_option("--r", an.r, "f(failure, normal)")->required();
    analyze_cmd->add_flag("--enhanced", an.enhanced, "also report D_crit with the (success, failure) yield");
    add_output_options(analyze_cmd, an.out);

    OptimizeArgs op;
    auto* optimize_cmd = app.add_subcommand("optimize", "max C_norm subject to D_crit <= eta");
    optimize_cmd->add_option("--n", op.prob.n_users, "number of users N")->required();
    optimize_cmd->add_option("--theta", op.prob.theta, "fairness parameter theta")->required();
    optimize_cmd->add_option("--eta", op.prob.eta, "delay bound (omit for unconstrained)");
    optimize_cmd->add_option("--epsilon", op.prob.epsilon, "domain margin");
    optimize_cmd->add_option("--step", op.schedule.coarse_step, "coarse grid step");
    optimize_cmd->add_option("--passes", op.schedule.refinement_passes, "refinement passes");
    add_output_options(optimize_cmd, op.out);

    SimulateArgs si;
    auto* simulate_cmd = app.add_subcommand("simulate", "slot-level Monte Carlo");
    simulate_cmd->add_option("--n", si.n, "number of users N")->required();
    simulate_cmd->add_option("--theta", si.theta, "fairness parameter theta")->required();
    simulate_cmd->add_option("--q", si.q, "f(idle, normal); default: unconstrained optimum");
    simulate_cmd->add_option("--r", si.r, "f(failure, normal); default: unconstrained optimum");
    simulate_cmd->add_option("--rounds", si.rounds, "rounds (or runs for two-critical scenarios)");
    simulate_cmd->add_option("--slots", si.slots, "normal-phase slots per round");
    simulate_cmd->add_option("--seed", si.seed, "random seed");
    simulate_cmd->add_flag("--enhanced", si.enhanced, "use the enhanced protocol");
    simulate_cmd->add_option("--b", si.b, "backoff bound B");
    simulate_cmd->add_flag("--no-suppress", si.no_suppress,
                           "do not yield in the first normal slot after a critical phase");
    simulate_cmd->add_option("--x", si.x, "fixed critical traffic length");
    simulate_cmd->add_option("--x-mean", si.x_mean, "geometric critical traffic length with this mean");
    simulate_cmd->add_option("--scenario", si.scenario, "critical-event scenario")
        ->check(CLI::IsMember({"single", "two-critical-during-success", "two-critical-simultaneous",
                               "two-critical-during-collision"}));
    simulate_cmd->add_option("--truncation", si.truncation, "runs cut by the phase end: km or exclude")
        ->check(CLI::IsMember({"km", "exclude"}));
    simulate_cmd->add_option("--threads", si.threads, "worker threads, 0 for all cores");
    simulate_cmd->add_option("--trace", si.trace, "write per-slot NDJSON records here");
    add_output_options(simulate_cmd, si.out);

    SweepArgs sw;
    auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweeps and contour grids");
    sweep_cmd->add_option("--axis", sw.axis, "qr, n, theta, eta or nhat")
        ->required()
        ->check(CLI::IsMember({"qr", "n", "theta", "eta", "nhat"}));
    sweep_cmd->add_option("--n", sw.base.n_users, "number of users N (true N for nhat)");
    sweep_cmd->add_option("--theta", sw.base.theta, "fairness parameter theta");
    sweep_cmd->add_option("--eta", sw.base.eta, "delay bound (omit for unconstrained)");
    sweep_cmd->add_option("--epsilon", sw.base.epsilon, "domain margin");
    sweep_cmd->add_option("--from", sw.from, "first value of the swept quantity");
    sweep_cmd->add_option("--to", sw.to, "last value of the swept quantity");
    sweep_cmd->add_option("--step", sw.step, "grid step (default 0.01, or 1 for n and nhat)");
    sweep_cmd->add_option("--passes", sw.schedule.refinement_passes, "refinement passes");
    add_output_options(sweep_cmd, sw.out);

    std::vector<std::string> args;
    try {
        args = expand_config(raw_args, {"analyze", "optimize", "simulate", "sweep"});
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kBadArguments;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kBadArguments;
    }

    try {
        std::string text;
        Output where;
        if (analyze_cmd->parsed()) {
            text = cmd_analyze(an);
            where = an.out;
        } else if (optimize_cmd->parsed()) {
            where = op.out;
            const OptimizeReport rep = cmd_optimize(op);
            if (rep.infeasible) {
                emit(where, rep.text, out);
                err << "error: Infeasible: D_crit exceeds eta even at (epsilon, epsilon)\n";
                return kInfeasible;
            }
            text = rep.text;
        } else if (simulate_cmd->parsed()) {
            text = cmd_simulate(si);
            where = si.out;
        } else {
            text = cmd_sweep(sw);
            where = sw.out;
        }
        emit(where, text, out);
        return kOk;
    } catch (const BadParams& e) {
        err << "error: " << e.what() << '\n';
        return kBadArguments;
    } catch (const ScenarioUnsatisfiable& e) {
        err << "error: " << e.what() << '\n';
        return kBadArguments;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kNumericFailure;
    }
}

}  // namespace memmac::cli
