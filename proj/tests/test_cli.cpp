#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    Result r;
    r.code = memmac::cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("memmac_test_" + name);
}

}  // namespace

TEST_CASE("analyze") {
    auto r = invoke({"analyze", "--n", "10", "--theta", "0.1", "--q", "0.1051", "--r", "0.4786"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("0.8040") != std::string::npos);
    CHECK(r.out.find("1.5298") != std::string::npos);

    auto j = invoke({"analyze", "--n", "10", "--theta", "0.1", "--q", "0.105", "--r", "0.479", "--enhanced",
                     "--format", "json"});
    REQUIRE(j.code == 0);
    auto doc = nlohmann::json::parse(j.out);
    CHECK(std::abs(doc["metrics"]["d_crit_enhanced"].get<double>() - 0.93) <= 0.005);

    auto one = invoke({"analyze", "--n", "10", "--theta", "1.0", "--q", "0.105", "--r", "0.479", "--format", "json"});
    auto m = nlohmann::json::parse(one.out)["metrics"];
    CHECK(m["t_s"] == 1.0);
    CHECK(m["f_norm"] == 1.0);
}

TEST_CASE("optimize") {
    auto r = invoke({"optimize", "--n", "10", "--theta", "0.1", "--format", "json"});
    REQUIRE(r.code == 0);
    auto s = nlohmann::json::parse(r.out)["solution"];
    CHECK(std::abs(s["q"].get<double>() - 0.105) <= 0.005);
    CHECK(std::abs(s["r"].get<double>() - 0.479) <= 0.005);
    CHECK(std::abs(s["c_norm"].get<double>() - 0.804) <= 0.002);
    CHECK(s["status"] == "slack-interior");

    auto b = invoke({"optimize", "--n", "10", "--theta", "0.1", "--eta", "1", "--format", "json"});
    REQUIRE(b.code == 0);
    auto bs = nlohmann::json::parse(b.out)["solution"];
    CHECK(bs["status"] == "binding-interior");
    CHECK(std::abs(bs["d_crit"].get<double>() - 1.0) <= 0.005);

    auto c = invoke({"optimize", "--n", "10", "--theta", "0.1", "--eta", "0.5", "--format", "json"});
    REQUIRE(c.code == 0);
    auto cs = nlohmann::json::parse(c.out)["solution"];
    CHECK(cs["status"] == "binding-corner");
    CHECK(cs["r"].get<double>() == doctest::Approx(0.01));

    auto inf = invoke({"optimize", "--n", "10", "--theta", "0.1", "--eta", "0.3", "--format", "json"});
    CHECK(inf.code == memmac::cli::kInfeasible);
    CHECK(nlohmann::json::parse(inf.out)["solution"]["status"] == "infeasible");
}

TEST_CASE("simulate") {
    auto r = invoke({"simulate", "--n", "3", "--theta", "0.1", "--rounds", "200", "--seed", "42"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("AP (analysis)") != std::string::npos);
    CHECK(r.out.find("AP (simulation)") != std::string::npos);

    auto e = invoke({"simulate", "--n", "10", "--theta", "0.1", "--rounds", "300", "--enhanced", "--b", "5",
                     "--format", "json"});
    REQUIRE(e.code == 0);
    CHECK(nlohmann::json::parse(e.out)["simulation"]["max_d_crit"].get<int>() <= 5);

    auto two = invoke({"simulate", "--n", "10", "--theta", "0.1", "--rounds", "50", "--enhanced", "--scenario",
                       "two-critical-simultaneous", "--format", "json"});
    REQUIRE(two.code == 0);
    auto t = nlohmann::json::parse(two.out)["two_critical"];
    CHECK(t["max_slots_to_inference"] == 6);
    CHECK(t["sharing_violations"] == 0);

    auto bad = invoke({"simulate", "--n", "10", "--theta", "0.1", "--scenario", "two-critical-simultaneous"});
    CHECK(bad.code == memmac::cli::kBadArguments);
}

TEST_CASE("trace output") {
    const auto path = temp_file("trace.ndjson");
    auto r = invoke({"simulate", "--n", "3", "--theta", "0.1", "--rounds", "2", "--trace", path.string()});
    REQUIRE(r.code == 0);
    std::ifstream in(path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        CHECK(nlohmann::json::accept(line));
        ++lines;
    }
    CHECK(lines > 200);
    std::filesystem::remove(path);
}

TEST_CASE("sweep csv") {
    auto r = invoke({"sweep", "--axis", "n", "--theta", "0.1", "--from", "3", "--to", "50", "--step", "47"});
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    std::string header, first, last;
    std::getline(in, header);
    std::getline(in, first);
    std::getline(in, last);
    CHECK(header == "axis,n,n_hat,theta,eta,q,r,t_c,c_norm,d_crit,eta_star,status,constraint_violated,error");
    CHECK(first.rfind("n,3,3,", 0) == 0);
    CHECK(last.rfind("n,50,50,", 0) == 0);

    auto nhat = invoke({"sweep", "--axis", "nhat", "--n", "10", "--theta", "0.1", "--from", "5", "--to", "15",
                        "--eta", "1", "--format", "json"});
    REQUIRE(nhat.code == 0);
    for (const auto& row : nlohmann::json::parse(nhat.out)["rows"])
        CHECK(row["constraint_violated"].get<bool>() == (row["n_hat"].get<int>() < 10));
}

TEST_CASE("bad arguments") {
    CHECK(invoke({}).code == memmac::cli::kBadArguments);
    CHECK(invoke({"analyze", "--n", "10"}).code == memmac::cli::kBadArguments);
    CHECK(invoke({"analyze", "--n", "1", "--theta", "0.1", "--q", "0.1", "--r", "0.5"}).code ==
          memmac::cli::kBadArguments);
    CHECK(invoke({"analyze", "--n", "10", "--theta", "0.1", "--q", "0.1", "--r", "0.5", "--format", "xml"}).code ==
          memmac::cli::kBadArguments);
    CHECK(invoke({"sweep", "--axis", "diagonal"}).code == memmac::cli::kBadArguments);
    CHECK(invoke({"frobnicate"}).code == memmac::cli::kBadArguments);
}

TEST_CASE("numeric failure") {
    auto r = invoke({"analyze", "--n", "10", "--theta", "0.1", "--q", "0", "--r", "0.5"});
    CHECK(r.code == memmac::cli::kNumericFailure);
    CHECK_FALSE(r.err.empty());
}

TEST_CASE("config file, flags override it") {
    const auto path = temp_file("cfg.txt");
    {
        std::ofstream f(path);
        f << "# design\nn = 10\ntheta=0.5\nq=0.1051\nr=0.4786\n";
    }
    auto a = invoke({"analyze", "--config", path.string(), "--format", "json"});
    REQUIRE(a.code == 0);
    CHECK(nlohmann::json::parse(a.out)["params"]["theta"] == 0.5);
    auto b = invoke({"analyze", "--config", path.string(), "--theta", "0.1", "--format", "json"});
    REQUIRE(b.code == 0);
    CHECK(nlohmann::json::parse(b.out)["params"]["theta"] == 0.1);
    std::filesystem::remove(path);
    CHECK(invoke({"analyze", "--config", path.string()}).code == memmac::cli::kBadArguments);
}

TEST_CASE("output file") {
    const auto path = temp_file("out.csv");
    auto r = invoke({"analyze", "--n", "3", "--theta", "0.2", "--q", "0.3397", "--r", "0.4896", "--format", "csv",
                     "--output", path.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("n,theta,q,r,", 0) == 0);
    std::filesystem::remove(path);
}

TEST_CASE("repeated runs are byte-identical") {
    const std::vector<std::vector<std::string>> cases = {
        {"simulate", "--n", "10", "--theta", "0.1", "--rounds", "200", "--seed", "7", "--format", "csv"},
        {"simulate", "--n", "10", "--theta", "0.1", "--rounds", "200", "--seed", "7", "--format", "json",
         "--threads", "3"},
        {"sweep", "--axis", "theta", "--n", "3", "--from", "0.1", "--to", "0.5", "--step", "0.2"},
        {"optimize", "--n", "3", "--theta", "0.2", "--eta", "1", "--format", "json"},
    };
    for (const auto& args : cases) {
        auto a = invoke(args);
        auto b = invoke(args);
        REQUIRE(a.code == 0);
        CHECK(a.out == b.out);
    }
    auto one = invoke({"simulate", "--n", "10", "--theta", "0.1", "--rounds", "200", "--seed", "7", "--format",
                       "json", "--threads", "1"});
    auto many = invoke({"simulate", "--n", "10", "--theta", "0.1", "--rounds", "200", "--seed", "7", "--format",
                        "json", "--threads", "3"});
    CHECK(one.out == many.out);
}
