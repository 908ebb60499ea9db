#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gwmax/cli.hpp"

namespace fs = std::filesystem;

namespace {

const std::string geo = R"({"family":"geometric","a":0.3333333333333333})";
const std::string poi = R"({"family":"poisson","lambda":1})";

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = gwmax::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::size_t count_lines(const std::string& s)
{
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

struct TempDir {
    fs::path path;
    TempDir()
    {
        path = fs::temp_directory_path() / ("gwmax_cli_" + std::to_string(std::rand()) + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("maxdeg writes one row per n")
{
    const auto r = run({"maxdeg", "--law", geo, "--n-max", "50"});
    CHECK(r.code == 0);
    CHECK(count_lines(r.out) == 52);
    CHECK(r.out.starts_with("n,p_n,q_n,ratio,H_n_n,nFbar,residual\n0,"));
}

TEST_CASE("invalid input exits with 2")
{
    CHECK(run({"maxdeg", "--law", R"({"family":"geometric","a":2})"}).code == 2);
    CHECK(run({"maxdeg", "--law", "{not json"}).code == 2);
    CHECK(run({"maxdeg"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"maxdeg", "--law", R"({"family":"explicit","pmf":[0.2,0,0.8]})"}).code == 2);
    const auto bounded = run({"verify", "--regime", "subcritical", "--law", R"({"family":"explicit","pmf":[0.6,0.2,0.2]})"});
    CHECK(bounded.code == 2);
    CHECK(bounded.err.find("bounded offspring law: conditioning on large maximal out-degree is a null event") !=
          std::string::npos);
    const auto null_event =
        run({"sample", "--mode", "eq", "--n", "7", "--law", R"({"family":"explicit","pmf":[0.5,0.2,0.3]})"});
    CHECK(null_event.code == 2);
    CHECK(null_event.err.find("p_7 = 0") != std::string::npos);
    CHECK(run({"sample", "--mode", "sideways", "--law", geo}).code == 2);
    CHECK(run({"verify", "--regime", "lukewarm", "--law", geo}).code == 2);
    CHECK(run({"oracle", "--law", geo, "--event", R"({"kind":"max-eq"})"}).code == 2);
    CHECK(run({"oracle", "--law", geo, "--event", R"({"kind":"leaf-graft","tree":[[]],"site":[]})"}).code == 2);
}

TEST_CASE("the law is validated before any file is touched")
{
    TempDir dir;
    const fs::path target = dir.path / "out.csv";
    CHECK(run({"maxdeg", "--law", R"({"family":"poisson","lambda":-1})", "--out", target.string()}).code == 2);
    CHECK_FALSE(fs::exists(target));
    CHECK(run({"verify", "--regime", "subcritical", "--law", R"({"family":"explicit","pmf":[0.6,0.2,0.2]})", "--out",
               target.string()})
              .code == 2);
    CHECK_FALSE(fs::exists(target));
    CHECK(run({"maxdeg", "--law", geo, "--out", (dir.path / "missing" / "x.csv").string()}).code == 2);
}

TEST_CASE("sample emits one JSON tree per line, reproducibly")
{
    TempDir dir;
    const auto a = dir.path / "a.jsonl";
    const auto b = dir.path / "b.jsonl";
    for (const auto& p : {a, b}) {
        CHECK(run({"sample", "--law", geo, "--mode", "eq", "--n", "3", "--count", "300", "--seed", "9", "--out",
                   p.string()})
                  .code == 0);
    }
    const std::string text = slurp(a);
    CHECK(text == slurp(b));
    CHECK(count_lines(text) == 300);
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) CHECK(nlohmann::json::parse(line).is_array());

    const auto limit = run({"sample", "--law", geo, "--mode", "limit", "--count", "20", "--depth", "5", "--width", "2"});
    CHECK(limit.code == 0);
    CHECK(limit.out.find("\"inf\":true") != std::string::npos);
}

TEST_CASE("the seed defaults to the environment")
{
    ::setenv("GWMAX_SEED", "77", 1);
    const auto from_env = run({"sample", "--law", geo, "--mode", "gw", "--count", "50"});
    ::unsetenv("GWMAX_SEED");
    const auto explicit_seed = run({"sample", "--law", geo, "--mode", "gw", "--count", "50", "--seed", "77"});
    const auto other = run({"sample", "--law", geo, "--mode", "gw", "--count", "50", "--seed", "78"});
    CHECK(from_env.code == 0);
    CHECK(from_env.out == explicit_seed.out);
    CHECK(from_env.out != other.out);
    ::setenv("GWMAX_SEED", "abc", 1);
    CHECK(run({"sample", "--law", geo, "--count", "5"}).code == 2);
    ::unsetenv("GWMAX_SEED");
}

TEST_CASE("oracle writes the event probability")
{
    const auto r = run({"oracle", "--law", geo, "--max-vertices", "8", "--event", R"({"kind":"max-le","n":0})"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("lower_bound").get<double>() == doctest::Approx(2.0 / 3.0));
    CHECK(j.at("mass_gap").get<double>() == doctest::Approx(0.25));
    const auto g = run({"oracle", "--law", geo, "--max-vertices", "6", "--event",
                        R"({"kind":"right-graft-plus","tree":[],"site":[],"k":0})"});
    REQUIRE(g.code == 0);
    CHECK(nlohmann::json::parse(g.out).at("trees_matched") == 1 + 1 + 2 + 5 + 14 + 42);
}

TEST_CASE("verify exit codes and formats")
{
    const auto pass = run({"verify", "--regime", "subcritical", "--law", geo, "--n-min", "10", "--n-max", "60",
                           "--mc-samples", "0"});
    CHECK(pass.code == 0);
    CHECK(pass.out.starts_with("probe_id,n,method,estimate,ci_low,ci_high,limit,gap,verdict\n"));

    const auto fail = run({"verify", "--regime", "subcritical", "--law", geo, "--n-min", "2", "--n-max", "3",
                           "--tolerance", "1e-9", "--probes", R"([{"kind":"right-graft-plus","tree":[[]],"site":[],"k":2}])"});
    CHECK(fail.code == 1);
    CHECK(fail.out.find("FAIL") != std::string::npos);

    const auto json = run({"verify", "--regime", "critical", "--law", poi, "--n-min", "5", "--n-max", "6", "--format",
                           "json", "--probes", R"([{"id":"edge","kind":"leaf-graft","tree":[[]],"site":[1]}])"});
    CHECK(json.code == 0);
    const auto j = nlohmann::json::parse(json.out);
    CHECK(j.at("verdict") == "PASS");
    CHECK(j.at("rows")[0].at("probe_id") == "edge");

    const auto none = run({"verify", "--regime", "critical", "--law", poi, "--probes", "[]", "--n-min", "5", "--n-max", "6"});
    CHECK(none.code == 0);
    CHECK(count_lines(none.out) == 1);

    CHECK(run({"--threads", "1", "maxdeg", "--law", geo, "--n-max", "3"}).code == 0);
}

TEST_CASE("identical arguments give byte-identical verify reports")
{
    TempDir dir;
    std::vector<std::string> outputs;
    for (int i = 0; i < 2; ++i) {
        const auto path = dir.path / ("r" + std::to_string(i) + ".csv");
        CHECK(run({"verify", "--regime", "critical", "--law", poi, "--n-min", "5", "--n-max", "8", "--mc-n", "5",
                   "--mc-samples", "5000", "--seed", "3", "--out", path.string()})
                  .code == 0);
        outputs.push_back(slurp(path));
    }
    CHECK(outputs[0] == outputs[1]);
    CHECK(outputs[0].find("MONTE-CARLO") != std::string::npos);
}
