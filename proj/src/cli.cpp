#include "gwmax/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "gwmax/convergence.hpp"
#include "gwmax/error.hpp"
#include "gwmax/io.hpp"
#include "gwmax/maxdeg.hpp"
#include "gwmax/numeric.hpp"
#include "gwmax/oracle.hpp"
#include "gwmax/sampler.hpp"

namespace gwmax::cli {

namespace {

constexpr const char* seed_variable = "GWMAX_SEED";

struct Common {
    std::string law;
    std::string out = "-";
    int threads = 0;
};

struct MaxdegArgs {
    std::uint64_t n_max = 50;
};

struct SampleArgs {
    std::string mode = "gw";
    std::uint64_t n = 0;
    std::size_t count = 1;
    std::uint64_t seed = 0;
    std::size_t depth = 16;
    std::size_t width = 8;
    std::uint64_t budget = 1'000'000;
};

struct OracleArgs {
    std::uint32_t max_vertices = 10;
    std::string event;
};

struct VerifyArgs {
    std::string regime;
    std::string probes;
    std::uint64_t n_min = 10;
    std::uint64_t n_max = 60;
    double tolerance = 1e-3;
    std::uint64_t mc_samples = 200'000;
    std::vector<std::uint64_t> mc_n;
    std::uint64_t seed = 0;
    std::string format;
};

std::uint64_t default_seed()
{
    const char* env = std::getenv(seed_variable);
    if (env == nullptr || *env == '\0') return 0;
    std::uint64_t v = 0;
    const char* end = env + std::char_traits<char>::length(env);
    const auto [ptr, ec] = std::from_chars(env, end, v);
    if (ec != std::errc() || ptr != end) {
        throw InvalidInput(std::string(seed_variable) + " must be a non-negative integer, got '" + env + "'");
    }
    return v;
}

// Output lands in the file only once the whole payload exists.
void deliver(const std::string& payload, const std::string& path, std::ostream& out)
{
    if (path.empty() || path == "-") {
        out << payload;
        out.flush();
        return;
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
    file << payload;
    file.close();
    if (!file) throw std::runtime_error("failed writing '" + path + "'");
}

SampleMode parse_mode(const std::string& m)
{
    if (m == "gw") return SampleMode::gw;
    if (m == "le") return SampleMode::le;
    if (m == "eq") return SampleMode::eq;
    if (m == "gt") return SampleMode::gt;
    if (m == "limit") return SampleMode::limit;
    throw InvalidInput("unknown sample mode '" + m + "' (gw, le, eq, gt, limit)");
}

int run_maxdeg(const Common& c, const MaxdegArgs& a, std::ostream& out)
{
    const OffspringLaw law = parse_law_spec(c.law);
    require_maxdeg_law(law);
    const auto report = theorem_c_report(law, a.n_max);
    std::ostringstream buf;
    write_theorem_c_csv(buf, report);
    deliver(buf.str(), c.out, out);
    return ok;
}

int run_sample(const Common& c, const SampleArgs& a, std::ostream& out)
{
    const OffspringLaw law = parse_law_spec(c.law);
    const SampleMode mode = parse_mode(a.mode);
    SampleConfig cfg;
    cfg.seed = a.seed;
    cfg.depth = a.depth;
    cfg.width = a.width;
    cfg.vertex_budget = a.budget;
    const BatchSamples batch = sample_batch(law, mode, a.n, a.count, cfg);
    std::ostringstream buf;
    if (mode == SampleMode::limit) {
        for (const auto& s : batch.limit_trees) buf << to_json(s.tree) << '\n';
    } else {
        for (const auto& t : batch.trees) buf << to_json(t) << '\n';
    }
    deliver(buf.str(), c.out, out);
    return ok;
}

TreePredicate event_predicate(const nlohmann::json& e)
{
    if (!e.is_object()) throw InvalidInput("--event must be a JSON object");
    const std::string kind = e.value("kind", std::string());
    if (kind == "leaf-graft" || kind == "right-graft-plus") {
        GraftEvent g = graft_event_from_json(e);
        return [g = std::move(g)](const FiniteTree& s) { return membership(g, s); };
    }
    if (kind == "equals") {
        if (!e.contains("tree")) throw InvalidInput("equals event: missing \"tree\"");
        FiniteTree t = finite_tree_from_json(e.at("tree"));
        return [t = std::move(t)](const FiniteTree& s) { return s == t; };
    }
    if (kind == "max-le" || kind == "max-eq") {
        const auto& n = e.value("n", nlohmann::json());
        if (!n.is_number_integer() || n.get<std::int64_t>() < 0) {
            throw InvalidInput(kind + " event: \"n\" must be a non-negative integer");
        }
        const auto bound = n.get<std::uint64_t>();
        if (kind == "max-le") return [bound](const FiniteTree& s) { return s.max_out_degree() <= bound; };
        return [bound](const FiniteTree& s) { return s.max_out_degree() == bound; };
    }
    throw InvalidInput("unknown event kind '" + kind + "' (leaf-graft, right-graft-plus, equals, max-le, max-eq)");
}

int run_oracle(const Common& c, const OracleArgs& a, std::ostream& out)
{
    const OffspringLaw law = parse_law_spec(c.law);
    if (a.max_vertices < 1) throw InvalidInput("--max-vertices must be at least 1");
    const nlohmann::json event = read_json_argument(a.event);
    const TreePredicate pred = event_predicate(event);
    const EventProbability p = exact_event_prob(law, pred, a.max_vertices);
    nlohmann::ordered_json j;
    j["law"] = law.describe();
    j["max_vertices"] = a.max_vertices;
    j["event"] = event;
    j["lower_bound"] = p.lower_bound;
    j["mass_gap"] = p.mass_gap ? nlohmann::ordered_json(*p.mass_gap) : nlohmann::ordered_json(nullptr);
    j["trees_matched"] = p.trees_matched;
    deliver(j.dump(2) + "\n", c.out, out);
    return ok;
}

std::vector<Probe> probes_from_json(const nlohmann::json& j)
{
    if (!j.is_array()) throw InvalidInput("--probes must be a JSON array of graft events");
    std::vector<Probe> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& item = j[i];
        std::string id = "p" + std::to_string(i + 1);
        if (item.is_object() && item.contains("id")) {
            if (!item.at("id").is_string()) throw InvalidInput("probe id must be a string");
            id = item.at("id").get<std::string>();
        }
        nlohmann::json event = item;
        if (event.is_object()) event.erase("id");
        out.push_back({std::move(id), graft_event_from_json(event)});
    }
    return out;
}

int run_verify(const Common& c, const VerifyArgs& a, std::ostream& out, std::ostream& err)
{
    ProbeSuite suite{.law = parse_law_spec(c.law)};
    Regime regime;
    if (a.regime == "critical") {
        regime = Regime::critical;
    } else if (a.regime == "subcritical") {
        regime = Regime::subcritical;
    } else {
        throw InvalidInput("--regime must be critical or subcritical");
    }
    ReportFormat format = ReportFormat::csv;
    const std::string fmt =
        !a.format.empty() ? a.format : (c.out.size() > 5 && c.out.ends_with(".json") ? "json" : "csv");
    if (fmt == "json") {
        format = ReportFormat::json;
    } else if (fmt != "csv") {
        throw InvalidInput("--format must be csv or json");
    }
    suite.probes = a.probes.empty() ? default_probes(regime) : probes_from_json(read_json_argument(a.probes));
    suite.n_min = a.n_min;
    suite.n_max = a.n_max;
    suite.tolerance = a.tolerance;
    suite.mc_samples = a.mc_samples;
    suite.mc_n = a.mc_n;
    suite.seed = a.seed;
    const Report report = regime == Regime::critical ? run_critical_check(suite) : run_subcritical_check(suite);
    std::ostringstream buf;
    emit_report(report, format, buf);
    deliver(buf.str(), c.out, out);
    err << "verify: " << report.verdict << " (" << report.rows.size() << " rows)\n";
    return report.verdict == "FAIL" ? verification_failed : ok;
}

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("--law", c.law, "offspring law: inline JSON or a JSON file")->required();
    sub->add_option("--out", c.out, "output file ('-' for standard output)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Galton-Watson trees conditioned on their maximal out-degree"};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_option("--threads", common.threads, "cap on worker threads (0: OpenMP default)")
        ->check(CLI::NonNegativeNumber);

    MaxdegArgs maxdeg;
    auto* maxdeg_cmd = app.add_subcommand("maxdeg", "H(n), q_n and p_n/q_n as CSV");
    add_common(maxdeg_cmd, common);
    maxdeg_cmd->add_option("--n-max", maxdeg.n_max, "largest n");

    SampleArgs sample;
    auto* sample_cmd = app.add_subcommand("sample", "draw trees, one JSON tree per line");
    add_common(sample_cmd, common);
    sample_cmd->add_option("--mode", sample.mode, "gw, le, eq, gt or limit");
    sample_cmd->add_option("--n", sample.n, "conditioning level");
    sample_cmd->add_option("--count", sample.count, "number of trees");
    sample_cmd->add_option("--seed", sample.seed, "seed (default from GWMAX_SEED)");
    sample_cmd->add_option("--depth", sample.depth, "limit trees: truncation depth");
    sample_cmd->add_option("--width", sample.width, "limit trees: children shown at the infinite vertex");
    sample_cmd->add_option("--budget", sample.budget, "vertex budget per tree");

    OracleArgs oracle;
    auto* oracle_cmd = app.add_subcommand("oracle", "exact event probability by enumeration");
    add_common(oracle_cmd, common);
    oracle_cmd->add_option("--max-vertices", oracle.max_vertices, "enumerate trees up to this size");
    oracle_cmd->add_option("--event", oracle.event, "event JSON (inline or file)")->required();

    VerifyArgs verify;
    auto* verify_cmd = app.add_subcommand("verify", "conditional graft probabilities against the limit tree");
    add_common(verify_cmd, common);
    verify_cmd->add_option("--regime", verify.regime, "critical or subcritical")->required();
    verify_cmd->add_option("--probes", verify.probes, "probe list JSON (default: built-in fixtures)");
    verify_cmd->add_option("--n-min", verify.n_min, "first n");
    verify_cmd->add_option("--n-max", verify.n_max, "last n");
    verify_cmd->add_option("--tolerance", verify.tolerance, "sub-critical gap tolerance at n-max");
    verify_cmd->add_option("--mc-samples", verify.mc_samples, "Monte Carlo trees per point");
    verify_cmd->add_option("--mc-n", verify.mc_n, "Monte Carlo points (repeatable)");
    verify_cmd->add_option("--seed", verify.seed, "seed (default from GWMAX_SEED)");
    verify_cmd->add_option("--format", verify.format, "csv or json (default: from --out extension)");

    try {
        const std::uint64_t seed = default_seed();
        sample.seed = seed;
        verify.seed = seed;
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
        if (common.threads > 0) omp_set_num_threads(common.threads);
        if (maxdeg_cmd->parsed()) return run_maxdeg(common, maxdeg, out);
        if (sample_cmd->parsed()) return run_sample(common, sample, out);
        if (oracle_cmd->parsed()) return run_oracle(common, oracle, out);
        return run_verify(common, verify, out, err);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return invalid_input;
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << '\n';
        return invalid_input;
    } catch (const nlohmann::json::exception& e) {
        err << "error: invalid JSON input: " << e.what() << '\n';
        return invalid_input;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return invalid_input;
    }
}

}  // namespace gwmax::cli
