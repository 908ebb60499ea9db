#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gwmax/offspring.hpp"
#include "gwmax/tree.hpp"

namespace gwmax {

enum class Regime { critical, subcritical };
enum class Method { exact, monte_carlo };
enum class Verdict { pass, fail, skip, trace };
enum class ReportFormat { csv, json };

std::string to_string(Regime r);
std::string to_string(Method m);
std::string to_string(Verdict v);

struct Probe {
    std::string id;
    GraftEvent event;
};

/// Probes evaluated along n ∈ [n_min, n_max] ∩ {p_n > 0}.
struct ProbeSuite {
    OffspringLaw law;
    std::vector<Probe> probes{};
    std::uint64_t n_min = 10;
    std::uint64_t n_max = 60;
    double tolerance = 1e-3;
    /// Monte Carlo rows: `mc_samples` conditioned trees at each n in `mc_n`.
    std::uint64_t mc_samples = 0;
    std::vector<std::uint64_t> mc_n{};
    std::uint64_t seed = 0;
    std::uint64_t vertex_budget = 1'000'000;
};

struct ReportRow {
    std::string probe_id;
    std::uint64_t n = 0;
    Method method = Method::exact;
    std::optional<double> estimate;  ///< empty on skipped rows
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    double limit = 0.0;
    std::optional<double> gap;
    Verdict verdict = Verdict::trace;
    std::string note;  ///< JSON only
};

struct Report {
    Regime regime = Regime::critical;
    std::string law;
    std::vector<ReportRow> rows;
    /// "PASS", "FAIL" or "NO PROBES".
    std::string verdict;
};

/// The five fixture trees: singleton, root+1 child, root+2 children, 3-path,
/// root+1 child carrying two grandchildren.
std::vector<FiniteTree> fixture_trees();
/// Leaf-graft probes at every leaf (critical) or T_+ probes at every vertex
/// with k ∈ {0, 2, 5} (sub-critical).
std::vector<Probe> default_probes(Regime regime);

/// Wilson score interval with z standard deviations.
std::pair<double, double> wilson_interval(std::uint64_t hits, std::uint64_t trials, double z = 3.0);

/// Kesten-side check: conditional leaf-graft probabilities against
/// P(τ = t) / p_0, plus P(τ = t | M = n) = 0 for n > M(t).
Report run_critical_check(const ProbeSuite& suite);
/// Condensation-side check: conditional T_+ probabilities against the
/// condensation-tree value; the gap must fall below tolerance at n_max and
/// shrink from n_min.
Report run_subcritical_check(const ProbeSuite& suite);

/// Columns: probe_id,n,method,estimate,ci_low,ci_high,limit,gap,verdict.
void emit_report(const Report& report, ReportFormat format, std::ostream& out);

}  // namespace gwmax
