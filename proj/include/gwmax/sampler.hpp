#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "gwmax/maxdeg.hpp"
#include "gwmax/offspring.hpp"
#include "gwmax/rng.hpp"
#include "gwmax/tree.hpp"

namespace gwmax {

struct SampleConfig {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::uint64_t vertex_budget = 1'000'000;
    std::size_t depth = 16;  ///< truncation depth h for limit trees
    std::size_t width = 8;   ///< children materialized at an infinite vertex
    std::uint64_t max_trials = 100'000'000;

    [[nodiscard]] Rng rng() const { return Rng::for_stream(seed, stream); }
};

/// Unconditioned GW(p) trees; rejects super-critical laws.
class GwSampler {
public:
    explicit GwSampler(OffspringLaw law);
    FiniteTree operator()(Rng& rng, std::uint64_t budget) const;
    [[nodiscard]] std::uint64_t draw_degree(Rng& rng) const;
    [[nodiscard]] const OffspringLaw& law() const { return law_; }

private:
    OffspringLaw law_;
    InverseCdf inverse_;
};

/// p̂_m(n) = p_m H(n)^m / H(n) for m <= n: a GW tree with this offspring law
/// has exactly the law of τ given {M(τ) <= n}.
class ConditionedLaw {
public:
    ConditionedLaw(const OffspringLaw& law, std::uint64_t n, double tail_n);

    [[nodiscard]] std::uint64_t n() const { return n_; }
    [[nodiscard]] double pmf(std::uint64_t m) const { return m < pmf_.size() ? pmf_[m] : 0.0; }
    [[nodiscard]] double total() const { return total_; }
    [[nodiscard]] double mean() const { return mean_; }
    [[nodiscard]] std::uint64_t draw_degree(Rng& rng) const;

private:
    std::uint64_t n_;
    std::vector<double> pmf_;
    std::vector<double> suffix_;
    double total_;
    double mean_;
    std::optional<InverseCdf> inverse_;
};

struct ConditionedDraw {
    FiniteTree tree;
    std::uint64_t trials = 1;
};

/// Exact conditioned samplers on {M <= n}, {M = n} and {M > n}. Thread-safe;
/// per-n conditioned laws are cached.
class ConditionedSampler {
public:
    explicit ConditionedSampler(std::shared_ptr<const MaxDegTable> table);

    [[nodiscard]] const MaxDegTable& table() const { return *table_; }

    FiniteTree sample_le(std::uint64_t n, Rng& rng, std::uint64_t budget) const;
    /// Draws from p̂(n) until M = n; acceptance probability q_n / H(n).
    ConditionedDraw sample_eq(std::uint64_t n, Rng& rng, std::uint64_t budget, std::uint64_t max_trials) const;
    /// Draws K from q restricted to {k > n}, then a tree given M = K.
    ConditionedDraw sample_gt(std::uint64_t n, Rng& rng, std::uint64_t budget, std::uint64_t max_trials) const;

    /// H(n) / q_n, the mean number of p̂(n) draws per accepted tree.
    [[nodiscard]] double expected_trials(std::uint64_t n) const;
    /// Smallest k > n with H̄(k) <= (1 - u) H̄(n).
    [[nodiscard]] std::uint64_t draw_max_degree_above(std::uint64_t n, double u) const;
    [[nodiscard]] std::shared_ptr<const ConditionedLaw> conditioned_law(std::uint64_t n) const;

    void require_eq_event(std::uint64_t n) const;
    void require_gt_event(std::uint64_t n) const;

private:
    double tail_at(std::uint64_t n) const;

    std::shared_ptr<const MaxDegTable> table_;
    mutable std::mutex mutex_;
    mutable std::map<std::uint64_t, std::shared_ptr<const ConditionedLaw>> cache_;
    mutable std::map<std::uint64_t, double> extra_tail_;
};

/// Truncated sample of τ*(p): Kesten's tree for critical p, the condensation
/// tree for sub-critical p.
struct LimitSample {
    PartialTree tree;
    std::vector<std::size_t> spine;              ///< special vertices, root first
    std::optional<std::size_t> infinite_vertex;  ///< sub-critical only
};

class LimitTreeSampler {
public:
    explicit LimitTreeSampler(OffspringLaw law);
    LimitSample operator()(Rng& rng, const SampleConfig& cfg) const;
    [[nodiscard]] const BiasedLaw& biased() const { return biased_; }

private:
    GwSampler normal_;
    BiasedLaw biased_;
};

// Single draws driven by cfg.seed / cfg.stream.
FiniteTree sample_gw(const OffspringLaw& law, const SampleConfig& cfg);
FiniteTree sample_conditioned_le(const OffspringLaw& law, std::uint64_t n, const SampleConfig& cfg);
ConditionedDraw sample_conditioned_eq(const OffspringLaw& law, std::uint64_t n, const SampleConfig& cfg);
ConditionedDraw sample_conditioned_gt(const OffspringLaw& law, std::uint64_t n, const SampleConfig& cfg);
LimitSample sample_limit_tree(const OffspringLaw& law, const SampleConfig& cfg);

enum class SampleMode { gw, le, eq, gt, limit };

struct BatchSamples {
    std::vector<FiniteTree> trees;          ///< gw / le / eq / gt
    std::vector<std::uint64_t> trials;      ///< eq / gt
    std::vector<LimitSample> limit_trees;   ///< limit
};

/// `count` draws on stream cfg.stream, parallel over fixed chunks.
BatchSamples sample_batch(const OffspringLaw& law, SampleMode mode, std::uint64_t n, std::size_t count,
                          const SampleConfig& cfg);
BatchSamples sample_batch_serial(const OffspringLaw& law, SampleMode mode, std::uint64_t n, std::size_t count,
                                 const SampleConfig& cfg);

}  // namespace gwmax
