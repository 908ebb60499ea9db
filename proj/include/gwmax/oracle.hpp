#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "gwmax/maxdeg.hpp"
#include "gwmax/offspring.hpp"
#include "gwmax/tree.hpp"

namespace gwmax {

inline constexpr std::uint32_t unlimited_degree = std::numeric_limits<std::uint32_t>::max();

/// Calls `visit` on every ordered rooted tree with at most `max_vertices`
/// vertices and all out-degrees <= `max_degree`, each exactly once, in the
/// canonical order (size, then lexicographic breadth-first degree sequence).
void for_each_tree(std::uint32_t max_vertices, std::uint32_t max_degree,
                   const std::function<void(const FiniteTree&)>& visit);

class TreeEnumeration {
public:
    TreeEnumeration(std::uint32_t max_vertices, std::uint32_t max_degree);

    [[nodiscard]] const std::vector<FiniteTree>& trees() const { return trees_; }
    [[nodiscard]] std::size_t size() const { return trees_.size(); }
    [[nodiscard]] auto begin() const { return trees_.begin(); }
    [[nodiscard]] auto end() const { return trees_.end(); }
    [[nodiscard]] std::uint32_t max_vertices() const { return max_vertices_; }
    [[nodiscard]] std::uint32_t max_degree() const { return max_degree_; }
    /// counts[k] = number of enumerated trees with k vertices.
    [[nodiscard]] std::vector<std::size_t> count_by_size() const;

private:
    std::uint32_t max_vertices_;
    std::uint32_t max_degree_;
    std::vector<FiniteTree> trees_;
};

TreeEnumeration enumerate_trees(std::uint32_t max_vertices, std::uint32_t max_degree = unlimited_degree);

using TreePredicate = std::function<bool(const FiniteTree&)>;

struct EventProbability {
    double lower_bound = 0.0;
    /// Bound on P(|τ| > V); nullopt when no bound is available (critical law).
    std::optional<double> mass_gap;
    std::size_t trees_matched = 0;
};

/// Markov bound P(|τ| > V) <= E|τ| / V = 1 / ((1 - μ_p) V); nullopt unless sub-critical.
std::optional<double> markov_mass_gap(const OffspringLaw& law, std::uint32_t max_vertices);

/// Σ P(τ = t) over trees with at most `max_vertices` vertices and pred(t),
/// streamed in canonical order without storing the trees.
EventProbability exact_event_prob(const OffspringLaw& law, const TreePredicate& pred, std::uint32_t max_vertices);
/// Same sum over a stored enumeration, parallel over fixed chunks merged in
/// order, so the result is reproducible.
EventProbability exact_event_prob(const OffspringLaw& law, const TreePredicate& pred, const TreeEnumeration& trees);
/// Straight sequential sum; reference for the parallel version.
EventProbability exact_event_prob_serial(const OffspringLaw& law, const TreePredicate& pred,
                                         const TreeEnumeration& trees);

/// D(t, x) = P(τ = S^x(t)) / p_0 · P_{k_x(t)}(τ = F_x(t)).
double graft_weight(const OffspringLaw& law, const FiniteTree& t, const Label& x);

/// P(τ*(p) ∈ T(t, x)) = P(τ = t) / p_0 for critical p and a leaf x.
double limit_graft_prob(const OffspringLaw& law, const FiniteTree& t, const Label& x);

/// P(τ*(p) ∈ T_+(t, x, k)) = D(t, x) (1 - μ_p + E[(X - k_x(t))_+ 1{X >= k}])
/// for sub-critical p.
double limit_graft_plus_prob(const OffspringLaw& law, const FiniteTree& t, const Label& x, std::uint64_t k);

struct ConditionedProbability {
    double value = 0.0;  ///< P(event | M = n)
    double joint = 0.0;  ///< P(event, M = n)
    bool exact = true;   ///< false: enumeration lower bound
    std::optional<double> mass_gap;  ///< bound on value - lower bound (enumeration only)
};

/// P(τ ∈ T(t, x) | M = n). For n > M(t) this is exactly P(τ = t) / p_0 for any
/// n (the q_n factors cancel); otherwise falls back to enumeration up to
/// `fallback_vertices` vertices.
ConditionedProbability exact_conditioned_graft(const OffspringLaw& law, const FiniteTree& t, const Label& x,
                                               std::uint64_t n, const MaxDegTable& table,
                                               std::uint32_t fallback_vertices = 12);

/// P(τ ∈ T_+(t, x, k) | M = n) from the closed forest decomposition
/// D(t,x) (p_n P_{n-ℓ}(M <= n) + Σ_{j=max(ℓ+1,k)}^{n-1} p_j P_{j-ℓ}(M = n)) / q_n.
ConditionedProbability exact_conditioned_graft_plus(const OffspringLaw& law, const FiniteTree& t, const Label& x,
                                                    std::uint64_t k, std::uint64_t n, const MaxDegTable& table);

/// Exact law restricted to trees with at most `max_vertices` vertices; the
/// missing mass is the lump.
struct ExactLaw {
    std::unordered_map<FiniteTree, double, FiniteTreeHash> mass;
    std::uint32_t max_vertices = 0;

    [[nodiscard]] double listed_mass() const;
    [[nodiscard]] double lump_mass() const;
};

/// mass[t] = P(τ = t) / normalizer for enumerated t with pred(t).
ExactLaw exact_law(const OffspringLaw& law, std::uint32_t max_vertices, const TreePredicate& pred,
                   double normalizer);

/// Total variation between the empirical measure of `samples` (trees larger
/// than the exact map's bound are lumped) and `exact`. An empty sample list
/// is read as all mass on the lump.
double empirical_tv(std::span<const FiniteTree> samples, const ExactLaw& exact);

}  // namespace gwmax
