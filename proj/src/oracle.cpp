#include "gwmax/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gwmax/error.hpp"
#include "gwmax/numeric.hpp"

namespace gwmax {

namespace {

constexpr std::size_t sum_chunk = 1024;

// Breadth-first degree sequences of trees with exactly `size` vertices, in
// lexicographic order. `pending` counts vertices reached but not yet given
// a degree, the current one included.
void extend(std::vector<std::uint32_t>& prefix, std::uint32_t size, std::uint32_t pending, std::uint32_t max_degree,
            const std::function<void(const FiniteTree&)>& visit)
{
    const auto position = static_cast<std::uint32_t>(prefix.size());
    const std::uint32_t after = size - position - 1;  // slots left after this one
    if (after == 0) {
        if (pending == 1) {
            prefix.push_back(0);
            visit(FiniteTree::from_bfs_degrees(prefix));
            prefix.pop_back();
        }
        return;
    }
    // new pending = pending - 1 + d must lie in [1, after]
    const std::uint32_t lo = pending >= 2 ? 0 : 1;
    const std::uint32_t hi = std::min<std::uint64_t>(max_degree, std::uint64_t{after} + 1 - pending);
    if (after + 1 < pending) return;
    for (std::uint32_t d = lo; d <= hi; ++d) {
        prefix.push_back(d);
        extend(prefix, size, pending - 1 + d, max_degree, visit);
        prefix.pop_back();
    }
}

void require_criticality(const OffspringLaw& law, Criticality expected, const char* what)
{
    if (law.classify() != expected) {
        throw InvalidInput(std::string(what) + " requires a " + to_string(expected) + " offspring law, got " +
                           to_string(law.classify()) + " (mean " + format_double(law.mean()) + ")");
    }
}

std::size_t require_vertex(const FiniteTree& t, const Label& x)
{
    const auto v = t.find(x);
    if (!v) throw InvalidInput("site label is not a vertex of the base tree");
    return *v;
}

}  // namespace

void for_each_tree(std::uint32_t max_vertices, std::uint32_t max_degree,
                   const std::function<void(const FiniteTree&)>& visit)
{
    if (max_vertices < 1) throw InvalidInput("enumeration needs at least one vertex");
    std::vector<std::uint32_t> prefix;
    for (std::uint32_t size = 1; size <= max_vertices; ++size) extend(prefix, size, 1, max_degree, visit);
}

TreeEnumeration::TreeEnumeration(std::uint32_t max_vertices, std::uint32_t max_degree)
    : max_vertices_(max_vertices), max_degree_(max_degree)
{
    for_each_tree(max_vertices, max_degree, [this](const FiniteTree& t) { trees_.push_back(t); });
}

std::vector<std::size_t> TreeEnumeration::count_by_size() const
{
    std::vector<std::size_t> counts(max_vertices_ + 1, 0);
    for (const auto& t : trees_) ++counts[t.size()];
    return counts;
}

TreeEnumeration enumerate_trees(std::uint32_t max_vertices, std::uint32_t max_degree)
{
    return TreeEnumeration(max_vertices, max_degree);
}

std::optional<double> markov_mass_gap(const OffspringLaw& law, std::uint32_t max_vertices)
{
    if (law.classify() != Criticality::subcritical) return std::nullopt;
    return std::min(1.0, 1.0 / ((1.0 - law.mean()) * static_cast<double>(max_vertices)));
}

EventProbability exact_event_prob(const OffspringLaw& law, const TreePredicate& pred, std::uint32_t max_vertices)
{
    CompensatedSum total;
    EventProbability out;
    for_each_tree(max_vertices, unlimited_degree, [&](const FiniteTree& t) {
        if (!pred(t)) return;
        total += weight(t, law);
        ++out.trees_matched;
    });
    out.lower_bound = total.value();
    out.mass_gap = markov_mass_gap(law, max_vertices);
    return out;
}

EventProbability exact_event_prob(const OffspringLaw& law, const TreePredicate& pred, const TreeEnumeration& trees)
{
    const auto& all = trees.trees();
    const std::size_t chunks = (all.size() + sum_chunk - 1) / sum_chunk;
    std::vector<CompensatedSum> sums(chunks);
    std::vector<std::size_t> matched(chunks, 0);
    const auto n_chunks = static_cast<std::int64_t>(chunks);
#pragma omp parallel for schedule(static)
    for (std::int64_t ci = 0; ci < n_chunks; ++ci) {
        const auto c = static_cast<std::size_t>(ci);
        const std::size_t end = std::min(all.size(), (c + 1) * sum_chunk);
        for (std::size_t i = c * sum_chunk; i < end; ++i) {
            if (!pred(all[i])) continue;
            sums[c] += weight(all[i], law);
            ++matched[c];
        }
    }
    CompensatedSum total;
    EventProbability out;
    for (std::size_t c = 0; c < chunks; ++c) {
        total += sums[c];
        out.trees_matched += matched[c];
    }
    out.lower_bound = total.value();
    out.mass_gap = markov_mass_gap(law, trees.max_vertices());
    return out;
}

EventProbability exact_event_prob_serial(const OffspringLaw& law, const TreePredicate& pred,
                                         const TreeEnumeration& trees)
{
    CompensatedSum total;
    EventProbability out;
    for (const auto& t : trees) {
        if (!pred(t)) continue;
        total += weight(t, law);
        ++out.trees_matched;
    }
    out.lower_bound = total.value();
    out.mass_gap = markov_mass_gap(law, trees.max_vertices());
    return out;
}

double graft_weight(const OffspringLaw& law, const FiniteTree& t, const Label& x)
{
    require_vertex(t, x);
    const Decomposition parts = decompose(t, x);
    return weight(parts.below, law) / law.p0() * forest_weight(parts.forest, law);
}

double limit_graft_prob(const OffspringLaw& law, const FiniteTree& t, const Label& x)
{
    require_criticality(law, Criticality::critical, "the Kesten-tree graft probability");
    if (!t.is_leaf(require_vertex(t, x))) throw InvalidInput("leaf graft probe: site must be a leaf");
    return weight(t, law) / law.p0();
}

double limit_graft_plus_prob(const OffspringLaw& law, const FiniteTree& t, const Label& x, std::uint64_t k)
{
    require_criticality(law, Criticality::subcritical, "the condensation-tree graft probability");
    const std::uint64_t ell = t.degree(require_vertex(t, x));
    return graft_weight(law, t, x) * ((1.0 - law.mean()) + truncated_excess(law, ell, k));
}

ConditionedProbability exact_conditioned_graft(const OffspringLaw& law, const FiniteTree& t, const Label& x,
                                               std::uint64_t n, const MaxDegTable& table,
                                               std::uint32_t fallback_vertices)
{
    const std::size_t xi = require_vertex(t, x);
    if (!t.is_leaf(xi)) throw InvalidInput("leaf graft probe: site must be a leaf");
    if (!(law.pmf(n) > 0.0)) {
        throw InvalidInput("p_" + std::to_string(n) + " = 0: conditioning on M = n is a null event");
    }
    const double q_n = table.q(n);
    ConditionedProbability out;
    if (n > t.max_out_degree()) {
        // every tree in T(t,x) is t ⊛ (s,x) with weight P(τ=t) P(τ=s) / p_0,
        // and M = n iff M(s) = n
        out.value = weight(t, law) / law.p0();
        out.joint = out.value * q_n;
        return out;
    }
    const GraftEvent event = GraftEvent::leaf(t, x);
    const EventProbability joint = exact_event_prob(
        law, [&](const FiniteTree& s) { return s.max_out_degree() == n && membership(event, s); }, fallback_vertices);
    out.exact = false;
    out.joint = joint.lower_bound;
    out.value = joint.lower_bound / q_n;
    if (joint.mass_gap) out.mass_gap = *joint.mass_gap / q_n;
    return out;
}

ConditionedProbability exact_conditioned_graft_plus(const OffspringLaw& law, const FiniteTree& t, const Label& x,
                                                    std::uint64_t k, std::uint64_t n, const MaxDegTable& table)
{
    require_criticality(law, Criticality::subcritical, "the T_+ conditional graft formula");
    const std::size_t xi = require_vertex(t, x);
    if (n <= t.max_out_degree()) {
        throw InvalidInput("T_+ graft formula needs n > M(t) (n = " + std::to_string(n) + ", M(t) = " +
                           std::to_string(t.max_out_degree()) + ")");
    }
    if (!(law.pmf(n) > 0.0)) {
        throw InvalidInput("p_" + std::to_string(n) + " = 0: conditioning on M = n is a null event");
    }
    const std::uint64_t ell = t.degree(xi);
    CompensatedSum bracket;
    // k_x = n: the attached forest of n - ℓ trees has M <= n
    if (n >= k) bracket += law.pmf(n) * table.forest_cdf(n - ell, n);
    // k_x = j < n: the attached forest of j - ℓ trees has M = n exactly
    for (std::uint64_t j = std::max(ell + 1, k); j < n; ++j) {
        const double p_j = law.pmf(j);
        if (p_j == 0.0) continue;
        bracket += p_j * table.forest_q(j - ell, n);
    }
    ConditionedProbability out;
    out.joint = graft_weight(law, t, x) * bracket.value();
    out.value = out.joint / table.q(n);
    return out;
}

double ExactLaw::listed_mass() const
{
    // sum in canonical order so the result does not depend on hashing
    std::vector<std::pair<const FiniteTree*, double>> entries;
    entries.reserve(mass.size());
    for (const auto& [t, m] : mass) entries.emplace_back(&t, m);
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return *a.first < *b.first; });
    CompensatedSum s;
    for (const auto& e : entries) s += e.second;
    return s.value();
}

double ExactLaw::lump_mass() const { return std::max(0.0, 1.0 - listed_mass()); }

ExactLaw exact_law(const OffspringLaw& law, std::uint32_t max_vertices, const TreePredicate& pred, double normalizer)
{
    ExactLaw out;
    out.max_vertices = max_vertices;
    for_each_tree(max_vertices, unlimited_degree, [&](const FiniteTree& t) {
        if (!pred(t)) return;
        const double w = weight(t, law);
        if (w > 0.0) out.mass.emplace(t, w / normalizer);
    });
    return out;
}

double empirical_tv(std::span<const FiniteTree> samples, const ExactLaw& exact)
{
    const double lump_exact = exact.lump_mass();
    if (samples.empty()) {
        // empirical measure = point mass on the lump
        return 0.5 * (exact.listed_mass() + std::fabs(1.0 - lump_exact));
    }
    std::unordered_map<FiniteTree, std::size_t, FiniteTreeHash> counts;
    std::size_t lumped = 0;
    for (const auto& s : samples) {
        if (s.size() > exact.max_vertices) {
            ++lumped;
        } else {
            ++counts[s];
        }
    }
    const double total = static_cast<double>(samples.size());
    std::vector<std::pair<const FiniteTree*, double>> diffs;
    for (const auto& [t, m] : exact.mass) {
        const auto it = counts.find(t);
        const double emp = it == counts.end() ? 0.0 : static_cast<double>(it->second) / total;
        diffs.emplace_back(&t, std::fabs(emp - m));
    }
    for (const auto& [t, c] : counts) {
        if (!exact.mass.contains(t)) diffs.emplace_back(&t, static_cast<double>(c) / total);
    }
    std::sort(diffs.begin(), diffs.end(), [](const auto& a, const auto& b) { return *a.first < *b.first; });
    CompensatedSum s;
    for (const auto& d : diffs) s += d.second;
    s += std::fabs(static_cast<double>(lumped) / total - lump_exact);
    return 0.5 * s.value();
}

}  // namespace gwmax
