#include "gwmax/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gwmax/batch.hpp"
#include "gwmax/error.hpp"
#include "gwmax/numeric.hpp"

namespace gwmax {

namespace {

// Reads i.i.d. out-degrees in breadth-first order until no child is left
// pending. Tracks the maximal out-degree on the way.
template <class DrawDegree>
FiniteTree grow(DrawDegree&& draw_degree, std::uint64_t budget, std::uint64_t* max_degree = nullptr)
{
    std::vector<std::uint32_t> degrees;
    std::uint64_t pending = 1;
    std::uint64_t top = 0;
    while (pending > 0) {
        const std::uint64_t d = draw_degree();
        if (d > budget || degrees.size() + pending + d > budget) {
            throw BudgetExceeded("vertex budget of " + std::to_string(budget) + " exceeded while growing a tree");
        }
        degrees.push_back(static_cast<std::uint32_t>(d));
        pending = pending - 1 + d;
        top = std::max(top, d);
    }
    if (max_degree) *max_degree = top;
    return FiniteTree::from_bfs_degrees(std::move(degrees));
}

void require_finite_trees(const OffspringLaw& law)
{
    if (law.classify() == Criticality::supercritical) {
        throw InvalidInput("super-critical offspring law: GW trees are infinite with positive probability");
    }
}

}  // namespace

GwSampler::GwSampler(OffspringLaw law) : law_(std::move(law)), inverse_(make_offspring_sampler(law_))
{
    require_finite_trees(law_);
}

std::uint64_t GwSampler::draw_degree(Rng& rng) const { return inverse_(rng.uniform()); }

FiniteTree GwSampler::operator()(Rng& rng, std::uint64_t budget) const
{
    return grow([&] { return draw_degree(rng); }, budget);
}

ConditionedLaw::ConditionedLaw(const OffspringLaw& law, std::uint64_t n, double tail_n) : n_(n)
{
    const double log_h = std::log1p(-tail_n);
    pmf_.resize(n + 1);
    CompensatedSum total;
    CompensatedSum mean;
    for (std::uint64_t m = 0; m <= n; ++m) {
        pmf_[m] = law.pmf(m) * std::exp((static_cast<double>(m) - 1.0) * log_h);
        total += pmf_[m];
        mean += static_cast<double>(m) * pmf_[m];
    }
    total_ = total.value();
    mean_ = mean.value();
    suffix_.assign(n + 1, 0.0);
    CompensatedSum tail;
    for (std::uint64_t m = n; m-- > 0;) {
        tail += pmf_[m + 1];
        suffix_[m] = tail.value();
    }
    auto pmf = pmf_;
    auto suffix = suffix_;
    inverse_.emplace([pmf](std::uint64_t m) { return m < pmf.size() ? pmf[m] : 0.0; },
                     [suffix](std::int64_t k) {
                         if (k < 0) return 1.0;
                         const auto idx = static_cast<std::size_t>(k);
                         return idx < suffix.size() ? suffix[idx] : 0.0;
                     },
                     total_, n, n + 1);
}

std::uint64_t ConditionedLaw::draw_degree(Rng& rng) const { return (*inverse_)(rng.uniform()); }

ConditionedSampler::ConditionedSampler(std::shared_ptr<const MaxDegTable> table) : table_(std::move(table))
{
    require_finite_trees(table_->law());
}

double ConditionedSampler::tail_at(std::uint64_t n) const
{
    if (n <= table_->n_max()) return table_->tail(n);
    std::lock_guard lock(mutex_);
    auto it = extra_tail_.find(n);
    if (it == extra_tail_.end()) it = extra_tail_.emplace(n, solve_H(table_->law(), n).tail).first;
    return it->second;
}

std::shared_ptr<const ConditionedLaw> ConditionedSampler::conditioned_law(std::uint64_t n) const
{
    const double tail_n = tail_at(n);
    std::lock_guard lock(mutex_);
    auto& slot = cache_[n];
    if (!slot) slot = std::make_shared<const ConditionedLaw>(table_->law(), n, tail_n);
    return slot;
}

void ConditionedSampler::require_eq_event(std::uint64_t n) const
{
    if (!(table_->law().pmf(n) > 0.0)) {
        throw InvalidInput("p_" + std::to_string(n) + " = 0, so {M = " + std::to_string(n) +
                           "} is a null event (q_n > 0 if and only if p_n > 0)");
    }
}

void ConditionedSampler::require_gt_event(std::uint64_t n) const
{
    if (!(table_->law().tail(static_cast<std::int64_t>(n)) > 0.0)) {
        throw InvalidInput("bounded offspring law: conditioning on large maximal out-degree is a null event (F(" +
                           std::to_string(n) + ") = 1)");
    }
}

FiniteTree ConditionedSampler::sample_le(std::uint64_t n, Rng& rng, std::uint64_t budget) const
{
    const auto law = conditioned_law(n);
    return grow([&] { return law->draw_degree(rng); }, budget);
}

ConditionedDraw ConditionedSampler::sample_eq(std::uint64_t n, Rng& rng, std::uint64_t budget,
                                              std::uint64_t max_trials) const
{
    require_eq_event(n);
    const auto law = conditioned_law(n);
    for (std::uint64_t trial = 1; trial <= max_trials; ++trial) {
        std::uint64_t top = 0;
        FiniteTree t = grow([&] { return law->draw_degree(rng); }, budget, &top);
        if (top == n) return ConditionedDraw{std::move(t), trial};
    }
    throw BudgetExceeded("trial limit of " + std::to_string(max_trials) + " reached while conditioning on M = " +
                         std::to_string(n) + " (expected trials " + format_double(expected_trials(n)) + ")");
}

double ConditionedSampler::expected_trials(std::uint64_t n) const
{
    if (n == 0) return 1.0;
    const double q = tail_at(n - 1) - tail_at(n);
    return (1.0 - tail_at(n)) / q;
}

std::uint64_t ConditionedSampler::draw_max_degree_above(std::uint64_t n, double u) const
{
    const double target = (1.0 - u) * tail_at(n);
    constexpr std::uint64_t max_scan = 10'000'000;
    for (std::uint64_t k = n + 1; k <= n + max_scan; ++k) {
        if (tail_at(k) <= target) return k;
    }
    throw BudgetExceeded("maximal out-degree draw above " + std::to_string(n) + " did not settle");
}

ConditionedDraw ConditionedSampler::sample_gt(std::uint64_t n, Rng& rng, std::uint64_t budget,
                                              std::uint64_t max_trials) const
{
    require_gt_event(n);
    const std::uint64_t k = draw_max_degree_above(n, rng.uniform());
    return sample_eq(k, rng, budget, max_trials);
}

LimitTreeSampler::LimitTreeSampler(OffspringLaw law) : normal_(law), biased_(law) {}

LimitSample LimitTreeSampler::operator()(Rng& rng, const SampleConfig& cfg) const
{
    struct Pending {
        std::size_t depth;
        bool special;
    };
    std::vector<Pending> nodes{{0, true}};
    std::vector<std::uint32_t> degrees;
    std::vector<Mark> marks;
    std::vector<std::uint64_t> full;
    std::vector<bool> special;
    auto add_children = [&](std::size_t count, std::size_t depth, std::optional<std::size_t> special_child) {
        if (nodes.size() + count > cfg.vertex_budget) {
            throw BudgetExceeded("vertex budget of " + std::to_string(cfg.vertex_budget) +
                                 " exceeded while growing a limit tree");
        }
        for (std::size_t i = 0; i < count; ++i) nodes.push_back({depth + 1, special_child && *special_child == i});
    };

    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const Pending node = nodes[i];
        special.push_back(node.special);
        if (node.special) {
            if (node.depth >= cfg.depth) {
                degrees.push_back(0);
                marks.push_back(Mark::frontier);
                full.push_back(PartialTree::unknown_degree);
                continue;
            }
            const std::uint64_t d = biased_.sample(rng.uniform());
            if (d == infinite_degree) {
                degrees.push_back(static_cast<std::uint32_t>(cfg.width));
                marks.push_back(Mark::infinite);
                full.push_back(infinite_degree);
                add_children(cfg.width, node.depth, std::nullopt);
            } else {
                degrees.push_back(static_cast<std::uint32_t>(d));
                marks.push_back(Mark::materialized);
                full.push_back(d);
                add_children(d, node.depth, rng.below(d));
            }
            continue;
        }
        const std::uint64_t d = normal_.draw_degree(rng);
        if (node.depth >= cfg.depth && d > 0) {
            degrees.push_back(0);
            marks.push_back(Mark::frontier);
            full.push_back(d);
            continue;
        }
        degrees.push_back(static_cast<std::uint32_t>(d));
        marks.push_back(Mark::materialized);
        full.push_back(d);
        add_children(d, node.depth, std::nullopt);
    }

    LimitSample out{PartialTree(FiniteTree::from_bfs_degrees(std::move(degrees)), std::move(marks), std::move(full),
                                std::move(special)),
                    {},
                    std::nullopt};
    out.spine = out.tree.spine();
    out.infinite_vertex = out.tree.infinite_vertex();
    return out;
}

FiniteTree sample_gw(const OffspringLaw& law, const SampleConfig& cfg)
{
    Rng rng = cfg.rng();
    return GwSampler(law)(rng, cfg.vertex_budget);
}

namespace {

std::shared_ptr<const MaxDegTable> table_for(const OffspringLaw& law, std::uint64_t n)
{
    return std::make_shared<const MaxDegTable>(law, n + 1);
}

}  // namespace

FiniteTree sample_conditioned_le(const OffspringLaw& law, std::uint64_t n, const SampleConfig& cfg)
{
    Rng rng = cfg.rng();
    return ConditionedSampler(table_for(law, n)).sample_le(n, rng, cfg.vertex_budget);
}

ConditionedDraw sample_conditioned_eq(const OffspringLaw& law, std::uint64_t n, const SampleConfig& cfg)
{
    Rng rng = cfg.rng();
    return ConditionedSampler(table_for(law, n)).sample_eq(n, rng, cfg.vertex_budget, cfg.max_trials);
}

ConditionedDraw sample_conditioned_gt(const OffspringLaw& law, std::uint64_t n, const SampleConfig& cfg)
{
    Rng rng = cfg.rng();
    return ConditionedSampler(table_for(law, n + 32)).sample_gt(n, rng, cfg.vertex_budget, cfg.max_trials);
}

LimitSample sample_limit_tree(const OffspringLaw& law, const SampleConfig& cfg)
{
    Rng rng = cfg.rng();
    return LimitTreeSampler(law)(rng, cfg);
}

namespace {

template <bool Parallel>
BatchSamples batch_impl(const OffspringLaw& law, SampleMode mode, std::uint64_t n, std::size_t count,
                        const SampleConfig& cfg)
{
    auto run = [&]<class T>(auto&& draw) {
        if constexpr (Parallel) {
            return run_batch<T>(count, cfg.seed, cfg.stream, draw);
        } else {
            return run_batch_serial<T>(count, cfg.seed, cfg.stream, draw);
        }
    };
    BatchSamples out;
    switch (mode) {
    case SampleMode::gw: {
        const GwSampler sampler(law);
        out.trees = run.template operator()<FiniteTree>([&](Rng& rng) { return sampler(rng, cfg.vertex_budget); });
        break;
    }
    case SampleMode::le:
    case SampleMode::eq:
    case SampleMode::gt: {
        const ConditionedSampler sampler(table_for(law, mode == SampleMode::gt ? n + 32 : n));
        if (mode == SampleMode::le) {
            out.trees = run.template operator()<FiniteTree>(
                [&](Rng& rng) { return sampler.sample_le(n, rng, cfg.vertex_budget); });
            break;
        }
        if (mode == SampleMode::eq) {
            sampler.require_eq_event(n);
        } else {
            sampler.require_gt_event(n);
        }
        auto draws = run.template operator()<ConditionedDraw>([&](Rng& rng) {
            return mode == SampleMode::eq ? sampler.sample_eq(n, rng, cfg.vertex_budget, cfg.max_trials)
                                          : sampler.sample_gt(n, rng, cfg.vertex_budget, cfg.max_trials);
        });
        out.trees.reserve(draws.size());
        out.trials.reserve(draws.size());
        for (auto& d : draws) {
            out.trees.push_back(std::move(d.tree));
            out.trials.push_back(d.trials);
        }
        break;
    }
    case SampleMode::limit: {
        const LimitTreeSampler sampler(law);
        out.limit_trees = run.template operator()<LimitSample>([&](Rng& rng) { return sampler(rng, cfg); });
        break;
    }
    }
    return out;
}

}  // namespace

BatchSamples sample_batch(const OffspringLaw& law, SampleMode mode, std::uint64_t n, std::size_t count,
                          const SampleConfig& cfg)
{
    return batch_impl<true>(law, mode, n, count, cfg);
}

BatchSamples sample_batch_serial(const OffspringLaw& law, SampleMode mode, std::uint64_t n, std::size_t count,
                                 const SampleConfig& cfg)
{
    return batch_impl<false>(law, mode, n, count, cfg);
}

}  // namespace gwmax
