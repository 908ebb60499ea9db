#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gwmax/offspring.hpp"

namespace gwmax {

/// Ulam-Harris label: 1-based child indices from the root; the root is {}.
using Label = std::vector<std::uint32_t>;

/// Finite ordered rooted tree.
///
/// Stored as the out-degree sequence in breadth-first order; the children of
/// a vertex are contiguous, so the sequence alone determines the tree and two
/// trees are equal iff their sequences are. Vertex 0 is the root.
class FiniteTree {
public:
    /// The single-vertex tree {∅}.
    FiniteTree();

    /// Throws InvalidInput unless the sequence describes exactly one tree.
    static FiniteTree from_bfs_degrees(std::vector<std::uint32_t> degrees);

    /// Builds from arbitrary child lists, relabelling in breadth-first order.
    /// `old_to_new`, if given, receives the new index of every reachable node.
    static FiniteTree from_children(std::span<const std::vector<std::size_t>> children, std::size_t root = 0,
                                    std::vector<std::size_t>* old_to_new = nullptr);

    [[nodiscard]] std::size_t size() const { return degree_.size(); }
    [[nodiscard]] std::uint32_t degree(std::size_t v) const { return degree_[v]; }
    [[nodiscard]] std::size_t first_child(std::size_t v) const { return first_child_[v]; }
    /// `i` is 0-based.
    [[nodiscard]] std::size_t child(std::size_t v, std::uint32_t i) const { return first_child_[v] + i; }
    /// parent(0) == 0.
    [[nodiscard]] std::size_t parent(std::size_t v) const { return parent_[v]; }
    [[nodiscard]] std::span<const std::uint32_t> degrees() const { return degree_; }
    [[nodiscard]] std::size_t depth(std::size_t v) const;
    [[nodiscard]] std::size_t height() const;

    [[nodiscard]] std::optional<std::size_t> find(const Label& label) const;
    [[nodiscard]] Label label(std::size_t v) const;
    [[nodiscard]] bool is_leaf(std::size_t v) const { return degree_[v] == 0; }
    [[nodiscard]] std::vector<std::size_t> leaves() const;
    [[nodiscard]] std::uint32_t max_out_degree() const;

    /// Child lists indexed by vertex.
    [[nodiscard]] std::vector<std::vector<std::size_t>> children_lists() const;

    bool operator==(const FiniteTree& other) const { return degree_ == other.degree_; }
    /// Canonical order: by size, then lexicographic breadth-first degree sequence.
    std::strong_ordering operator<=>(const FiniteTree& other) const;

private:
    struct Trusted {};
    FiniteTree(Trusted, std::vector<std::uint32_t> degrees);

    std::vector<std::uint32_t> degree_;
    std::vector<std::size_t> first_child_;
    std::vector<std::size_t> parent_;
};

struct FiniteTreeHash {
    std::size_t operator()(const FiniteTree& t) const noexcept;
};

/// Vertex status in a truncated view of a possibly infinite tree.
enum class Mark : std::uint8_t {
    materialized,  ///< out-degree known, all children present
    infinite,      ///< infinite out-degree; a finite prefix of children present
    frontier,      ///< not expanded; children (if any) absent
    width_cut,     ///< finite out-degree known, only a prefix of children present
};

/// Depth/width-truncated realization of a tree that may contain one vertex of
/// infinite out-degree. The skeleton holds the materialized part.
class PartialTree {
public:
    PartialTree() = default;
    static PartialTree from_finite(FiniteTree tree);
    /// `full_degree[v]` is the true out-degree (infinite_degree for ∞,
    /// `unknown_degree` when a frontier vertex was never drawn).
    PartialTree(FiniteTree skeleton, std::vector<Mark> marks, std::vector<std::uint64_t> full_degree,
                std::vector<bool> special = {});

    static constexpr std::uint64_t unknown_degree = infinite_degree - 1;

    [[nodiscard]] const FiniteTree& skeleton() const { return skeleton_; }
    [[nodiscard]] std::size_t size() const { return skeleton_.size(); }
    [[nodiscard]] Mark mark(std::size_t v) const { return marks_[v]; }
    [[nodiscard]] std::uint64_t full_degree(std::size_t v) const { return full_degree_[v]; }
    [[nodiscard]] bool is_special(std::size_t v) const { return !special_.empty() && special_[v]; }
    [[nodiscard]] std::optional<std::size_t> infinite_vertex() const;
    [[nodiscard]] std::size_t count_infinite() const;
    [[nodiscard]] bool has_unexpanded() const;
    /// Special vertices from the root down, in order.
    [[nodiscard]] std::vector<std::size_t> spine() const;
    /// Drops all marks: the materialized part as a FiniteTree.
    [[nodiscard]] const FiniteTree& erase_marks() const { return skeleton_; }

    bool operator==(const PartialTree&) const = default;

private:
    FiniteTree skeleton_;
    std::vector<Mark> marks_;
    std::vector<std::uint64_t> full_degree_;
    std::vector<bool> special_;
};

struct MaxOutDegree {
    std::uint64_t value = 0;  ///< infinite_degree when an infinite vertex exists
    bool lower_bound_only = false;
};

[[nodiscard]] std::uint32_t max_out_degree(const FiniteTree& t);
[[nodiscard]] MaxOutDegree max_out_degree(const PartialTree& t);

/// log Π_{u∈t} p(k_u(t)); -inf when a factor vanishes.
[[nodiscard]] double log_weight(const FiniteTree& t, const OffspringLaw& law);
/// Π_{u∈t} p(k_u(t)) = P(τ = t).
[[nodiscard]] double weight(const FiniteTree& t, const OffspringLaw& law);
/// Product of weights: the forest law P_k of the list.
[[nodiscard]] double forest_weight(std::span<const FiniteTree> forest, const OffspringLaw& law);

/// t ⊛ (s, x) with x a leaf of t.
[[nodiscard]] FiniteTree graft_leaf(const FiniteTree& t, const Label& x, const FiniteTree& s);
/// t ⊛ (s, x) on the right of x: the children of s's root follow x's children.
[[nodiscard]] FiniteTree graft_right(const FiniteTree& t, const Label& x, const FiniteTree& s);
[[nodiscard]] PartialTree graft_right(const FiniteTree& t, const Label& x, const PartialTree& s);

enum class GraftKind { leaf_graft, right_graft_plus };

/// Probe identifying T(t, x) (leaf form) or T_+(t, x, k) (right form).
struct GraftEvent {
    FiniteTree base;
    Label site;
    std::uint64_t threshold = 0;
    GraftKind kind = GraftKind::leaf_graft;

    static GraftEvent leaf(FiniteTree base, Label site);
    static GraftEvent right_plus(FiniteTree base, Label site, std::uint64_t k);

    [[nodiscard]] std::size_t site_index() const;
};

[[nodiscard]] bool membership(const GraftEvent& e, const FiniteTree& s);
/// nullopt when the truncation hides the answer.
[[nodiscard]] std::optional<bool> membership(const GraftEvent& e, const PartialTree& s);

struct Decomposition {
    FiniteTree above;                ///< S_u(t), re-rooted at u
    std::vector<FiniteTree> forest;  ///< F_u(t); empty for a leaf
    FiniteTree below;                ///< S^u(t) = {v ∈ t : u ∉ A_v}
};

[[nodiscard]] Decomposition decompose(const FiniteTree& t, const Label& u);

/// Keeps vertices of depth <= h whose label coordinates are all <= w; cut
/// points are marked frontier (depth) or width_cut (width).
[[nodiscard]] PartialTree truncate(const PartialTree& s, std::size_t h, std::size_t w);
[[nodiscard]] PartialTree truncate(const FiniteTree& s, std::size_t h, std::size_t w);

/// Handy constructors for tests and fixtures.
[[nodiscard]] FiniteTree path_tree(std::size_t vertices);
[[nodiscard]] FiniteTree star_tree(std::uint32_t children);

}  // namespace gwmax
