#include "gwmax/tree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <utility>

#include "gwmax/error.hpp"
#include "gwmax/numeric.hpp"

namespace gwmax {

namespace {

using ChildLists = std::vector<std::vector<std::size_t>>;

std::size_t require_vertex(const FiniteTree& t, const Label& x, const char* what)
{
    const auto v = t.find(x);
    if (!v) throw InvalidInput(std::string(what) + ": label is not a vertex of the tree");
    return *v;
}

// Appends the non-root vertices of `s` below `x`, after x's existing children.
ChildLists graft_lists(const FiniteTree& t, std::size_t x, const FiniteTree& s, std::size_t& offset)
{
    ChildLists lists = t.children_lists();
    offset = lists.size();
    ChildLists s_lists = s.children_lists();
    for (auto& kids : s_lists) {
        for (auto& c : kids) c += offset;
        lists.push_back(std::move(kids));
    }
    for (std::size_t c : lists[offset]) lists[x].push_back(c);
    lists[offset].clear();
    return lists;
}

}  // namespace

FiniteTree::FiniteTree() : FiniteTree(Trusted{}, {0}) {}

FiniteTree::FiniteTree(Trusted, std::vector<std::uint32_t> degrees) : degree_(std::move(degrees))
{
    const std::size_t n = degree_.size();
    first_child_.resize(n);
    parent_.resize(n);
    parent_[0] = 0;
    std::size_t next = 1;
    for (std::size_t v = 0; v < n; ++v) {
        first_child_[v] = next;
        for (std::uint32_t i = 0; i < degree_[v]; ++i) parent_[next + i] = v;
        next += degree_[v];
    }
}

FiniteTree FiniteTree::from_bfs_degrees(std::vector<std::uint32_t> degrees)
{
    if (degrees.empty()) throw InvalidInput("a tree has at least one vertex");
    std::size_t pending = 1;
    for (std::size_t i = 0; i < degrees.size(); ++i) {
        if (pending == 0) throw InvalidInput("degree sequence describes a tree shorter than the sequence");
        pending = pending - 1 + degrees[i];
    }
    if (pending != 0) throw InvalidInput("degree sequence leaves unmaterialized children");
    return FiniteTree(Trusted{}, std::move(degrees));
}

FiniteTree FiniteTree::from_children(std::span<const std::vector<std::size_t>> children, std::size_t root,
                                     std::vector<std::size_t>* old_to_new)
{
    std::vector<std::uint32_t> degrees;
    if (old_to_new) old_to_new->assign(children.size(), std::numeric_limits<std::size_t>::max());
    std::deque<std::size_t> queue{root};
    while (!queue.empty()) {
        const std::size_t v = queue.front();
        queue.pop_front();
        if (old_to_new) (*old_to_new)[v] = degrees.size();
        degrees.push_back(static_cast<std::uint32_t>(children[v].size()));
        for (std::size_t c : children[v]) queue.push_back(c);
    }
    return FiniteTree(Trusted{}, std::move(degrees));
}

std::size_t FiniteTree::depth(std::size_t v) const
{
    std::size_t d = 0;
    while (v != 0) {
        v = parent_[v];
        ++d;
    }
    return d;
}

std::size_t FiniteTree::height() const
{
    std::vector<std::size_t> depth(size(), 0);
    std::size_t best = 0;
    for (std::size_t v = 1; v < size(); ++v) {
        depth[v] = depth[parent_[v]] + 1;
        best = std::max(best, depth[v]);
    }
    return best;
}

std::optional<std::size_t> FiniteTree::find(const Label& label) const
{
    std::size_t v = 0;
    for (std::uint32_t i : label) {
        if (i < 1 || i > degree_[v]) return std::nullopt;
        v = child(v, i - 1);
    }
    return v;
}

Label FiniteTree::label(std::size_t v) const
{
    Label out;
    while (v != 0) {
        const std::size_t p = parent_[v];
        out.push_back(static_cast<std::uint32_t>(v - first_child_[p] + 1));
        v = p;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> FiniteTree::leaves() const
{
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < size(); ++v) {
        if (degree_[v] == 0) out.push_back(v);
    }
    return out;
}

std::uint32_t FiniteTree::max_out_degree() const { return *std::max_element(degree_.begin(), degree_.end()); }

std::vector<std::vector<std::size_t>> FiniteTree::children_lists() const
{
    ChildLists lists(size());
    for (std::size_t v = 0; v < size(); ++v) {
        lists[v].resize(degree_[v]);
        for (std::uint32_t i = 0; i < degree_[v]; ++i) lists[v][i] = first_child_[v] + i;
    }
    return lists;
}

std::strong_ordering FiniteTree::operator<=>(const FiniteTree& other) const
{
    if (auto c = size() <=> other.size(); c != 0) return c;
    return std::lexicographical_compare_three_way(degree_.begin(), degree_.end(), other.degree_.begin(),
                                                  other.degree_.end());
}

std::size_t FiniteTreeHash::operator()(const FiniteTree& t) const noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint32_t d : t.degrees()) {
        h ^= d + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h);
}

PartialTree PartialTree::from_finite(FiniteTree tree)
{
    const std::size_t n = tree.size();
    std::vector<std::uint64_t> full(n);
    for (std::size_t v = 0; v < n; ++v) full[v] = tree.degree(v);
    return PartialTree(std::move(tree), std::vector<Mark>(n, Mark::materialized), std::move(full));
}

PartialTree::PartialTree(FiniteTree skeleton, std::vector<Mark> marks, std::vector<std::uint64_t> full_degree,
                         std::vector<bool> special)
    : skeleton_(std::move(skeleton)),
      marks_(std::move(marks)),
      full_degree_(std::move(full_degree)),
      special_(std::move(special))
{
    const std::size_t n = skeleton_.size();
    if (marks_.size() != n || full_degree_.size() != n || (!special_.empty() && special_.size() != n)) {
        throw InvalidInput("partial tree annotations do not match the skeleton size");
    }
    std::size_t infinite = 0;
    for (std::size_t v = 0; v < n; ++v) {
        switch (marks_[v]) {
        case Mark::materialized:
            if (full_degree_[v] != skeleton_.degree(v)) {
                throw InvalidInput("materialized vertex must have all its children present");
            }
            break;
        case Mark::infinite:
            ++infinite;
            full_degree_[v] = infinite_degree;
            break;
        case Mark::width_cut:
            if (full_degree_[v] <= skeleton_.degree(v) && full_degree_[v] != infinite_degree) {
                throw InvalidInput("width-cut vertex must have more children than materialized");
            }
            break;
        case Mark::frontier:
            if (skeleton_.degree(v) != 0) throw InvalidInput("frontier vertex must not have materialized children");
            break;
        }
    }
    if (infinite > 1) throw InvalidInput("a partial tree holds at most one infinite vertex");
}

std::optional<std::size_t> PartialTree::infinite_vertex() const
{
    for (std::size_t v = 0; v < marks_.size(); ++v) {
        if (marks_[v] == Mark::infinite) return v;
    }
    return std::nullopt;
}

std::size_t PartialTree::count_infinite() const
{
    return static_cast<std::size_t>(std::count(marks_.begin(), marks_.end(), Mark::infinite));
}

bool PartialTree::has_unexpanded() const
{
    return std::any_of(marks_.begin(), marks_.end(), [](Mark m) { return m != Mark::materialized; });
}

std::vector<std::size_t> PartialTree::spine() const
{
    std::vector<std::size_t> out;
    if (special_.empty() || !special_[0]) return out;
    std::size_t v = 0;
    out.push_back(v);
    for (;;) {
        std::optional<std::size_t> next;
        for (std::uint32_t i = 0; i < skeleton_.degree(v); ++i) {
            const std::size_t c = skeleton_.child(v, i);
            if (special_[c]) next = c;
        }
        if (!next) break;
        v = *next;
        out.push_back(v);
    }
    return out;
}

std::uint32_t max_out_degree(const FiniteTree& t) { return t.max_out_degree(); }

MaxOutDegree max_out_degree(const PartialTree& t)
{
    MaxOutDegree out;
    for (std::size_t v = 0; v < t.size(); ++v) {
        switch (t.mark(v)) {
        case Mark::infinite: return MaxOutDegree{infinite_degree, false};
        case Mark::materialized:
        case Mark::width_cut: out.value = std::max<std::uint64_t>(out.value, t.full_degree(v)); break;
        case Mark::frontier:
            out.lower_bound_only = true;
            if (t.full_degree(v) != PartialTree::unknown_degree) {
                out.value = std::max<std::uint64_t>(out.value, t.full_degree(v));
            }
            break;
        }
    }
    return out;
}

double log_weight(const FiniteTree& t, const OffspringLaw& law)
{
    const std::uint32_t top = t.max_out_degree();
    std::vector<double> log_p(static_cast<std::size_t>(top) + 1, std::numeric_limits<double>::quiet_NaN());
    CompensatedSum sum;
    for (std::uint32_t d : t.degrees()) {
        double& lp = log_p[d];
        if (std::isnan(lp)) {
            const double p = law.pmf(d);
            lp = p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
        }
        if (std::isinf(lp)) return lp;
        sum += lp;
    }
    return sum.value();
}

double weight(const FiniteTree& t, const OffspringLaw& law) { return std::exp(log_weight(t, law)); }

double forest_weight(std::span<const FiniteTree> forest, const OffspringLaw& law)
{
    CompensatedSum sum;
    for (const auto& t : forest) {
        const double lw = log_weight(t, law);
        if (std::isinf(lw)) return 0.0;
        sum += lw;
    }
    return std::exp(sum.value());
}

FiniteTree graft_right(const FiniteTree& t, const Label& x, const FiniteTree& s)
{
    const std::size_t xi = require_vertex(t, x, "graft_right");
    std::size_t offset = 0;
    const ChildLists lists = graft_lists(t, xi, s, offset);
    return FiniteTree::from_children(lists);
}

FiniteTree graft_leaf(const FiniteTree& t, const Label& x, const FiniteTree& s)
{
    const std::size_t xi = require_vertex(t, x, "graft_leaf");
    if (!t.is_leaf(xi)) throw InvalidInput("graft_leaf: site is not a leaf of the base tree");
    // On a leaf the right-graft shift is zero, so both operations coincide.
    return graft_right(t, x, s);
}

PartialTree graft_right(const FiniteTree& t, const Label& x, const PartialTree& s)
{
    const std::size_t xi = require_vertex(t, x, "graft_right");
    std::size_t offset = 0;
    const ChildLists lists = graft_lists(t, xi, s.skeleton(), offset);
    std::vector<std::size_t> map;
    FiniteTree skeleton = FiniteTree::from_children(lists, 0, &map);

    const std::size_t n = skeleton.size();
    std::vector<Mark> marks(n, Mark::materialized);
    std::vector<std::uint64_t> full(n, 0);
    std::vector<bool> special(n, false);
    bool any_special = false;
    for (std::size_t v = 0; v < t.size(); ++v) full[map[v]] = t.degree(v);
    for (std::size_t v = 1; v < s.size(); ++v) {
        const std::size_t nv = map[offset + v];
        marks[nv] = s.mark(v);
        full[nv] = s.full_degree(v);
        special[nv] = s.is_special(v);
        any_special = any_special || special[nv];
    }
    const std::size_t nx = map[xi];
    const std::uint64_t ell = t.degree(xi);
    switch (s.mark(0)) {
    case Mark::materialized: full[nx] = ell + s.full_degree(0); break;
    case Mark::infinite:
        marks[nx] = Mark::infinite;
        full[nx] = infinite_degree;
        break;
    case Mark::width_cut:
        marks[nx] = Mark::width_cut;
        full[nx] = ell + s.full_degree(0);
        break;
    case Mark::frontier:
        if (ell == 0) {
            marks[nx] = Mark::frontier;
            full[nx] = s.full_degree(0);
        } else {
            // x keeps its own children but the grafted part is unknown
            marks[nx] = Mark::width_cut;
            full[nx] = PartialTree::unknown_degree;
        }
        break;
    }
    special[nx] = s.is_special(0);
    any_special = any_special || special[nx];
    if (!any_special) special.clear();
    return PartialTree(std::move(skeleton), std::move(marks), std::move(full), std::move(special));
}

GraftEvent GraftEvent::leaf(FiniteTree base, Label site)
{
    const std::size_t v = require_vertex(base, site, "leaf graft event");
    if (!base.is_leaf(v)) throw InvalidInput("leaf graft event: site must be a leaf of the base tree");
    return GraftEvent{std::move(base), std::move(site), 0, GraftKind::leaf_graft};
}

GraftEvent GraftEvent::right_plus(FiniteTree base, Label site, std::uint64_t k)
{
    require_vertex(base, site, "right graft event");
    return GraftEvent{std::move(base), std::move(site), k, GraftKind::right_graft_plus};
}

std::size_t GraftEvent::site_index() const { return require_vertex(base, site, "graft event"); }

namespace {

// Degree and child accessors over either tree flavour. For partial trees a
// missing piece of information is reported as nullopt.
struct FiniteView {
    const FiniteTree& s;
    std::optional<std::uint64_t> degree(std::size_t v) const { return s.degree(v); }
    std::optional<std::size_t> child(std::size_t v, std::uint32_t i) const { return s.child(v, i); }
};

struct PartialView {
    const PartialTree& s;
    std::optional<std::uint64_t> degree(std::size_t v) const
    {
        const std::uint64_t d = s.full_degree(v);
        if (d == PartialTree::unknown_degree) return std::nullopt;
        return d;
    }
    std::optional<std::size_t> child(std::size_t v, std::uint32_t i) const
    {
        if (i >= s.skeleton().degree(v)) return std::nullopt;
        return s.skeleton().child(v, i);
    }
};

template <class View>
std::optional<bool> membership_impl(const GraftEvent& e, const View& view)
{
    const FiniteTree& t = e.base;
    const std::size_t x = e.site_index();
    bool unknown = false;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        const auto [tv, sv] = stack.back();
        stack.pop_back();
        if (e.kind == GraftKind::leaf_graft && tv == x) continue;
        const auto sd = view.degree(sv);
        const std::uint64_t td = t.degree(tv);
        if (!sd) {
            unknown = true;
            continue;
        }
        if (tv == x) {
            if (*sd < td || *sd < e.threshold) return false;
        } else if (*sd != td) {
            return false;
        }
        for (std::uint32_t i = 0; i < td; ++i) {
            const auto sc = view.child(sv, i);
            if (!sc) {
                unknown = true;
                continue;
            }
            stack.emplace_back(t.child(tv, i), *sc);
        }
    }
    if (unknown) return std::nullopt;
    return true;
}

}  // namespace

bool membership(const GraftEvent& e, const FiniteTree& s) { return *membership_impl(e, FiniteView{s}); }

std::optional<bool> membership(const GraftEvent& e, const PartialTree& s) { return membership_impl(e, PartialView{s}); }

Decomposition decompose(const FiniteTree& t, const Label& u)
{
    const std::size_t ui = require_vertex(t, u, "decompose");
    ChildLists lists = t.children_lists();
    Decomposition out;
    out.above = FiniteTree::from_children(lists, ui);
    for (std::size_t c : lists[ui]) out.forest.push_back(FiniteTree::from_children(lists, c));
    lists[ui].clear();
    out.below = FiniteTree::from_children(lists, 0);
    return out;
}

PartialTree truncate(const PartialTree& s, std::size_t h, std::size_t w)
{
    const FiniteTree& sk = s.skeleton();
    ChildLists lists(sk.size());
    std::vector<Mark> old_marks(sk.size());
    std::vector<std::uint64_t> old_full(sk.size());
    std::vector<std::size_t> depth(sk.size(), 0);
    std::deque<std::size_t> queue{0};
    while (!queue.empty()) {
        const std::size_t v = queue.front();
        queue.pop_front();
        const std::uint32_t present = sk.degree(v);
        Mark mark = s.mark(v);
        std::uint64_t full = s.full_degree(v);
        if (depth[v] == h) {
            if (present > 0 || mark == Mark::infinite || mark == Mark::width_cut) mark = Mark::frontier;
        } else {
            const auto keep = static_cast<std::uint32_t>(std::min<std::size_t>(present, w));
            if (keep < present && mark == Mark::materialized) mark = Mark::width_cut;
            for (std::uint32_t i = 0; i < keep; ++i) {
                const std::size_t c = sk.child(v, i);
                depth[c] = depth[v] + 1;
                lists[v].push_back(c);
                queue.push_back(c);
            }
        }
        old_marks[v] = mark;
        old_full[v] = full;
    }
    std::vector<std::size_t> map;
    FiniteTree skeleton = FiniteTree::from_children(lists, 0, &map);
    const std::size_t n = skeleton.size();
    std::vector<Mark> marks(n);
    std::vector<std::uint64_t> full(n);
    std::vector<bool> special;
    if (s.is_special(0)) special.assign(n, false);
    for (std::size_t v = 0; v < sk.size(); ++v) {
        if (map[v] == std::numeric_limits<std::size_t>::max()) continue;
        marks[map[v]] = old_marks[v];
        full[map[v]] = old_full[v];
        if (!special.empty()) special[map[v]] = s.is_special(v);
    }
    return PartialTree(std::move(skeleton), std::move(marks), std::move(full), std::move(special));
}

PartialTree truncate(const FiniteTree& s, std::size_t h, std::size_t w)
{
    return truncate(PartialTree::from_finite(s), h, w);
}

FiniteTree path_tree(std::size_t vertices)
{
    if (vertices == 0) throw InvalidInput("a path has at least one vertex");
    std::vector<std::uint32_t> degrees(vertices, 1);
    degrees.back() = 0;
    return FiniteTree::from_bfs_degrees(std::move(degrees));
}

FiniteTree star_tree(std::uint32_t children)
{
    std::vector<std::uint32_t> degrees(static_cast<std::size_t>(children) + 1, 0);
    degrees[0] = children;
    return FiniteTree::from_bfs_degrees(std::move(degrees));
}

}  // namespace gwmax
