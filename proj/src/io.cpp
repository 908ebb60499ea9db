#include "gwmax/io.hpp"

#include <fstream>
#include <sstream>

#include "gwmax/error.hpp"
#include "gwmax/numeric.hpp"

namespace gwmax {

namespace {

double number_field(const nlohmann::json& spec, const char* key)
{
    if (!spec.contains(key) || !spec.at(key).is_number()) {
        throw InvalidInput(std::string("law spec: numeric field \"") + key + "\" is required");
    }
    return spec.at(key).get<double>();
}

struct Node {
    std::vector<std::size_t> children;
    Mark mark = Mark::materialized;
    std::uint64_t full = 0;
    bool special = false;
};

std::size_t parse_node(const nlohmann::json& j, std::vector<Node>& nodes, bool allow_marks)
{
    const std::size_t id = nodes.size();
    nodes.emplace_back();
    const nlohmann::json* kids = nullptr;
    Node node;
    if (j.is_array()) {
        kids = &j;
    } else if (allow_marks && j.is_object()) {
        node.special = j.value("special", false);
        if (j.value("frontier", false)) {
            node.mark = Mark::frontier;
            node.full = j.contains("degree") ? j.at("degree").get<std::uint64_t>() : PartialTree::unknown_degree;
        } else if (j.value("inf", false)) {
            node.mark = Mark::infinite;
            node.full = infinite_degree;
        } else if (j.contains("cut")) {
            node.mark = Mark::width_cut;
            node.full = j.at("cut").is_null() ? PartialTree::unknown_degree : j.at("cut").get<std::uint64_t>();
        }
        if (j.contains("children")) kids = &j.at("children");
        if (node.mark == Mark::frontier && kids && !kids->empty()) {
            throw InvalidInput("tree json: frontier vertices carry no children");
        }
    } else {
        throw InvalidInput("tree json: a vertex must be a list of child trees");
    }
    if (kids) {
        if (!kids->is_array()) throw InvalidInput("tree json: \"children\" must be a list");
        for (const auto& c : *kids) {
            const std::size_t cid = parse_node(c, nodes, allow_marks);
            node.children.push_back(cid);
        }
    }
    if (node.mark == Mark::materialized) node.full = node.children.size();
    nodes[id] = std::move(node);
    return id;
}

}  // namespace

OffspringLaw law_from_json(const nlohmann::json& spec)
{
    if (!spec.is_object() || !spec.contains("family") || !spec.at("family").is_string()) {
        throw InvalidInput("law spec must be an object with a \"family\" string");
    }
    const std::string family = spec.at("family").get<std::string>();
    if (family == "geometric") return OffspringLaw::geometric(number_field(spec, "a"));
    if (family == "poisson") return OffspringLaw::poisson(number_field(spec, "lambda"));
    if (family == "power-law" || family == "power_law") {
        return OffspringLaw::power_law(number_field(spec, "c"), number_field(spec, "alpha"),
                                       spec.value("require_subcritical", false));
    }
    if (family == "explicit") {
        if (!spec.contains("pmf") || !spec.at("pmf").is_array()) throw InvalidInput("explicit law needs a \"pmf\" list");
        std::vector<double> pmf;
        for (const auto& v : spec.at("pmf")) {
            if (!v.is_number()) throw InvalidInput("explicit pmf entries must be numbers");
            pmf.push_back(v.get<double>());
        }
        if (spec.value("normalize", false)) {
            CompensatedSum s;
            for (double p : pmf) s += p;
            if (!(s.value() > 0.0)) throw InvalidInput("explicit pmf has zero total mass");
            for (double& p : pmf) p /= s.value();
        }
        return OffspringLaw::explicit_pmf(std::move(pmf));
    }
    throw InvalidInput("unknown law family \"" + family + "\"");
}

nlohmann::json read_json_argument(std::string_view text_or_path)
{
    std::string text(text_or_path);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) throw InvalidInput("empty JSON argument");
    if (text[first] != '{' && text[first] != '[') {
        std::ifstream in(text);
        if (!in) throw InvalidInput("cannot open JSON file '" + text + "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        text = buf.str();
    }
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidInput(std::string("malformed JSON: ") + e.what());
    }
}

OffspringLaw parse_law_spec(std::string_view text_or_path) { return law_from_json(read_json_argument(text_or_path)); }

FiniteTree finite_tree_from_json(const nlohmann::json& j)
{
    std::vector<Node> nodes;
    parse_node(j, nodes, false);
    std::vector<std::vector<std::size_t>> lists(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) lists[i] = std::move(nodes[i].children);
    return FiniteTree::from_children(lists);
}

PartialTree partial_tree_from_json(const nlohmann::json& j)
{
    std::vector<Node> nodes;
    parse_node(j, nodes, true);
    std::vector<std::vector<std::size_t>> lists(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) lists[i] = nodes[i].children;
    std::vector<std::size_t> map;
    FiniteTree skeleton = FiniteTree::from_children(lists, 0, &map);
    const std::size_t n = skeleton.size();
    std::vector<Mark> marks(n);
    std::vector<std::uint64_t> full(n);
    std::vector<bool> special(n, false);
    bool any_special = false;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        marks[map[i]] = nodes[i].mark;
        full[map[i]] = nodes[i].full;
        special[map[i]] = nodes[i].special;
        any_special = any_special || nodes[i].special;
    }
    if (!any_special) special.clear();
    return PartialTree(std::move(skeleton), std::move(marks), std::move(full), std::move(special));
}

Label label_from_json(const nlohmann::json& j)
{
    if (!j.is_array()) throw InvalidInput("a vertex label is a list of positive integers");
    Label out;
    for (const auto& v : j) {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
            throw InvalidInput("vertex label entries must be positive integers");
        }
        out.push_back(v.get<std::uint32_t>());
    }
    return out;
}

nlohmann::json label_to_json(const Label& label) { return nlohmann::json(label); }

GraftEvent graft_event_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) throw InvalidInput("a graft event is a JSON object with kind, tree and site");
    const std::string kind = j.value("kind", std::string("leaf-graft"));
    if (!j.contains("tree")) throw InvalidInput("graft event: missing \"tree\"");
    FiniteTree base = finite_tree_from_json(j.at("tree"));
    Label site = j.contains("site") ? label_from_json(j.at("site")) : Label{};
    if (kind == "leaf-graft") {
        if (j.contains("k")) throw InvalidInput("leaf-graft events take no threshold k");
        return GraftEvent::leaf(std::move(base), std::move(site));
    }
    if (kind == "right-graft-plus") {
        const auto& k = j.value("k", nlohmann::json(0));
        if (!k.is_number_integer() || k.get<std::int64_t>() < 0) {
            throw InvalidInput("right-graft-plus threshold k must be a non-negative integer");
        }
        return GraftEvent::right_plus(std::move(base), std::move(site), k.get<std::uint64_t>());
    }
    throw InvalidInput("unknown graft event kind '" + kind + "' (leaf-graft, right-graft-plus)");
}

nlohmann::ordered_json graft_event_to_json(const GraftEvent& e)
{
    nlohmann::ordered_json j;
    j["kind"] = e.kind == GraftKind::leaf_graft ? "leaf-graft" : "right-graft-plus";
    j["tree"] = nlohmann::ordered_json::parse(to_json(e.base));
    j["site"] = e.site;
    if (e.kind == GraftKind::right_graft_plus) j["k"] = e.threshold;
    return j;
}

namespace {

template <class Open, class Close>
std::string serialize(const FiniteTree& t, Open open, Close close)
{
    std::string out;
    // (vertex, index of the next child to visit)
    std::vector<std::pair<std::size_t, std::uint32_t>> stack{{0, 0}};
    open(out, 0);
    while (!stack.empty()) {
        auto& [v, next] = stack.back();
        if (next < t.degree(v)) {
            if (next > 0) out += ',';
            const std::size_t c = t.child(v, next);
            ++next;
            open(out, c);
            stack.emplace_back(c, 0);
        } else {
            close(out, v);
            stack.pop_back();
        }
    }
    return out;
}

}  // namespace

std::string to_json(const FiniteTree& t)
{
    return serialize(
        t, [](std::string& out, std::size_t) { out += '['; }, [](std::string& out, std::size_t) { out += ']'; });
}

std::string to_json(const PartialTree& t)
{
    auto plain = [&](std::size_t v) { return t.mark(v) == Mark::materialized && !t.is_special(v); };
    auto open = [&](std::string& out, std::size_t v) {
        if (plain(v)) {
            out += '[';
            return;
        }
        out += '{';
        bool first = true;
        auto field = [&](const std::string& kv) {
            if (!first) out += ',';
            out += kv;
            first = false;
        };
        switch (t.mark(v)) {
        case Mark::infinite: field("\"inf\":true"); break;
        case Mark::frontier: field("\"frontier\":true"); break;
        case Mark::width_cut:
            if (t.full_degree(v) != PartialTree::unknown_degree) {
                field("\"cut\":" + std::to_string(t.full_degree(v)));
            } else {
                field("\"cut\":null");
            }
            break;
        case Mark::materialized: break;
        }
        if (t.is_special(v)) field("\"special\":true");
        if (t.mark(v) == Mark::frontier) {
            if (t.full_degree(v) != PartialTree::unknown_degree) {
                field("\"degree\":" + std::to_string(t.full_degree(v)));
            }
            return;
        }
        field("\"children\":[");
    };
    auto close = [&](std::string& out, std::size_t v) {
        if (plain(v)) {
            out += ']';
        } else if (t.mark(v) == Mark::frontier) {
            out += '}';
        } else {
            out += "]}";
        }
    };
    return serialize(t.skeleton(), open, close);
}

}  // namespace gwmax
