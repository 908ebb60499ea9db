#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "gwmax/offspring.hpp"
#include "gwmax/tree.hpp"

namespace gwmax {

/// {"family":"geometric","a":0.3}, {"family":"poisson","lambda":1},
/// {"family":"power-law","c":0.5,"alpha":4}, {"family":"explicit","pmf":[...]}.
/// Explicit laws accept "normalize": true to rescale the entries.
OffspringLaw law_from_json(const nlohmann::json& spec);

/// Inline JSON (leading '{') or a path to a JSON file.
OffspringLaw parse_law_spec(std::string_view text_or_path);

/// Reads inline JSON (leading '{' or '[') or a file.
nlohmann::json read_json_argument(std::string_view text_or_path);

/// A tree is the list of its child trees: [] is a leaf, [[],[]] a cherry.
FiniteTree finite_tree_from_json(const nlohmann::json& j);
/// Adds {"inf":true,"children":[...]}, {"frontier":true}, {"cut":N,"children":[...]}
/// and an optional "special":true flag on any vertex object.
PartialTree partial_tree_from_json(const nlohmann::json& j);
Label label_from_json(const nlohmann::json& j);
/// {"kind":"leaf-graft","tree":[[]],"site":[1]} or
/// {"kind":"right-graft-plus","tree":[],"site":[],"k":2}.
GraftEvent graft_event_from_json(const nlohmann::json& j);
nlohmann::ordered_json graft_event_to_json(const GraftEvent& e);

/// Compact single-line encodings; iterative, so deep trees are fine.
std::string to_json(const FiniteTree& t);
std::string to_json(const PartialTree& t);
nlohmann::json label_to_json(const Label& label);

}  // namespace gwmax
