#include "qii/interface_model.h"

#include <algorithm>
#include <set>

#include "qii/error.h"
#include "qii/text.h"

namespace qii {

using nlohmann::ordered_json;

DomainRegistry DomainRegistry::with_defaults() {
  DomainRegistry r;
  for (auto name : {"Book", "Airline", "Railways", "Movie", "Law", "Real estates"}) {
    r.register_domain(name);
  }
  return r;
}

DomainId DomainRegistry::register_domain(std::string_view name) {
  auto normalized = normalize_name(name);
  if (normalized.empty()) throw ArgumentError("domain name must not be empty");
  if (auto existing = find(normalized)) return *existing;
  DomainId id{static_cast<int>(domains_.size()) + 1, normalized};
  domains_.push_back(id);
  return id;
}

std::optional<DomainId> DomainRegistry::find(std::string_view name) const {
  for (const auto &d : domains_) {
    if (names_equal(d.name, name)) return d;
  }
  return std::nullopt;
}

bool GroupNode::answers_to(std::string_view candidate) const {
  if (names_equal(name, candidate)) return true;
  return std::any_of(aliases.begin(), aliases.end(),
                     [&](const auto &a) { return names_equal(a, candidate); });
}

const std::string &Node::name() const {
  return is_field() ? field().name : group().name;
}

std::size_t Node::order_index() const {
  return is_field() ? field().order_index : group().order_index;
}

void Node::set_order_index(std::size_t i) {
  if (is_field()) {
    field().order_index = i;
  } else {
    group().order_index = i;
  }
}

namespace {

void validate_siblings(const std::vector<Node> &nodes, std::size_t depth,
                       std::set<std::string> &leaf_keys, const std::string &parent) {
  if (depth > kMaxTreeDepth) {
    throw SchemaError("interface tree deeper than " + std::to_string(kMaxTreeDepth) +
                      " levels under '" + parent + "'");
  }
  std::set<std::string> sibling_keys;
  std::vector<std::size_t> order;
  for (const auto &node : nodes) {
    const auto &name = node.name();
    if (normalize_name(name).empty()) {
      throw SchemaError("empty node name under '" + parent + "'");
    }
    if (!sibling_keys.insert(name_key(name)).second) {
      throw SchemaError("duplicate name '" + name + "' under '" + parent + "'", name);
    }
    order.push_back(node.order_index());
    if (node.is_field()) {
      const auto &f = node.field();
      if (f.type == DataType::kEnum && f.allowed_values.empty()) {
        throw SchemaError("enum field '" + f.name + "' has no allowed values", f.name);
      }
      if (!leaf_keys.insert(name_key(f.name)).second) {
        throw SchemaError("attribute '" + f.name + "' appears on more than one leaf", f.name);
      }
    } else {
      const auto &g = node.group();
      if (g.children.empty()) throw SchemaError("group '" + g.name + "' has no children");
      validate_siblings(g.children, depth + 1, leaf_keys, g.name);
    }
  }
  std::sort(order.begin(), order.end());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i] != i) {
      throw SchemaError("sibling order under '" + parent + "' is not 0.." +
                        std::to_string(order.size() - 1));
    }
  }
}

std::vector<const Node *> ordered(const std::vector<Node> &nodes) {
  std::vector<const Node *> out;
  for (const auto &n : nodes) out.push_back(&n);
  std::stable_sort(out.begin(), out.end(), [](const Node *a, const Node *b) {
    return a->order_index() < b->order_index();
  });
  return out;
}

void flatten_into(const std::vector<Node> &nodes, std::vector<FieldNode> &out) {
  for (const Node *n : ordered(nodes)) {
    if (n->is_field()) {
      out.push_back(n->field());
    } else {
      flatten_into(n->group().children, out);
    }
  }
}

std::string require_string(const ordered_json &j, const char *key, const char *what) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw SchemaError(std::string(what) + " is missing string key '" + key + "'");
  }
  return it->get<std::string>();
}

Node node_from_json(const ordered_json &j, std::size_t index) {
  if (!j.is_object()) throw SchemaError("interface node must be an object");
  if (j.contains("group")) {
    GroupNode g;
    g.name = normalize_name(require_string(j, "group", "group node"));
    g.order_index = index;
    if (auto it = j.find("aliases"); it != j.end()) {
      for (const auto &a : *it) g.aliases.push_back(normalize_name(a.get<std::string>()));
    }
    auto children = j.find("children");
    if (children == j.end() || !children->is_array()) {
      throw SchemaError("group '" + g.name + "' has no children array");
    }
    std::size_t i = 0;
    for (const auto &c : *children) g.children.push_back(node_from_json(c, i++));
    return g;
  }
  if (j.contains("field")) {
    FieldNode f;
    f.name = normalize_name(require_string(j, "field", "field node"));
    f.label = j.contains("label") ? j.at("label").get<std::string>() : f.name;
    try {
      f.type = j.contains("type") ? parse_datatype(j.at("type").get<std::string>())
                                  : DataType::kText;
    } catch (const ArgumentError &e) {
      throw SchemaError(std::string(e.what()) + " on field '" + f.name + "'", f.name);
    }
    if (auto it = j.find("values"); it != j.end() && !it->is_null()) {
      for (const auto &v : *it) f.allowed_values.push_back(v.get<std::string>());
    }
    f.order_index = index;
    return f;
  }
  throw SchemaError("interface node has neither 'group' nor 'field' key");
}

ordered_json node_to_json(const Node &node) {
  ordered_json j;
  if (node.is_field()) {
    const auto &f = node.field();
    j["field"] = f.name;
    j["label"] = f.label;
    j["type"] = datatype_name(f.type);
    if (!f.allowed_values.empty()) j["values"] = f.allowed_values;
    return j;
  }
  const auto &g = node.group();
  j["group"] = g.name;
  if (!g.aliases.empty()) j["aliases"] = g.aliases;
  j["children"] = ordered_json::array();
  for (const Node *c : ordered(g.children)) j["children"].push_back(node_to_json(*c));
  return j;
}

std::size_t depth_of(const std::vector<Node> &nodes) {
  std::size_t d = 0;
  for (const auto &n : nodes) {
    d = std::max<std::size_t>(d, n.is_field() ? 1 : 1 + depth_of(n.group().children));
  }
  return d;
}

const FieldNode *find_in(const std::vector<Node> &nodes, std::string_view name) {
  for (const auto &n : nodes) {
    if (n.is_field()) {
      if (names_equal(n.field().name, name)) return &n.field();
    } else if (auto *f = find_in(n.group().children, name)) {
      return f;
    }
  }
  return nullptr;
}

// Maps a byte offset in `text` to a 1-based line and column.
std::pair<std::size_t, std::size_t> locate(std::string_view text, std::size_t offset) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace

void validate(const InterfaceTree &tree) {
  if (normalize_name(tree.form_name).empty()) throw SchemaError("form_name must not be empty");
  if (tree.children.empty()) throw SchemaError("interface '" + tree.form_name + "' has no fields");
  std::set<std::string> leaf_keys;
  validate_siblings(tree.children, 1, leaf_keys, tree.form_name);
}

InterfaceTree interface_from_json(const ordered_json &doc, DomainRegistry &registry) {
  if (!doc.is_object()) throw SchemaError("interface document must be a JSON object");
  InterfaceTree tree;
  tree.form_name = normalize_name(require_string(doc, "form_name", "interface document"));
  tree.domain = registry.register_domain(require_string(doc, "domain", "interface document"));
  auto children = doc.find("children");
  if (children == doc.end() || !children->is_array()) {
    throw SchemaError("interface document has no children array");
  }
  std::size_t i = 0;
  for (const auto &c : *children) tree.children.push_back(node_from_json(c, i++));
  validate(tree);
  return tree;
}

InterfaceTree parse_interface(std::string_view document, DomainRegistry &registry) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(document.begin(), document.end());
  } catch (const nlohmann::json::parse_error &e) {
    auto [line, column] = locate(document, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError("malformed interface document", line, column);
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(e.what(), 0, 0);
  }
  try {
    return interface_from_json(doc, registry);
  } catch (const nlohmann::json::exception &e) {
    throw SchemaError(std::string("interface document: ") + e.what());
  }
}

ordered_json interface_to_json(const InterfaceTree &tree) {
  ordered_json j;
  j["form_name"] = tree.form_name;
  j["domain"] = tree.domain.name;
  j["children"] = ordered_json::array();
  for (const Node *c : ordered(tree.children)) j["children"].push_back(node_to_json(*c));
  return j;
}

std::string serialize_interface(const InterfaceTree &tree) {
  return interface_to_json(tree).dump(2) + "\n";
}

std::vector<FieldNode> flatten_fields(const InterfaceTree &tree) {
  std::vector<FieldNode> out;
  flatten_into(tree.children, out);
  return out;
}

std::vector<std::string> field_names(const InterfaceTree &tree) {
  std::vector<std::string> out;
  for (const auto &f : flatten_fields(tree)) out.push_back(f.name);
  return out;
}

const FieldNode *find_field(const InterfaceTree &tree, std::string_view name) {
  return find_in(tree.children, name);
}

std::size_t tree_depth(const InterfaceTree &tree) { return depth_of(tree.children); }

std::size_t leaf_count(const InterfaceTree &tree) { return flatten_fields(tree).size(); }

void renumber(std::vector<Node> &nodes) {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    nodes[i].set_order_index(i);
    if (!nodes[i].is_field()) renumber(nodes[i].group().children);
  }
}

}  // namespace qii
