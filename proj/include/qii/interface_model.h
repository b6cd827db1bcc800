#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "qii/value.h"

namespace qii {

struct DomainId {
  int id = 0;
  std::string name;

  friend bool operator==(const DomainId &, const DomainId &) = default;
};

// Maps domain names to stable integer ids. Names compare
// case-insensitively after whitespace normalization.
class DomainRegistry {
 public:
  // Book=1, Airline=2, Railways=3, Movie=4, Law=5, Real estates=6.
  static DomainRegistry with_defaults();

  // Returns the existing id when `name` is known, else assigns the next
  // integer. Throws ArgumentError on an empty name.
  DomainId register_domain(std::string_view name);
  std::optional<DomainId> find(std::string_view name) const;
  const std::vector<DomainId> &domains() const { return domains_; }

 private:
  std::vector<DomainId> domains_;
};

inline constexpr std::size_t kMaxTreeDepth = 8;

struct FieldNode {
  std::string name;
  std::string label;
  DataType type = DataType::kText;
  std::vector<std::string> allowed_values;
  std::size_t order_index = 0;
};

struct Node;

struct GroupNode {
  std::string name;
  // Alternative names for the same group (e.g. a group captioned "Place"
  // in one place and "Option" in another).
  std::vector<std::string> aliases;
  std::vector<Node> children;
  std::size_t order_index = 0;

  bool answers_to(std::string_view candidate) const;
};

struct Node {
  std::variant<FieldNode, GroupNode> content;

  Node(FieldNode f) : content(std::move(f)) {}
  Node(GroupNode g) : content(std::move(g)) {}

  bool is_field() const { return std::holds_alternative<FieldNode>(content); }
  const FieldNode &field() const { return std::get<FieldNode>(content); }
  FieldNode &field() { return std::get<FieldNode>(content); }
  const GroupNode &group() const { return std::get<GroupNode>(content); }
  GroupNode &group() { return std::get<GroupNode>(content); }

  const std::string &name() const;
  std::size_t order_index() const;
  void set_order_index(std::size_t i);
};

// Ordered tree of one source's search form. The root is the form itself;
// internal nodes are groups or supergroups and leaves are fields.
struct InterfaceTree {
  std::string form_name;
  DomainId domain;
  std::vector<Node> children;
};

// Throws SchemaError when any structural invariant is broken.
void validate(const InterfaceTree &tree);

// Parses the JSON interface document and validates the result. Malformed
// JSON raises ParseError with line/column; invariant violations raise
// SchemaError.
InterfaceTree parse_interface(std::string_view document, DomainRegistry &registry);
InterfaceTree interface_from_json(const nlohmann::ordered_json &doc,
                                  DomainRegistry &registry);
nlohmann::ordered_json interface_to_json(const InterfaceTree &tree);
std::string serialize_interface(const InterfaceTree &tree);

// Leaves in depth-first order, siblings visited by order_index.
std::vector<FieldNode> flatten_fields(const InterfaceTree &tree);
std::vector<std::string> field_names(const InterfaceTree &tree);

const FieldNode *find_field(const InterfaceTree &tree, std::string_view name);
std::size_t tree_depth(const InterfaceTree &tree);
std::size_t leaf_count(const InterfaceTree &tree);

// Reassigns order_index 0..n-1 following current vector order, recursively.
void renumber(std::vector<Node> &nodes);

}  // namespace qii
