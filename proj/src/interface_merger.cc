#include "qii/interface_merger.h"

#include <algorithm>
#include <set>

#include "qii/error.h"
#include "qii/text.h"

namespace qii {

using nlohmann::ordered_json;

void SynonymTable::add(std::string canonical, const std::vector<std::string> &aliases) {
  canonical = normalize_name(canonical);
  if (canonical.empty()) throw ArgumentError("synonym table: empty canonical name");
  auto canonical_key = name_key(canonical);
  for (const auto &[k, c] : key_to_canonical_) {
    if (k == canonical_key) {
      throw ConfigError("synonym table: '" + canonical + "' already used by '" + c + "'");
    }
  }
  std::vector<std::string> normalized;
  for (const auto &a : aliases) normalized.push_back(normalize_name(a));
  for (const auto &a : normalized) {
    for (const auto &[k, c] : key_to_canonical_) {
      if (k == name_key(a)) {
        throw ConfigError("synonym table: alias '" + a + "' already belongs to '" + c + "'");
      }
    }
    if (name_key(a) == canonical_key) {
      throw ConfigError("synonym table: '" + a + "' is its own alias");
    }
  }
  key_to_canonical_.emplace_back(canonical_key, canonical);
  for (const auto &a : normalized) key_to_canonical_.emplace_back(name_key(a), canonical);
  entries_.emplace_back(std::move(canonical), std::move(normalized));
}

std::optional<std::string> SynonymTable::lookup(std::string_view name) const {
  auto key = name_key(name);
  for (const auto &[k, c] : key_to_canonical_) {
    if (k == key) return c;
  }
  return std::nullopt;
}

SynonymTable SynonymTable::from_json(const ordered_json &doc) {
  if (!doc.is_object()) throw ConfigError("synonym table must be a JSON object");
  SynonymTable table;
  for (const auto &[canonical, aliases] : doc.items()) {
    table.add(canonical, aliases.get<std::vector<std::string>>());
  }
  return table;
}

SynonymTable SynonymTable::parse(std::string_view text) {
  try {
    return from_json(ordered_json::parse(text.begin(), text.end()));
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("synonym table: ") + e.what());
  }
}

std::string canonicalize(std::string_view name, const SynonymTable &synonyms) {
  if (auto c = synonyms.lookup(name)) return *c;
  return normalize_name(name);
}

TripMode parse_trip_mode(std::string_view name) {
  auto key = compact_key(name);
  if (key == "oneway") return TripMode::kOneWay;
  if (key == "roundtrip") return TripMode::kRoundTrip;
  if (key == "multicity") return TripMode::kMultiCity;
  if (key == "package") return TripMode::kPackage;
  throw ArgumentError("unknown trip mode '" + std::string(name) + "'");
}

std::string_view trip_mode_name(TripMode mode) {
  switch (mode) {
    case TripMode::kOneWay: return "OneWay";
    case TripMode::kRoundTrip: return "RoundTrip";
    case TripMode::kMultiCity: return "MultiCity";
    case TripMode::kPackage: return "Package";
  }
  return "OneWay";
}

std::optional<std::string> UnifiedInterface::unified_name(std::string_view source,
                                                          std::string_view local) const {
  for (const auto &m : mappings) {
    if (m.source_id == source && names_equal(m.local_name, local)) return m.unified_name;
  }
  return std::nullopt;
}

std::optional<std::string> UnifiedInterface::local_name(std::string_view source,
                                                        std::string_view unified) const {
  for (const auto &m : mappings) {
    if (m.source_id == source && names_equal(m.unified_name, unified)) return m.local_name;
  }
  return std::nullopt;
}

std::vector<AttributeMapping> UnifiedInterface::mappings_for(std::string_view source) const {
  std::vector<AttributeMapping> out;
  for (const auto &m : mappings) {
    if (m.source_id == source) out.push_back(m);
  }
  return out;
}

void validate(const UnifiedInterface &unified) {
  validate(unified.tree);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto &m : unified.mappings) {
    if (!find_field(unified.tree, m.unified_name)) {
      throw SchemaError("mapping target '" + m.unified_name + "' is not a unified field",
                        m.unified_name);
    }
    if (std::find(unified.sources.begin(), unified.sources.end(), m.source_id) ==
        unified.sources.end()) {
      throw SchemaError("mapping names unknown source '" + m.source_id + "'");
    }
    if (!seen.emplace(m.source_id, name_key(m.local_name)).second) {
      throw SchemaError("'" + m.source_id + "." + m.local_name + "' maps more than once",
                        m.local_name);
    }
  }
}

namespace {

void require_same_domain(const InterfaceTree &a, const InterfaceTree &b) {
  if (!names_equal(a.domain.name, b.domain.name)) {
    throw DomainMismatchError("cannot match '" + a.form_name + "' (" + a.domain.name +
                              ") with '" + b.form_name + "' (" + b.domain.name + ")");
  }
}

struct LeafWithParent {
  FieldNode field;
  const GroupNode *parent;  // nullptr for fields directly under the form
};

void leaves_with_parents(const std::vector<Node> &nodes, const GroupNode *parent,
                         std::vector<LeafWithParent> &out) {
  std::vector<const Node *> sorted;
  for (const auto &n : nodes) sorted.push_back(&n);
  std::stable_sort(sorted.begin(), sorted.end(), [](const Node *a, const Node *b) {
    return a->order_index() < b->order_index();
  });
  for (const Node *n : sorted) {
    if (n->is_field()) {
      out.push_back({n->field(), parent});
    } else {
      leaves_with_parents(n->group().children, &n->group(), out);
    }
  }
}

// Copies `nodes` in sibling order with canonical leaf names, dropping any
// leaf whose canonical name was already seen and any group left empty.
std::vector<Node> canonical_copy(const std::vector<Node> &nodes, const SynonymTable &syn,
                                 std::set<std::string> &seen) {
  std::vector<const Node *> sorted;
  for (const auto &n : nodes) sorted.push_back(&n);
  std::stable_sort(sorted.begin(), sorted.end(), [](const Node *a, const Node *b) {
    return a->order_index() < b->order_index();
  });
  std::vector<Node> out;
  for (const Node *n : sorted) {
    if (n->is_field()) {
      FieldNode f = n->field();
      f.name = canonicalize(f.name, syn);
      if (!seen.insert(name_key(f.name)).second) continue;
      out.emplace_back(std::move(f));
    } else {
      GroupNode g;
      g.name = n->group().name;
      g.aliases = n->group().aliases;
      g.children = canonical_copy(n->group().children, syn, seen);
      if (!g.children.empty()) out.emplace_back(std::move(g));
    }
  }
  return out;
}

FieldNode *find_field_mut(std::vector<Node> &nodes, std::string_view name) {
  for (auto &n : nodes) {
    if (n.is_field()) {
      if (names_equal(n.field().name, name)) return &n.field();
    } else if (auto *f = find_field_mut(n.group().children, name)) {
      return f;
    }
  }
  return nullptr;
}

GroupNode *find_group_mut(std::vector<Node> &nodes, const GroupNode &like) {
  for (auto &n : nodes) {
    if (n.is_field()) continue;
    auto &g = n.group();
    bool match = g.answers_to(like.name) ||
                 std::any_of(like.aliases.begin(), like.aliases.end(),
                             [&](const auto &a) { return g.answers_to(a); });
    if (match) return &g;
    if (auto *inner = find_group_mut(g.children, like)) return inner;
  }
  return nullptr;
}

void reconcile(FieldNode &unified, const FieldNode &incoming, const std::string &source,
               std::vector<std::string> &warnings) {
  if (unified.type != incoming.type) {
    auto resolved = more_general(unified.type, incoming.type);
    warnings.push_back("datatype conflict on '" + unified.name + "': " +
                       std::string(datatype_name(unified.type)) + " vs " +
                       std::string(datatype_name(incoming.type)) + " from " + source +
                       ", using " + std::string(datatype_name(resolved)));
    if (resolved == DataType::kEnum && unified.type != DataType::kEnum) {
      unified.allowed_values = incoming.allowed_values;
    }
    unified.type = resolved;
    if (resolved != DataType::kEnum) unified.allowed_values.clear();
  } else if (unified.type == DataType::kEnum) {
    for (const auto &v : incoming.allowed_values) {
      bool known = std::any_of(unified.allowed_values.begin(), unified.allowed_values.end(),
                               [&](const auto &u) { return names_equal(u, v); });
      if (!known) unified.allowed_values.push_back(v);
    }
  }
}

}  // namespace

std::vector<std::pair<std::string, std::string>> match_attributes(
    const InterfaceTree &a, const InterfaceTree &b, const SynonymTable &synonyms) {
  require_same_domain(a, b);
  auto left = flatten_fields(a);
  auto right = flatten_fields(b);
  std::vector<bool> used(right.size(), false);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto &l : left) {
    auto key = name_key(canonicalize(l.name, synonyms));
    for (std::size_t i = 0; i < right.size(); ++i) {
      if (used[i] || name_key(canonicalize(right[i].name, synonyms)) != key) continue;
      used[i] = true;
      pairs.emplace_back(l.name, right[i].name);
      break;
    }
  }
  return pairs;
}

UnifiedInterface merge_interfaces(std::span<const InterfaceTree> trees,
                                  const SynonymTable &synonyms) {
  if (trees.empty()) throw ArgumentError("merge_interfaces needs at least one interface");
  for (const auto &t : trees) require_same_domain(trees.front(), t);

  UnifiedInterface u;
  const auto &first = trees.front();
  u.tree.form_name = first.form_name;
  u.tree.domain = first.domain;
  std::set<std::string> seen;
  u.tree.children = canonical_copy(first.children, synonyms, seen);

  std::set<AttributeMapping> mappings;
  for (std::size_t t = 0; t < trees.size(); ++t) {
    const auto &tree = trees[t];
    if (std::find(u.sources.begin(), u.sources.end(), tree.form_name) == u.sources.end()) {
      u.sources.push_back(tree.form_name);
    }
    std::vector<LeafWithParent> leaves;
    leaves_with_parents(tree.children, nullptr, leaves);
    for (const auto &[leaf, parent] : leaves) {
      auto canonical = canonicalize(leaf.name, synonyms);
      mappings.insert({tree.form_name, leaf.name, canonical});
      if (auto *existing = find_field_mut(u.tree.children, canonical)) {
        if (t > 0) reconcile(*existing, leaf, tree.form_name, u.warnings);
        continue;
      }
      FieldNode added = leaf;
      added.name = canonical;
      GroupNode *target = parent ? find_group_mut(u.tree.children, *parent) : nullptr;
      if (!target) {
        GroupNode other_like;
        other_like.name = "other";
        target = find_group_mut(u.tree.children, other_like);
        if (!target) {
          GroupNode other;
          other.name = "other";
          u.tree.children.emplace_back(std::move(other));
          target = &u.tree.children.back().group();
        }
      }
      target->children.emplace_back(std::move(added));
    }
  }
  renumber(u.tree.children);
  u.mappings.assign(mappings.begin(), mappings.end());
  validate(u);
  return u;
}

ordered_json unified_to_json(const UnifiedInterface &unified) {
  auto j = interface_to_json(unified.tree);
  j["sources"] = unified.sources;
  j["mappings"] = ordered_json::array();
  for (const auto &m : unified.mappings) {
    j["mappings"].push_back(
        {{"source", m.source_id}, {"local", m.local_name}, {"unified", m.unified_name}});
  }
  return j;
}

UnifiedInterface unified_from_json(const ordered_json &doc, DomainRegistry &registry) {
  UnifiedInterface u;
  u.tree = interface_from_json(doc, registry);
  if (auto it = doc.find("sources"); it != doc.end()) {
    u.sources = it->get<std::vector<std::string>>();
  }
  if (auto it = doc.find("mappings"); it != doc.end()) {
    for (const auto &m : *it) {
      u.mappings.push_back({m.at("source").get<std::string>(), m.at("local").get<std::string>(),
                            m.at("unified").get<std::string>()});
    }
  }
  std::sort(u.mappings.begin(), u.mappings.end());
  validate(u);
  return u;
}

UnifiedInterface parse_unified(std::string_view text, DomainRegistry &registry) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error &e) {
    throw ParseError("malformed unified interface document", 0, e.byte);
  }
  try {
    return unified_from_json(doc, registry);
  } catch (const nlohmann::json::exception &e) {
    throw SchemaError(std::string("unified interface document: ") + e.what());
  }
}

std::string serialize_unified(const UnifiedInterface &unified) {
  return unified_to_json(unified).dump(2) + "\n";
}

ModeRules ModeRules::airline_defaults() {
  ModeRules rules;
  std::vector<std::string> one_way = {"Adults", "Children", "Infant", "From",
                                      "To",     "Leave",    "Leave Date"};
  auto round_trip = one_way;
  round_trip.insert(round_trip.end(), {"Return", "Return Date"});
  auto package = round_trip;
  package.push_back("Class");
  rules.set({TripMode::kOneWay, "One way", one_way});
  rules.set({TripMode::kRoundTrip, "Round trip", round_trip});
  rules.set({TripMode::kMultiCity, "Multicity", round_trip});
  rules.set({TripMode::kPackage, "Package", package});
  return rules;
}

ModeRules ModeRules::from_json(const ordered_json &doc) {
  ModeRules rules;
  for (const auto &[name, body] : doc.items()) {
    rules.set({parse_trip_mode(name), body.at("selector").get<std::string>(),
               body.at("fields").get<std::vector<std::string>>()});
  }
  return rules;
}

void ModeRules::set(ModeRule rule) {
  for (auto &r : rules_) {
    if (r.mode == rule.mode) {
      r = std::move(rule);
      return;
    }
  }
  rules_.push_back(std::move(rule));
}

const ModeRule *ModeRules::find(TripMode mode) const {
  for (const auto &r : rules_) {
    if (r.mode == mode) return &r;
  }
  return nullptr;
}

std::vector<std::string> project_for_mode(const UnifiedInterface &unified, TripMode mode,
                                          const ModeRules &rules) {
  const ModeRule *rule = rules.find(mode);
  if (!rule) {
    throw ArgumentError("no projection rule for mode " + std::string(trip_mode_name(mode)));
  }
  if (!find_field(unified.tree, rule->selector)) {
    throw ArgumentError("mode selector '" + rule->selector + "' is not a unified field");
  }
  std::vector<std::string> out;
  for (const auto &f : flatten_fields(unified.tree)) {
    bool visible = std::any_of(rule->fields.begin(), rule->fields.end(),
                               [&](const auto &v) { return names_equal(v, f.name); });
    if (visible) out.push_back(f.name);
  }
  return out;
}

}  // namespace qii
