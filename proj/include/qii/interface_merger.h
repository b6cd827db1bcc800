#pragma once

#include <compare>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qii/interface_model.h"

namespace qii {

// Canonical attribute name → alias names. Alias sets are disjoint and no
// canonical name doubles as an alias.
class SynonymTable {
 public:
  void add(std::string canonical, const std::vector<std::string> &aliases);

  // Canonical spelling when `name` is a canonical entry or an alias.
  std::optional<std::string> lookup(std::string_view name) const;

  const std::vector<std::pair<std::string, std::vector<std::string>>> &entries() const {
    return entries_;
  }

  static SynonymTable from_json(const nlohmann::ordered_json &doc);
  static SynonymTable parse(std::string_view text);

 private:
  std::vector<std::pair<std::string, std::vector<std::string>>> entries_;
  std::vector<std::pair<std::string, std::string>> key_to_canonical_;
};

std::string canonicalize(std::string_view name, const SynonymTable &synonyms);

struct AttributeMapping {
  std::string source_id;
  std::string local_name;
  std::string unified_name;

  friend auto operator<=>(const AttributeMapping &, const AttributeMapping &) = default;
};

enum class TripMode { kOneWay, kRoundTrip, kMultiCity, kPackage };

TripMode parse_trip_mode(std::string_view name);
std::string_view trip_mode_name(TripMode mode);

// The merged global schema plus the per-source mapping table. A source is
// identified by the form_name of its interface tree.
struct UnifiedInterface {
  InterfaceTree tree;
  std::vector<AttributeMapping> mappings;
  std::vector<std::string> sources;
  // Datatype conflicts resolved during the merge. Not serialized.
  std::vector<std::string> warnings;

  std::optional<std::string> unified_name(std::string_view source,
                                          std::string_view local) const;
  std::optional<std::string> local_name(std::string_view source,
                                        std::string_view unified) const;
  std::vector<AttributeMapping> mappings_for(std::string_view source) const;
};

void validate(const UnifiedInterface &unified);

// Pairs leaves of `a` and `b` that canonicalize to the same name. Each leaf
// appears in at most one pair. Throws DomainMismatchError across domains.
std::vector<std::pair<std::string, std::string>> match_attributes(
    const InterfaceTree &a, const InterfaceTree &b, const SynonymTable &synonyms);

UnifiedInterface merge_interfaces(std::span<const InterfaceTree> trees,
                                  const SynonymTable &synonyms);

nlohmann::ordered_json unified_to_json(const UnifiedInterface &unified);
UnifiedInterface unified_from_json(const nlohmann::ordered_json &doc,
                                   DomainRegistry &registry);
UnifiedInterface parse_unified(std::string_view text, DomainRegistry &registry);
std::string serialize_unified(const UnifiedInterface &unified);

struct ModeRule {
  TripMode mode;
  std::string selector;             // field whose presence enables the mode
  std::vector<std::string> fields;  // canonical fields visible in this mode
};

class ModeRules {
 public:
  static ModeRules airline_defaults();
  static ModeRules from_json(const nlohmann::ordered_json &doc);

  void set(ModeRule rule);
  const ModeRule *find(TripMode mode) const;

 private:
  std::vector<ModeRule> rules_;
};

// Visible fields for `mode`, in unified tree order.
std::vector<std::string> project_for_mode(
    const UnifiedInterface &unified, TripMode mode,
    const ModeRules &rules = ModeRules::airline_defaults());

}  // namespace qii
