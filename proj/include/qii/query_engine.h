#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qii/interface_merger.h"
#include "qii/source_store.h"

namespace qii {

// Conjunctive query over unified attribute names.
struct GlobalQuery {
  DomainId domain;
  std::vector<Predicate> predicates;
  std::size_t keyword_count = 0;
  std::string id;

  std::vector<std::string> attributes() const;
};

// Grammar: whitespace-separated `attr=value`, `attr<=value`, `attr>=value`
// or `attr=lo..hi` tokens. Attribute names and values may be quoted.
// Attribute names resolve against the unified leaves; values are typed by
// the leaf datatype. Throws SyntaxError.
GlobalQuery parse_query(std::string_view text, const UnifiedInterface &unified);
GlobalQuery parse_query(const std::vector<std::pair<std::string, std::string>> &terms,
                        const UnifiedInterface &unified);

std::string query_text(const GlobalQuery &query);

enum class Comparison { kLt, kLe, kEq, kGe, kGt };

// `attribute op literal` or `attribute op other_attribute`.
struct IntegrityConstraint {
  std::string attribute;
  Comparison op = Comparison::kEq;
  std::optional<Value> literal;
  std::string other_attribute;
  std::string text;
};

IntegrityConstraint parse_constraint(std::string_view text, const UnifiedInterface &unified);

struct RelationInfo {
  std::string name;
  std::vector<std::string> attributes;
  std::size_t cardinality = 0;
};

struct SourceEntry {
  std::string id;
  std::vector<AttributeMapping> mappings;
  std::vector<RelationInfo> relations;
};

struct Catalog {
  std::vector<SourceEntry> sources;
  // user → readable attributes; "*" grants every attribute. When unset,
  // every user may read everything.
  std::optional<std::map<std::string, std::vector<std::string>>> privileges;
  std::vector<IntegrityConstraint> constraints;
  std::string join_key = "booking_id";

  void add_source(SourceEntry entry);
  const SourceEntry *source(std::string_view id) const;

  // Sources and mappings come from `unified`, relation inventories from
  // `stores`; privileges, constraints and join_key from `config`.
  static Catalog build(const UnifiedInterface &unified,
                       const std::map<std::string, SourceStore> &stores,
                       const nlohmann::ordered_json &config);
};

// Accepts the query unchanged or throws AuthorizationError /
// IntegrityError. A constraint is violated when no value admitted by the
// query's predicates can satisfy it.
GlobalQuery modify_query(const GlobalQuery &query, std::string_view user, const Catalog &catalog);

struct QueryPlan {
  enum class Path { kView, kBaseJoin };

  Path path = Path::kBaseJoin;
  std::string view;
  std::vector<std::string> relations;
  std::size_t estimated_cost = 0;
  std::vector<std::string> sources;

  std::string describe() const;
};

// Chooses the smallest view covering `attributes`, else the minimal set of
// relations covering them (ties: fewer tuples, then names).
QueryPlan plan_access(const std::vector<std::string> &attributes,
                      const std::vector<const MaterializedView *> &views,
                      const std::vector<RelationInfo> &relations);

// Plans `query` against one source of the catalog, translating unified
// attribute names through that source's mappings.
QueryPlan plan_query(const GlobalQuery &query, const std::vector<const MaterializedView *> &views,
                     const Catalog &catalog, std::string_view source);

std::vector<RelationInfo> relation_inventory(const SourceStore &store);
std::vector<const MaterializedView *> view_list(const SourceStore &store);

// Runs `plan` on `store`: filters with `predicates` and returns the join key
// plus `outputs` for each qualifying row.
Selection execute_plan(const QueryPlan &plan, const SourceStore &store,
                       const std::vector<Predicate> &predicates,
                       const std::vector<std::string> &outputs, const std::string &join_key);

struct LocalQuery {
  std::string destination;
  int priority = 0;
  std::map<std::string, std::string> metadata;
  std::vector<Predicate> predicates;  // local attribute names
  std::vector<std::string> outputs;   // local attributes to return
  std::vector<Predicate> residual;    // unified predicates left for integration
};

// (source id, local attribute) pairs whose local encoding differs from the
// unified one; predicates on them are evaluated after normalization.
using DeferredAttributes = std::vector<std::pair<std::string, std::string>>;

std::vector<LocalQuery> generate_local_queries(const GlobalQuery &query,
                                               const UnifiedInterface &unified,
                                               const DeferredAttributes &deferred = {});

struct ManifestEntry {
  std::string source;
  std::string message;
  std::optional<Value> key;
};

struct DispatchOptions {
  bool use_views = true;
  std::string join_key = "booking_id";
};

struct DispatchResult {
  std::map<std::string, std::vector<Record>> results;  // local attribute names
  std::vector<ManifestEntry> manifest;
  std::vector<std::string> log;  // query id \t destination \t priority \t predicates
  std::map<std::string, QueryPlan> plans;
  std::size_t tuples_scanned = 0;
};

// Evaluates each local query on its destination store. Destinations run
// concurrently; within one destination higher priority goes first, then
// arrival order. A missing store is recorded in the manifest.
DispatchResult dispatch(const std::vector<LocalQuery> &queries,
                        const std::map<std::string, SourceStore> &stores,
                        const DispatchOptions &options = {});

}  // namespace qii
