// Shared fixtures and independent oracles for the unit, property and
// acceptance tests. Nothing here calls into the code it is used to check
// beyond constructing inputs.
#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "qii/interface_merger.h"
#include "qii/query_engine.h"
#include "qii/result_integrator.h"
#include "qii/source_store.h"
#include "qii/view_selector.h"

namespace qii::testing {

std::string data_dir();  // the shipped airline fixtures

FieldNode field(std::string name, DataType type = DataType::kText,
                std::vector<std::string> allowed = {});
GroupNode group(std::string name, std::vector<Node> children,
                std::vector<std::string> aliases = {});
// Builds and renumbers a tree in the given order.
InterfaceTree tree(std::string form, DomainId domain, std::vector<Node> children);

// The airline form exactly as the Passenger/Option/Status groups read.
InterfaceTree airline_tree(std::string form = "airline_a");
SynonymTable airline_synonyms();

// Predicate semantics written out independently: nulls fail, kinds must
// agree, comparisons follow the natural order of each kind.
bool oracle_match(const Predicate &p, const Value &v);
std::vector<Record> oracle_filter(const std::vector<Record> &rows,
                                  const std::vector<Predicate> &predicates);

// Nested-loop natural join on `def.join_key`, projected on the view
// attributes. Shared non-key columns must be equal and non-null.
std::vector<Record> nested_loop_join(const ViewDefinition &def,
                                     const std::vector<const Relation *> &bases);

// Three keyed relations R1(A, S), R2(B, S), R3(C) over overlapping key
// ranges; S is shared by R1 and R2 so joins must check agreement. At most
// `max_tuples` tuples per relation.
std::vector<Relation> random_bases(std::mt19937_64 &rng, std::size_t max_tuples);
ViewDefinition random_bases_view();
// A batch of inserts and deletes against one or more of `bases` (keys never
// both inserted and deleted in the same relation).
std::vector<Delta> random_deltas(std::mt19937_64 &rng, const std::vector<Relation> &bases);

// Multiset equality on record lists (order ignored).
bool same_multiset(std::vector<Record> a, std::vector<Record> b);

// Two hidden-web sources carved out of one "union database" of truth rows.
// Source alpha splits its part over two relations and encodes dates as
// D/M/YYYY text; source beta keeps one relation, codes Class and stores
// Fare in hundredths.
struct Scenario {
  UnifiedInterface unified;
  std::map<std::string, SourceStore> stores;
  std::vector<NormalizationRule> rules;
  std::map<std::int64_t, Record> truth;                     // unified names
  std::map<std::string, std::set<std::int64_t>> holders;    // source → keys
  std::map<std::string, std::set<std::string>> provides;    // source → unified attrs
};

// Each source holds at most `max_tuples` tuples across its relations.
Scenario make_scenario(std::mt19937_64 &rng, std::size_t max_tuples);
GlobalQuery random_query(std::mt19937_64 &rng, const Scenario &scenario);

// The single-pass filter over the union database: what the mediator should
// answer when every source reports honestly.
std::vector<CanonicalRecord> union_oracle(const Scenario &scenario, const GlobalQuery &query);

// Per-round greedy benefits recomputed from the raw ancestor lists.
double oracle_benefit(const std::vector<LatticeNode> &nodes, const std::string &view,
                      const std::set<std::string> &materialized);

}  // namespace qii::testing
