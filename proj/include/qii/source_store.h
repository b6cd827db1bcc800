#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qii/value.h"

namespace qii {

// Conjunctive selection condition on one attribute. Null never satisfies
// any predicate.
struct Predicate {
  enum class Op { kEq, kLe, kGe, kBetween };

  std::string attribute;
  Op op = Op::kEq;
  Value value;
  Value upper;  // only for kBetween

  bool matches(const Value &v) const;
  std::string to_string() const;

  friend bool operator==(const Predicate &, const Predicate &) = default;
};

bool matches_all(const Record &record, std::span<const Predicate> predicates);

struct Column {
  std::string name;
  DataType type = DataType::kText;
};

// A keyed local table. Rows are held in key order.
class Relation {
 public:
  Relation(std::string name, std::string key, std::vector<Column> schema);

  const std::string &name() const { return name_; }
  const std::string &key() const { return key_; }
  const std::vector<Column> &schema() const { return schema_; }
  std::size_t size() const { return rows_.size(); }
  const std::map<Value, Record> &rows() const { return rows_; }
  std::vector<Record> tuples() const;

  // Exact schema spelling of `attribute` (case-insensitive lookup).
  std::optional<std::string> resolve(std::string_view attribute) const;
  std::optional<DataType> type_of(std::string_view attribute) const;

  // Throws ArgumentError on a schema mismatch, null key or duplicate key.
  void insert(Record record);
  bool erase(const Value &key);
  const Record *find(const Value &key) const;

 private:
  std::string name_;
  std::string key_;
  std::vector<Column> schema_;
  std::map<Value, Record> rows_;
};

// CSV: the header row defines the schema as name[:type] cells, the first
// column is the key. Cells "", "-" and "—" load as null.
Relation load_relation_csv(std::string_view text, std::string name);
// JSON: {name, key, schema: [{name, type}...], rows: [{attr: value}...]}.
Relation load_relation_json(std::string_view text);
// Dispatches on the file extension (.csv or .json).
Relation load_relation_file(const std::string &path);
// Writes the CSV form read by load_relation_csv (nulls as empty cells).
std::string relation_csv(const Relation &relation);

struct Selection {
  std::vector<Record> records;
  std::size_t tuples_scanned = 0;
};

// Applies every predicate; throws UnknownAttributeError for attributes
// outside the relation's schema.
Selection execute_selection(const Relation &target, std::span<const Predicate> predicates);

struct ViewDefinition {
  std::string name;
  std::vector<std::string> attributes;
  std::vector<std::string> bases;
  std::string join_key = "booking_id";

  static ViewDefinition from_json(const nlohmann::ordered_json &doc);
  nlohmann::ordered_json to_json() const;
};

struct Delta {
  std::string relation;
  std::vector<Record> inserted;
  std::vector<Record> deleted;
};

// Deletes then inserts the delta's records into `relation`.
void apply_to_relation(Relation &relation, const Delta &delta);

using RelationRefs = std::vector<const Relation *>;

// Precomputed projection of the key join of its base relations, indexed by
// join key value.
class MaterializedView {
 public:
  const ViewDefinition &definition() const { return def_; }
  const std::string &name() const { return def_.name; }
  const std::vector<std::string> &attribute_list() const { return def_.attributes; }
  const std::vector<std::string> &base_relations() const { return def_.bases; }
  const std::string &join_key() const { return def_.join_key; }

  std::size_t size() const { return rows_.size(); }
  const std::map<Value, Record> &rows() const { return rows_; }
  std::vector<Record> data() const;

  bool covers(std::string_view attribute) const;
  std::optional<std::string> resolve(std::string_view attribute) const;

 private:
  friend MaterializedView build_view(const ViewDefinition &, const RelationRefs &);
  friend MaterializedView apply_delta(MaterializedView, const std::vector<Delta> &,
                                      const RelationRefs &);

  ViewDefinition def_;
  std::map<Value, Record> rows_;
};

// π_attributes(R1 ⋈ ... ⋈ Rn) on the join key. Shared non-key attributes
// must agree for a row to join.
MaterializedView build_view(const ViewDefinition &def, const RelationRefs &bases);
MaterializedView build_view(const ViewDefinition &def, std::span<const Relation> bases);

// Incremental maintenance: only the join-key values touched by `deltas`
// are recomputed, probing `bases_after` (the bases with deltas applied).
MaterializedView apply_delta(MaterializedView view, const std::vector<Delta> &deltas,
                             const RelationRefs &bases_after);
MaterializedView apply_delta(MaterializedView view, const std::vector<Delta> &deltas,
                             std::span<const Relation> bases_after);

Selection execute_selection(const MaterializedView &target,
                            std::span<const Predicate> predicates);

// One simulated hidden-web source: its relations and materialized views.
// Reads may run concurrently; writes take the store's exclusive lock.
class SourceStore {
 public:
  explicit SourceStore(std::string id);

  const std::string &id() const { return id_; }

  void add_relation(Relation relation);
  void add_view(const ViewDefinition &def);
  // Applies the deltas to the base relations and maintains every affected
  // view incrementally.
  void apply(const std::vector<Delta> &deltas);

  const Relation *relation(std::string_view name) const;
  const MaterializedView *view(std::string_view name) const;
  const std::map<std::string, Relation> &relations() const { return relations_; }
  const std::map<std::string, MaterializedView> &views() const { return views_; }

  std::shared_mutex &mutex() const { return *mutex_; }

  // Loads every *.csv / *.json relation in `dir` plus view definitions from
  // `dir`/views.json (a JSON array), when present.
  static SourceStore load_directory(const std::string &dir);

 private:
  std::string id_;
  std::map<std::string, Relation> relations_;
  std::map<std::string, MaterializedView> views_;
  std::unique_ptr<std::shared_mutex> mutex_;
};

}  // namespace qii
