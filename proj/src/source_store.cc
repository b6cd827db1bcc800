#include "qii/source_store.h"

#include <algorithm>
#include <filesystem>
#include <mutex>
#include <set>

#include "qii/csv.h"
#include "qii/error.h"
#include "qii/text.h"

namespace qii {

using nlohmann::ordered_json;

namespace {

bool same_kind(const Value &a, const Value &b) {
  return a.storage().index() == b.storage().index();
}

bool kind_fits(const Value &v, DataType type) {
  if (v.is_null()) return true;
  switch (type) {
    case DataType::kInteger: return v.is_int();
    case DataType::kBoolean: return v.is_bool();
    default: return v.is_string();
  }
}

}  // namespace

bool Predicate::matches(const Value &v) const {
  if (v.is_null() || !same_kind(v, value)) return false;
  switch (op) {
    case Op::kEq: return v == value;
    case Op::kLe: return v <= value;
    case Op::kGe: return v >= value;
    case Op::kBetween: return same_kind(v, upper) && value <= v && v <= upper;
  }
  return false;
}

std::string Predicate::to_string() const {
  switch (op) {
    case Op::kEq: return attribute + "=" + value.str();
    case Op::kLe: return attribute + "<=" + value.str();
    case Op::kGe: return attribute + ">=" + value.str();
    case Op::kBetween: return attribute + "=" + value.str() + ".." + upper.str();
  }
  return attribute;
}

bool matches_all(const Record &record, std::span<const Predicate> predicates) {
  for (const auto &p : predicates) {
    auto it = record.find(p.attribute);
    if (it == record.end() || !p.matches(it->second)) return false;
  }
  return true;
}

Relation::Relation(std::string name, std::string key, std::vector<Column> schema)
    : name_(std::move(name)), key_(std::move(key)), schema_(std::move(schema)) {
  std::set<std::string> seen;
  for (const auto &c : schema_) {
    if (c.name.empty()) throw SchemaError("relation '" + name_ + "' has an unnamed column");
    if (!seen.insert(name_key(c.name)).second) {
      throw SchemaError("relation '" + name_ + "' repeats column '" + c.name + "'", c.name);
    }
  }
  auto resolved = resolve(key_);
  if (!resolved) {
    throw SchemaError("relation '" + name_ + "' has no key column '" + key_ + "'", key_);
  }
  key_ = *resolved;
}

std::vector<Record> Relation::tuples() const {
  std::vector<Record> out;
  out.reserve(rows_.size());
  for (const auto &[k, r] : rows_) out.push_back(r);
  return out;
}

std::optional<std::string> Relation::resolve(std::string_view attribute) const {
  for (const auto &c : schema_) {
    if (names_equal(c.name, attribute)) return c.name;
  }
  return std::nullopt;
}

std::optional<DataType> Relation::type_of(std::string_view attribute) const {
  for (const auto &c : schema_) {
    if (names_equal(c.name, attribute)) return c.type;
  }
  return std::nullopt;
}

void Relation::insert(Record record) {
  if (record.size() != schema_.size()) {
    throw ArgumentError("record " + record_to_string(record) + " does not match schema of '" +
                        name_ + "'");
  }
  for (const auto &c : schema_) {
    auto it = record.find(c.name);
    if (it == record.end()) {
      throw ArgumentError("record lacks attribute '" + c.name + "' of '" + name_ + "'");
    }
    if (!kind_fits(it->second, c.type)) {
      throw ArgumentError("value '" + it->second.str() + "' is not " +
                          std::string(datatype_name(c.type)) + " for '" + c.name + "'");
    }
  }
  Value key = record.at(key_);
  if (key.is_null()) throw ArgumentError("null key in relation '" + name_ + "'");
  if (rows_.count(key)) {
    throw ArgumentError("duplicate key " + key.str() + " in relation '" + name_ + "'");
  }
  rows_.emplace(std::move(key), std::move(record));
}

bool Relation::erase(const Value &key) { return rows_.erase(key) > 0; }

const Record *Relation::find(const Value &key) const {
  auto it = rows_.find(key);
  return it == rows_.end() ? nullptr : &it->second;
}

namespace {

Column parse_column(const std::string &cell) {
  auto colon = cell.rfind(':');
  if (colon == std::string::npos) return {normalize_name(cell), DataType::kText};
  return {normalize_name(cell.substr(0, colon)), parse_datatype(trim(cell.substr(colon + 1)))};
}

Value typed_cell(std::string_view raw, const Column &column, std::size_t row,
                 std::size_t col) {
  if (is_null_token(raw)) return Value();
  auto v = coerce(raw, column.type);
  if (!v) {
    throw LoadError("value '" + std::string(raw) + "' is not " +
                        std::string(datatype_name(column.type)) + " for '" + column.name + "'",
                    row, col);
  }
  return *v;
}

}  // namespace

Relation load_relation_csv(std::string_view text, std::string name) {
  std::vector<CsvRow> rows;
  try {
    rows = parse_csv(text);
  } catch (const ParseError &e) {
    throw LoadError(e.what(), e.line(), e.column());
  }
  if (rows.empty()) throw LoadError("relation '" + name + "' has no header row", 1, 1);
  std::vector<Column> schema;
  for (std::size_t c = 0; c < rows[0].cells.size(); ++c) {
    try {
      schema.push_back(parse_column(rows[0].cells[c]));
    } catch (const ArgumentError &e) {
      throw LoadError(e.what(), rows[0].line, c + 1);
    }
  }
  Relation relation(std::move(name), schema.front().name, schema);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto &row = rows[r];
    if (row.cells.size() != schema.size()) {
      throw LoadError("expected " + std::to_string(schema.size()) + " cells, found " +
                          std::to_string(row.cells.size()),
                      row.line, std::min(row.cells.size(), schema.size()) + 1);
    }
    Record record;
    for (std::size_t c = 0; c < schema.size(); ++c) {
      record[schema[c].name] = typed_cell(row.cells[c], schema[c], row.line, c + 1);
    }
    if (record.at(relation.key()).is_null()) throw LoadError("null key", row.line, 1);
    if (relation.find(record.at(relation.key()))) {
      throw LoadError("duplicate key " + record.at(relation.key()).str(), row.line, 1);
    }
    relation.insert(std::move(record));
  }
  return relation;
}

Relation load_relation_json(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error &e) {
    throw LoadError("malformed relation document", 1, e.byte);
  }
  try {
    std::vector<Column> schema;
    const auto &s = doc.at("schema");
    if (s.is_object()) {
      for (const auto &[n, t] : s.items()) {
        schema.push_back({normalize_name(n), parse_datatype(t.get<std::string>())});
      }
    } else {
      for (const auto &c : s) {
        schema.push_back({normalize_name(c.at("name").get<std::string>()),
                          parse_datatype(c.value("type", std::string("text")))});
      }
    }
    if (schema.empty()) throw LoadError("relation has an empty schema", 1, 1);
    auto key = doc.contains("key") ? doc.at("key").get<std::string>() : schema.front().name;
    Relation relation(doc.at("name").get<std::string>(), key, schema);
    std::size_t r = 0;
    for (const auto &row : doc.value("rows", ordered_json::array())) {
      ++r;
      Record record;
      for (std::size_t c = 0; c < schema.size(); ++c) {
        const auto &col = schema[c];
        ordered_json cell = nullptr;
        if (row.is_array()) {
          if (c < row.size()) cell = row[c];
        } else {
          for (const auto &[n, v] : row.items()) {
            if (names_equal(n, col.name)) cell = v;
          }
        }
        if (cell.is_string()) {
          record[col.name] = typed_cell(cell.get<std::string>(), col, r, c + 1);
        } else {
          auto v = coerce(value_from_json(cell), col.type);
          if (!v) throw LoadError("type mismatch for '" + col.name + "'", r, c + 1);
          record[col.name] = *v;
        }
      }
      if (record.at(relation.key()).is_null()) throw LoadError("null key", r, 1);
      if (relation.find(record.at(relation.key()))) {
        throw LoadError("duplicate key " + record.at(relation.key()).str(), r, 1);
      }
      relation.insert(std::move(record));
    }
    return relation;
  } catch (const nlohmann::json::exception &e) {
    throw LoadError(std::string("relation document: ") + e.what(), 1, 1);
  }
}

Relation load_relation_file(const std::string &path) {
  std::filesystem::path p(path);
  auto text = read_file(path);
  if (p.extension() == ".csv") return load_relation_csv(text, p.stem().string());
  if (p.extension() == ".json") return load_relation_json(text);
  throw ConfigError("unsupported relation file '" + path + "'");
}

std::string relation_csv(const Relation &relation) {
  std::vector<std::string> header;
  for (const auto &c : relation.schema()) {
    header.push_back(c.name + ":" + std::string(datatype_name(c.type)));
  }
  std::string out = csv_line(header) + "\n";
  for (const auto &[key, row] : relation.rows()) {
    std::vector<std::string> cells;
    for (const auto &c : relation.schema()) cells.push_back(row.at(c.name).str());
    out += csv_line(cells) + "\n";
  }
  return out;
}

namespace {

template <typename Resolver>
std::vector<Predicate> resolve_predicates(std::span<const Predicate> predicates,
                                          Resolver &&resolve) {
  std::vector<Predicate> out;
  for (const auto &p : predicates) {
    auto name = resolve(p.attribute);
    if (!name) throw UnknownAttributeError(p.attribute);
    Predicate q = p;
    q.attribute = *name;
    out.push_back(std::move(q));
  }
  return out;
}

template <typename Rows>
Selection select_rows(const Rows &rows, const std::string &key,
                      const std::vector<Predicate> &predicates) {
  Selection s;
  s.tuples_scanned = rows.size();
  auto keyed = std::find_if(predicates.begin(), predicates.end(), [&](const Predicate &p) {
    return p.op == Predicate::Op::kEq && p.attribute == key;
  });
  if (keyed != predicates.end()) {
    auto it = rows.find(keyed->value);
    if (it != rows.end() && matches_all(it->second, predicates)) {
      s.records.push_back(it->second);
    }
    return s;
  }
  for (const auto &[k, r] : rows) {
    if (matches_all(r, predicates)) s.records.push_back(r);
  }
  return s;
}

}  // namespace

Selection execute_selection(const Relation &target, std::span<const Predicate> predicates) {
  auto resolved = resolve_predicates(predicates, [&](std::string_view a) { return target.resolve(a); });
  return select_rows(target.rows(), target.key(), resolved);
}

ViewDefinition ViewDefinition::from_json(const ordered_json &doc) {
  try {
    ViewDefinition def;
    def.name = doc.at("name").get<std::string>();
    def.attributes = doc.at("attributes").get<std::vector<std::string>>();
    def.bases = doc.at("bases").get<std::vector<std::string>>();
    def.join_key = doc.value("join_key", std::string("booking_id"));
    return def;
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("view definition: ") + e.what());
  }
}

ordered_json ViewDefinition::to_json() const {
  return {{"name", name}, {"attributes", attributes}, {"bases", bases}, {"join_key", join_key}};
}

void apply_to_relation(Relation &relation, const Delta &delta) {
  for (const auto &r : delta.deleted) {
    auto it = r.find(relation.key());
    if (it == r.end()) throw ArgumentError("deleted record lacks key '" + relation.key() + "'");
    relation.erase(it->second);
  }
  for (const auto &r : delta.inserted) relation.insert(r);
}

std::vector<Record> MaterializedView::data() const {
  std::vector<Record> out;
  out.reserve(rows_.size());
  for (const auto &[k, r] : rows_) out.push_back(r);
  return out;
}

std::optional<std::string> MaterializedView::resolve(std::string_view attribute) const {
  if (names_equal(attribute, def_.join_key)) return def_.join_key;
  for (const auto &a : def_.attributes) {
    if (names_equal(a, attribute)) return a;
  }
  return std::nullopt;
}

bool MaterializedView::covers(std::string_view attribute) const {
  return resolve(attribute).has_value();
}

namespace {

// Bases in definition order, validated against the definition.
RelationRefs ordered_bases(const ViewDefinition &def, const RelationRefs &bases) {
  if (def.bases.empty()) throw ArgumentError("view '" + def.name + "' has no base relations");
  RelationRefs out;
  for (const auto &name : def.bases) {
    auto it = std::find_if(bases.begin(), bases.end(),
                           [&](const Relation *r) { return names_equal(r->name(), name); });
    if (it == bases.end()) {
      throw ArgumentError("base relation '" + name + "' of view '" + def.name +
                          "' was not supplied");
    }
    const Relation *r = *it;
    if (!r->resolve(def.join_key)) {
      throw SchemaError("base relation '" + r->name() + "' is missing join key '" +
                            def.join_key + "'",
                        def.join_key);
    }
    if (!names_equal(r->key(), def.join_key)) {
      throw SchemaError("join key '" + def.join_key + "' is not the key of '" + r->name() + "'",
                        def.join_key);
    }
    out.push_back(r);
  }
  for (const auto &a : def.attributes) {
    bool known = names_equal(a, def.join_key) ||
                 std::any_of(out.begin(), out.end(),
                             [&](const Relation *r) { return r->resolve(a).has_value(); });
    if (!known) {
      throw SchemaError("view attribute '" + a + "' is in no base of '" + def.name + "'", a);
    }
  }
  return out;
}

std::optional<Record> join_row(const ViewDefinition &def, const RelationRefs &bases,
                               const Value &key) {
  std::map<std::string, Value> merged;  // name_key → value
  for (const Relation *r : bases) {
    const Record *row = r->find(key);
    if (!row) return std::nullopt;
    for (const auto &[attr, value] : *row) {
      auto [it, fresh] = merged.emplace(name_key(attr), value);
      if (!fresh && !names_equal(attr, def.join_key)) {
        if (it->second.is_null() || value.is_null() || !(it->second == value)) {
          return std::nullopt;
        }
      }
    }
  }
  Record out;
  out[def.join_key] = key;
  for (const auto &a : def.attributes) out[a] = merged.at(name_key(a));
  return out;
}

}  // namespace

MaterializedView build_view(const ViewDefinition &def, const RelationRefs &bases) {
  auto ordered = ordered_bases(def, bases);
  MaterializedView view;
  view.def_ = def;
  const Relation *smallest = *std::min_element(
      ordered.begin(), ordered.end(),
      [](const Relation *a, const Relation *b) { return a->size() < b->size(); });
  for (const auto &[key, row] : smallest->rows()) {
    if (auto joined = join_row(def, ordered, key)) view.rows_.emplace(key, std::move(*joined));
  }
  return view;
}

MaterializedView build_view(const ViewDefinition &def, std::span<const Relation> bases) {
  RelationRefs refs;
  for (const auto &r : bases) refs.push_back(&r);
  return build_view(def, refs);
}

MaterializedView apply_delta(MaterializedView view, const std::vector<Delta> &deltas,
                             const RelationRefs &bases_after) {
  const auto &def = view.def_;
  auto ordered = ordered_bases(def, bases_after);
  auto key_of = [&](const Delta &d, const Record &r) {
    auto it = std::find_if(r.begin(), r.end(),
                           [&](const auto &kv) { return names_equal(kv.first, def.join_key); });
    if (it == r.end()) {
      throw ArgumentError("delta record for '" + d.relation + "' lacks join key");
    }
    return it->second;
  };
  for (const auto &d : deltas) {
    bool is_base = std::any_of(def.bases.begin(), def.bases.end(),
                               [&](const auto &b) { return names_equal(b, d.relation); });
    if (!is_base) {
      throw ArgumentError("delta for '" + d.relation + "' which is not a base of view '" +
                          def.name + "'");
    }
    std::set<Value> deleted;
    for (const auto &r : d.deleted) deleted.insert(key_of(d, r));
    for (const auto &r : d.inserted) {
      if (deleted.count(key_of(d, r))) {
        throw ArgumentError("delta for '" + d.relation + "' inserts and deletes key " +
                            key_of(d, r).str());
      }
    }
  }
  // Deletions first so a later re-insert of the same key is not undone.
  for (const auto &d : deltas) {
    for (const auto &r : d.deleted) view.rows_.erase(key_of(d, r));
  }
  for (const auto &d : deltas) {
    for (const auto &r : d.inserted) {
      auto key = key_of(d, r);
      if (auto joined = join_row(def, ordered, key)) {
        view.rows_.insert_or_assign(key, std::move(*joined));
      } else {
        view.rows_.erase(key);
      }
    }
  }
  return view;
}

MaterializedView apply_delta(MaterializedView view, const std::vector<Delta> &deltas,
                             std::span<const Relation> bases_after) {
  RelationRefs refs;
  for (const auto &r : bases_after) refs.push_back(&r);
  return apply_delta(std::move(view), deltas, refs);
}

Selection execute_selection(const MaterializedView &target,
                            std::span<const Predicate> predicates) {
  auto resolved = resolve_predicates(predicates, [&](std::string_view a) { return target.resolve(a); });
  return select_rows(target.rows(), target.join_key(), resolved);
}

SourceStore::SourceStore(std::string id)
    : id_(std::move(id)), mutex_(std::make_unique<std::shared_mutex>()) {}

void SourceStore::add_relation(Relation relation) {
  std::unique_lock lock(*mutex_);
  auto name = relation.name();
  relations_.insert_or_assign(name, std::move(relation));
}

void SourceStore::add_view(const ViewDefinition &def) {
  std::unique_lock lock(*mutex_);
  RelationRefs refs;
  for (const auto &[n, r] : relations_) refs.push_back(&r);
  views_.insert_or_assign(def.name, build_view(def, refs));
}

void SourceStore::apply(const std::vector<Delta> &deltas) {
  std::unique_lock lock(*mutex_);
  for (const auto &d : deltas) {
    auto it = std::find_if(relations_.begin(), relations_.end(),
                           [&](const auto &kv) { return names_equal(kv.first, d.relation); });
    if (it == relations_.end()) {
      throw ArgumentError("store '" + id_ + "' has no relation '" + d.relation + "'");
    }
    apply_to_relation(it->second, d);
  }
  RelationRefs refs;
  for (const auto &[n, r] : relations_) refs.push_back(&r);
  for (auto &[name, view] : views_) {
    std::vector<Delta> relevant;
    for (const auto &d : deltas) {
      const auto &bases = view.base_relations();
      if (std::any_of(bases.begin(), bases.end(),
                      [&](const auto &b) { return names_equal(b, d.relation); })) {
        relevant.push_back(d);
      }
    }
    if (!relevant.empty()) view = apply_delta(std::move(view), relevant, refs);
  }
}

const Relation *SourceStore::relation(std::string_view name) const {
  for (const auto &[n, r] : relations_) {
    if (names_equal(n, name)) return &r;
  }
  return nullptr;
}

const MaterializedView *SourceStore::view(std::string_view name) const {
  for (const auto &[n, v] : views_) {
    if (names_equal(n, name)) return &v;
  }
  return nullptr;
}

SourceStore SourceStore::load_directory(const std::string &dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ConfigError("source directory '" + dir + "' not found");
  SourceStore store(fs::path(dir).filename().string());
  std::vector<fs::path> files;
  for (const auto &entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  fs::path views_file;
  for (const auto &f : files) {
    if (f.filename() == "views.json") {
      views_file = f;
    } else if (f.extension() == ".csv" || f.extension() == ".json") {
      store.add_relation(load_relation_file(f.string()));
    }
  }
  if (!views_file.empty()) {
    ordered_json defs;
    try {
      defs = ordered_json::parse(read_file(views_file.string()));
    } catch (const nlohmann::json::exception &e) {
      throw ConfigError("views file '" + views_file.string() + "': " + e.what());
    }
    for (const auto &d : defs) store.add_view(ViewDefinition::from_json(d));
  }
  return store;
}

}  // namespace qii
