#include "qii/query_engine.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <future>
#include <mutex>
#include <set>

#include "qii/error.h"
#include "qii/text.h"

namespace qii {

using nlohmann::ordered_json;

std::vector<std::string> GlobalQuery::attributes() const {
  std::vector<std::string> out;
  for (const auto &p : predicates) out.push_back(p.attribute);
  return out;
}

namespace {

struct Term {
  std::string attribute;
  std::string op;
  std::string value;
  bool quoted_value = false;
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

class QueryLexer {
 public:
  explicit QueryLexer(std::string_view text) : text_(text) {}

  std::vector<Term> terms() {
    std::vector<Term> out;
    while (true) {
      while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
      if (pos_ >= text_.size()) break;
      Term t;
      bool quoted = false;
      t.attribute = word("=<>", quoted);
      if (t.attribute.empty()) fail("expected an attribute name");
      if (pos_ >= text_.size() || is_space(text_[pos_])) {
        fail("expected '=', '<=' or '>=' after '" + t.attribute + "'");
      }
      if (text_[pos_] == '=') {
        t.op = "=";
        ++pos_;
      } else if (text_.substr(pos_, 2) == "<=" || text_.substr(pos_, 2) == ">=") {
        t.op = std::string(text_.substr(pos_, 2));
        pos_ += 2;
      } else {
        fail("unsupported comparator after '" + t.attribute + "'");
      }
      t.value = word("", t.quoted_value);
      if (t.value.empty() && !t.quoted_value) fail("missing value for '" + t.attribute + "'");
      out.push_back(std::move(t));
    }
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string &msg) const {
    throw SyntaxError(msg + " at offset " + std::to_string(pos_));
  }

  // Reads up to whitespace or one of `stops`; quoted spans are literal.
  std::string word(std::string_view stops, bool &quoted) {
    std::string out;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '"' || c == '\'') {
        auto close = text_.find(c, pos_ + 1);
        if (close == std::string_view::npos) fail("unterminated quote");
        out.append(text_.substr(pos_ + 1, close - pos_ - 1));
        pos_ = close + 1;
        quoted = true;
        continue;
      }
      if (is_space(c) || stops.find(c) != std::string_view::npos) break;
      out.push_back(c);
      ++pos_;
    }
    return out;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

const FieldNode &resolve_leaf(const UnifiedInterface &unified, std::string_view name) {
  if (const auto *f = find_field(unified.tree, name)) return *f;
  const FieldNode *match = nullptr;
  for (const auto &f : flatten_fields(unified.tree)) {
    if (compact_key(f.name) == compact_key(name)) {
      if (match) throw SyntaxError("ambiguous attribute '" + std::string(name) + "'");
      match = find_field(unified.tree, f.name);
    }
  }
  if (!match) throw SyntaxError("unknown attribute '" + std::string(name) + "'");
  return *match;
}

Value typed_literal(const FieldNode &leaf, std::string_view raw) {
  auto v = coerce(raw, leaf.type, leaf.allowed_values);
  if (!v) {
    throw SyntaxError("value '" + std::string(raw) + "' is not a valid " +
                      std::string(datatype_name(leaf.type)) + " for '" + leaf.name + "'");
  }
  return *v;
}

std::string fnv_id(const std::string &text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "q%08llx", static_cast<unsigned long long>(h & 0xffffffffULL));
  return buf;
}

GlobalQuery build_query(const std::vector<Term> &terms, const UnifiedInterface &unified) {
  if (terms.empty()) throw SyntaxError("empty query");
  GlobalQuery q;
  q.domain = unified.tree.domain;
  std::set<std::string> seen;
  for (const auto &t : terms) {
    const auto &leaf = resolve_leaf(unified, t.attribute);
    if (!seen.insert(name_key(leaf.name)).second) {
      throw SyntaxError("attribute '" + leaf.name + "' appears more than once");
    }
    Predicate p;
    p.attribute = leaf.name;
    auto range = t.quoted_value ? std::string::npos : t.value.find("..");
    if (t.op == "=" && range != std::string::npos) {
      p.op = Predicate::Op::kBetween;
      p.value = typed_literal(leaf, t.value.substr(0, range));
      p.upper = typed_literal(leaf, t.value.substr(range + 2));
      if (p.upper < p.value) {
        throw SyntaxError("empty range " + t.value + " for '" + leaf.name + "'");
      }
    } else {
      p.op = t.op == "=" ? Predicate::Op::kEq
                         : (t.op == "<=" ? Predicate::Op::kLe : Predicate::Op::kGe);
      p.value = typed_literal(leaf, t.value);
    }
    q.predicates.push_back(std::move(p));
  }
  q.keyword_count = q.predicates.size();
  q.id = fnv_id(query_text(q));
  return q;
}

}  // namespace

GlobalQuery parse_query(std::string_view text, const UnifiedInterface &unified) {
  return build_query(QueryLexer(text).terms(), unified);
}

GlobalQuery parse_query(const std::vector<std::pair<std::string, std::string>> &terms,
                        const UnifiedInterface &unified) {
  std::vector<Term> out;
  for (const auto &[attr, value] : terms) out.push_back({attr, "=", value, false});
  return build_query(out, unified);
}

std::string query_text(const GlobalQuery &query) {
  std::vector<std::string> parts;
  for (const auto &p : query.predicates) {
    auto s = p.to_string();
    if (p.attribute.find(' ') != std::string::npos) s = "\"" + p.attribute + "\"" + s.substr(p.attribute.size());
    parts.push_back(s);
  }
  return join(parts, " ");
}

namespace {

std::string_view comparison_text(Comparison c) {
  switch (c) {
    case Comparison::kLt: return "<";
    case Comparison::kLe: return "<=";
    case Comparison::kEq: return "=";
    case Comparison::kGe: return ">=";
    case Comparison::kGt: return ">";
  }
  return "=";
}

}  // namespace

IntegrityConstraint parse_constraint(std::string_view text, const UnifiedInterface &unified) {
  static const std::pair<std::string_view, Comparison> kOps[] = {
      {"<=", Comparison::kLe}, {">=", Comparison::kGe}, {"<", Comparison::kLt},
      {">", Comparison::kGt},  {"=", Comparison::kEq}};
  for (const auto &[sym, op] : kOps) {
    auto pos = text.find(sym);
    if (pos == std::string_view::npos) continue;
    IntegrityConstraint c;
    c.op = op;
    auto lhs = trim(text.substr(0, pos));
    auto rhs = trim(text.substr(pos + sym.size()));
    const auto *leaf = find_field(unified.tree, lhs);
    if (!leaf) throw ConfigError("constraint names unknown attribute '" + std::string(lhs) + "'");
    c.attribute = leaf->name;
    if (const auto *other = find_field(unified.tree, rhs)) {
      c.other_attribute = other->name;
    } else {
      auto v = coerce(rhs, leaf->type, leaf->allowed_values);
      if (!v) throw ConfigError("constraint literal '" + std::string(rhs) + "' does not fit '" + c.attribute + "'");
      c.literal = *v;
    }
    c.text = c.attribute + " " + std::string(comparison_text(op)) + " " +
             (c.literal ? c.literal->str() : c.other_attribute);
    return c;
  }
  throw ConfigError("constraint '" + std::string(text) + "' has no comparator");
}

void Catalog::add_source(SourceEntry entry) {
  if (source(entry.id)) throw ConfigError("duplicate source id '" + entry.id + "'");
  sources.push_back(std::move(entry));
}

const SourceEntry *Catalog::source(std::string_view id) const {
  for (const auto &s : sources) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

std::vector<RelationInfo> relation_inventory(const SourceStore &store) {
  std::vector<RelationInfo> out;
  for (const auto &[name, r] : store.relations()) {
    RelationInfo info{name, {}, r.size()};
    for (const auto &c : r.schema()) info.attributes.push_back(c.name);
    out.push_back(std::move(info));
  }
  return out;
}

std::vector<const MaterializedView *> view_list(const SourceStore &store) {
  std::vector<const MaterializedView *> out;
  for (const auto &[name, v] : store.views()) out.push_back(&v);
  return out;
}

Catalog Catalog::build(const UnifiedInterface &unified,
                       const std::map<std::string, SourceStore> &stores,
                       const ordered_json &config) {
  Catalog cat;
  try {
    cat.join_key = config.value("join_key", std::string("booking_id"));
    if (auto it = config.find("privileges"); it != config.end()) {
      std::map<std::string, std::vector<std::string>> privileges;
      for (const auto &[user, attrs] : it->items()) {
        privileges[user] = attrs.get<std::vector<std::string>>();
      }
      cat.privileges = std::move(privileges);
    }
    if (auto it = config.find("constraints"); it != config.end()) {
      for (const auto &c : *it) cat.constraints.push_back(parse_constraint(c.get<std::string>(), unified));
    }
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("catalog: ") + e.what());
  }
  for (const auto &id : unified.sources) {
    SourceEntry entry{id, unified.mappings_for(id), {}};
    if (auto it = stores.find(id); it != stores.end()) entry.relations = relation_inventory(it->second);
    cat.add_source(std::move(entry));
  }
  return cat;
}

namespace {

struct Bounds {
  std::optional<Value> lo;
  std::optional<Value> hi;
};

Bounds bounds_of(const Predicate &p) {
  switch (p.op) {
    case Predicate::Op::kEq: return {p.value, p.value};
    case Predicate::Op::kLe: return {std::nullopt, p.value};
    case Predicate::Op::kGe: return {p.value, std::nullopt};
    case Predicate::Op::kBetween: return {p.value, p.upper};
  }
  return {};
}

bool comparable(const std::optional<Value> &a, const std::optional<Value> &b) {
  return a && b && a->storage().index() == b->storage().index();
}

// True when some a in `left` and b in `right` satisfy `a op b`.
bool satisfiable(const Bounds &left, Comparison op, const Bounds &right) {
  switch (op) {
    case Comparison::kLe: return !comparable(left.lo, right.hi) || *left.lo <= *right.hi;
    case Comparison::kLt: return !comparable(left.lo, right.hi) || *left.lo < *right.hi;
    case Comparison::kGe: return !comparable(left.hi, right.lo) || *left.hi >= *right.lo;
    case Comparison::kGt: return !comparable(left.hi, right.lo) || *left.hi > *right.lo;
    case Comparison::kEq:
      return (!comparable(left.lo, right.hi) || *left.lo <= *right.hi) &&
             (!comparable(left.hi, right.lo) || *left.hi >= *right.lo);
  }
  return true;
}

const Predicate *predicate_on(const GlobalQuery &q, std::string_view attribute) {
  for (const auto &p : q.predicates) {
    if (names_equal(p.attribute, attribute)) return &p;
  }
  return nullptr;
}

}  // namespace

GlobalQuery modify_query(const GlobalQuery &query, std::string_view user, const Catalog &catalog) {
  if (catalog.privileges) {
    const std::vector<std::string> *granted = nullptr;
    if (auto it = catalog.privileges->find(std::string(user)); it != catalog.privileges->end()) {
      granted = &it->second;
    }
    std::vector<std::string> offending;
    for (const auto &p : query.predicates) {
      bool ok = granted && std::any_of(granted->begin(), granted->end(), [&](const auto &a) {
                  return a == "*" || names_equal(a, p.attribute);
                });
      if (!ok) offending.push_back(p.attribute);
    }
    if (!offending.empty()) throw AuthorizationError(offending);
  }
  for (const auto &c : catalog.constraints) {
    const auto *p = predicate_on(query, c.attribute);
    if (!p) continue;
    Bounds right;
    if (c.literal) {
      right = {c.literal, c.literal};
    } else {
      const auto *other = predicate_on(query, c.other_attribute);
      if (!other) continue;
      right = bounds_of(*other);
    }
    if (!satisfiable(bounds_of(*p), c.op, right)) throw IntegrityError(c.text);
  }
  return query;
}

std::string QueryPlan::describe() const {
  if (path == Path::kView) {
    return "view " + view + " (cost " + std::to_string(estimated_cost) + ")";
  }
  return "base_join " + join(relations, "+") + " (cost " + std::to_string(estimated_cost) + ")";
}

QueryPlan plan_access(const std::vector<std::string> &attributes,
                      const std::vector<const MaterializedView *> &views,
                      const std::vector<RelationInfo> &relations) {
  QueryPlan plan;
  const MaterializedView *best = nullptr;
  for (const auto *v : views) {
    bool covers = std::all_of(attributes.begin(), attributes.end(),
                              [&](const auto &a) { return v->covers(a); });
    if (!covers) continue;
    if (!best || v->size() < best->size() ||
        (v->size() == best->size() && v->name() < best->name())) {
      best = v;
    }
  }
  if (best) {
    plan.path = QueryPlan::Path::kView;
    plan.view = best->name();
    plan.estimated_cost = best->size();
    return plan;
  }

  auto has = [](const RelationInfo &r, std::string_view a) {
    return std::any_of(r.attributes.begin(), r.attributes.end(),
                       [&](const auto &x) { return names_equal(x, a); });
  };
  for (const auto &a : attributes) {
    if (std::none_of(relations.begin(), relations.end(), [&](const auto &r) { return has(r, a); })) {
      throw PlanningError("no view or relation provides '" + a + "'");
    }
  }
  if (relations.size() > 20) throw PlanningError("too many relations to plan exhaustively");
  // Exhaustive minimal cover: fewest relations, then fewest tuples, then names.
  std::optional<std::tuple<std::size_t, std::size_t, std::vector<std::string>>> chosen;
  for (std::uint32_t mask = 1; mask < (1u << relations.size()); ++mask) {
    std::vector<std::string> names;
    std::size_t cost = 0;
    for (std::size_t i = 0; i < relations.size(); ++i) {
      if (mask & (1u << i)) {
        names.push_back(relations[i].name);
        cost += relations[i].cardinality;
      }
    }
    bool covers = std::all_of(attributes.begin(), attributes.end(), [&](const auto &a) {
      for (std::size_t i = 0; i < relations.size(); ++i) {
        if ((mask & (1u << i)) && has(relations[i], a)) return true;
      }
      return false;
    });
    if (!covers) continue;
    auto candidate = std::make_tuple(names.size(), cost, names);
    if (!chosen || candidate < *chosen) chosen = candidate;
  }
  plan.path = QueryPlan::Path::kBaseJoin;
  plan.relations = std::get<2>(*chosen);
  plan.estimated_cost = std::get<1>(*chosen);
  return plan;
}

QueryPlan plan_query(const GlobalQuery &query, const std::vector<const MaterializedView *> &views,
                     const Catalog &catalog, std::string_view source) {
  const auto *entry = catalog.source(source);
  if (!entry) throw PlanningError("unknown source '" + std::string(source) + "'");
  std::vector<std::string> local;
  for (const auto &p : query.predicates) {
    auto it = std::find_if(entry->mappings.begin(), entry->mappings.end(),
                           [&](const auto &m) { return names_equal(m.unified_name, p.attribute); });
    if (it == entry->mappings.end()) {
      throw PlanningError("source '" + entry->id + "' does not map '" + p.attribute + "'");
    }
    local.push_back(it->local_name);
  }
  auto plan = plan_access(local, views, entry->relations);
  plan.sources = {entry->id};
  return plan;
}

Selection execute_plan(const QueryPlan &plan, const SourceStore &store,
                       const std::vector<Predicate> &predicates,
                       const std::vector<std::string> &outputs, const std::string &join_key) {
  Selection out;
  auto project = [&](const Record &row, auto &&resolve) {
    Record r;
    r[join_key] = row.at(*resolve(join_key));
    for (const auto &o : outputs) r[o] = row.at(*resolve(o));
    return r;
  };
  if (plan.path == QueryPlan::Path::kView) {
    const auto *view = store.view(plan.view);
    if (!view) throw PlanningError("store '" + store.id() + "' has no view '" + plan.view + "'");
    for (const auto &o : outputs) {
      if (!view->covers(o)) throw PlanningError("view '" + plan.view + "' lacks '" + o + "'");
    }
    auto sel = execute_selection(*view, predicates);
    out.tuples_scanned = sel.tuples_scanned;
    for (const auto &row : sel.records) {
      out.records.push_back(project(row, [&](std::string_view a) { return view->resolve(a); }));
    }
    return out;
  }

  RelationRefs bases;
  for (const auto &name : plan.relations) {
    const auto *r = store.relation(name);
    if (!r) throw PlanningError("store '" + store.id() + "' has no relation '" + name + "'");
    if (!names_equal(r->key(), join_key)) {
      throw PlanningError("relation '" + name + "' is not keyed by '" + join_key + "'");
    }
    bases.push_back(r);
    out.tuples_scanned += r->size();
  }
  if (bases.empty()) throw PlanningError("base_join plan without relations");
  // Attribute name → (base index, exact spelling), first provider wins.
  auto locate = [&](std::string_view a) -> std::optional<std::string> {
    for (const auto *r : bases) {
      if (auto n = r->resolve(a)) return n;
    }
    return std::nullopt;
  };
  std::vector<Predicate> resolved;
  for (const auto &p : predicates) {
    auto n = locate(p.attribute);
    if (!n) throw UnknownAttributeError(p.attribute);
    Predicate q = p;
    q.attribute = *n;
    resolved.push_back(std::move(q));
  }
  for (const auto &o : outputs) {
    if (!locate(o)) throw UnknownAttributeError(o);
  }
  for (const auto &[key, first] : bases.front()->rows()) {
    Record merged = first;
    bool joined = true;
    for (std::size_t i = 1; i < bases.size() && joined; ++i) {
      const Record *row = bases[i]->find(key);
      if (!row) {
        joined = false;
        break;
      }
      for (const auto &[attr, value] : *row) {
        auto [it, fresh] = merged.emplace(attr, value);
        if (!fresh && attr != bases[i]->key() &&
            (value.is_null() || it->second.is_null() || !(it->second == value))) {
          joined = false;
        }
      }
    }
    if (joined && matches_all(merged, resolved)) {
      out.records.push_back(project(merged, locate));
    }
  }
  return out;
}

std::vector<LocalQuery> generate_local_queries(const GlobalQuery &query,
                                               const UnifiedInterface &unified,
                                               const DeferredAttributes &deferred) {
  auto now = std::chrono::system_clock::now().time_since_epoch();
  auto stamp = std::to_string(std::chrono::duration_cast<std::chrono::milliseconds>(now).count());
  std::vector<LocalQuery> out;
  for (const auto &source : unified.sources) {
    LocalQuery lq;
    lq.destination = source;
    lq.metadata["query_id"] = query.id;
    lq.metadata["timestamp"] = stamp;
    std::vector<std::string> unpushed;
    bool covers_any = false;
    for (const auto &p : query.predicates) {
      auto local = unified.local_name(source, p.attribute);
      if (!local) {
        unpushed.push_back(p.attribute);
        lq.residual.push_back(p);
        continue;
      }
      covers_any = true;
      lq.outputs.push_back(*local);
      bool is_deferred = std::any_of(deferred.begin(), deferred.end(), [&](const auto &d) {
        return d.first == source && names_equal(d.second, *local);
      });
      if (is_deferred) {
        unpushed.push_back(p.attribute);
        lq.residual.push_back(p);
        continue;
      }
      Predicate lp = p;
      lp.attribute = *local;
      lq.predicates.push_back(std::move(lp));
    }
    if (!covers_any) continue;
    if (!unpushed.empty()) lq.metadata["unpushed"] = join(unpushed, ",");
    out.push_back(std::move(lq));
  }
  if (out.empty()) {
    throw DispatchError("no source covers any attribute of query " + query_text(query));
  }
  return out;
}

DispatchResult dispatch(const std::vector<LocalQuery> &queries,
                        const std::map<std::string, SourceStore> &stores,
                        const DispatchOptions &options) {
  std::map<std::string, std::vector<const LocalQuery *>> by_destination;
  for (const auto &q : queries) by_destination[q.destination].push_back(&q);

  struct Outcome {
    std::vector<Record> records;
    std::vector<std::string> log;
    std::optional<std::string> error;
    std::optional<QueryPlan> plan;
    std::size_t scanned = 0;
  };

  auto run = [&](const std::string &destination, std::vector<const LocalQuery *> lqs) {
    Outcome o;
    std::stable_sort(lqs.begin(), lqs.end(), [](const LocalQuery *a, const LocalQuery *b) {
      return a->priority > b->priority;
    });
    auto it = stores.find(destination);
    for (const auto *lq : lqs) {
      auto id = lq->metadata.count("query_id") ? lq->metadata.at("query_id") : std::string("-");
      o.log.push_back(id + "\t" + destination + "\t" + std::to_string(lq->priority) + "\t" +
                      std::to_string(lq->predicates.size()));
    }
    if (it == stores.end()) {
      o.error = "no store for destination '" + destination + "'";
      return o;
    }
    const auto &store = it->second;
    std::shared_lock lock(store.mutex());
    try {
      for (const auto *lq : lqs) {
        std::vector<std::string> needed = lq->outputs;
        for (const auto &p : lq->predicates) needed.push_back(p.attribute);
        auto plan = plan_access(needed, options.use_views ? view_list(store)
                                                          : std::vector<const MaterializedView *>{},
                                relation_inventory(store));
        plan.sources = {destination};
        auto sel = execute_plan(plan, store, lq->predicates, lq->outputs, options.join_key);
        o.scanned += sel.tuples_scanned;
        for (auto &r : sel.records) o.records.push_back(std::move(r));
        o.plan = plan;
      }
    } catch (const Error &e) {
      o.error = e.what();
    }
    std::stable_sort(o.records.begin(), o.records.end(), [&](const Record &a, const Record &b) {
      return a.at(options.join_key) < b.at(options.join_key);
    });
    return o;
  };

  std::vector<std::pair<std::string, std::future<Outcome>>> pending;
  for (auto &[destination, lqs] : by_destination) {
    pending.emplace_back(destination, std::async(std::launch::async, run, destination, lqs));
  }
  DispatchResult result;
  for (auto &[destination, fut] : pending) {
    auto o = fut.get();
    result.log.insert(result.log.end(), o.log.begin(), o.log.end());
    result.tuples_scanned += o.scanned;
    if (o.plan) result.plans.emplace(destination, *o.plan);
    if (o.error) {
      result.manifest.push_back({destination, *o.error, std::nullopt});
      if (o.records.empty()) continue;
    }
    result.results[destination] = std::move(o.records);
  }
  return result;
}

}  // namespace qii
