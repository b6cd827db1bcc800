#include "support.h"

#include <algorithm>
#include <functional>
#include <stdexcept>

#include "qii/text.h"

namespace qii::testing {

std::string data_dir() { return QII_DATA_DIR; }

FieldNode field(std::string name, DataType type, std::vector<std::string> allowed) {
  FieldNode f;
  f.label = name;
  f.name = std::move(name);
  f.type = type;
  f.allowed_values = std::move(allowed);
  return f;
}

GroupNode group(std::string name, std::vector<Node> children, std::vector<std::string> aliases) {
  GroupNode g;
  g.name = std::move(name);
  g.children = std::move(children);
  g.aliases = std::move(aliases);
  return g;
}

InterfaceTree tree(std::string form, DomainId domain, std::vector<Node> children) {
  InterfaceTree t;
  t.form_name = std::move(form);
  t.domain = std::move(domain);
  t.children = std::move(children);
  renumber(t.children);
  return t;
}

InterfaceTree airline_tree(std::string form) {
  const std::vector<std::string> yes_no{"Yes", "No"};
  return tree(std::move(form), {2, "Airline"},
              {group("Passenger", {field("Adults", DataType::kInteger),
                                   field("Children", DataType::kInteger),
                                   field("Infant", DataType::kInteger)}),
               group("Option",
                     {field("From"), field("To"), field("One way", DataType::kBoolean),
                      field("Round trip", DataType::kBoolean),
                      field("Multicity", DataType::kBoolean),
                      field("Package", DataType::kBoolean),
                      field("Class", DataType::kEnum, {"Economy", "Business", "First"})},
                     {"Place"}),
               group("Status", {field("Leave", DataType::kEnum, yes_no),
                                field("Return", DataType::kEnum, yes_no),
                                field("Leave Date", DataType::kDate),
                                field("Return Date", DataType::kDate)})});
}

SynonymTable airline_synonyms() {
  return SynonymTable::parse(read_file(data_dir() + "/synonyms.json"));
}

// ---------------------------------------------------------------------------
// Predicates

namespace {

int kind_of(const Value &v) {
  if (v.is_bool()) return 1;
  if (v.is_int()) return 2;
  if (v.is_string()) return 3;
  return 0;
}

// -1, 0, 1; only called on equal, non-null kinds.
int compare(const Value &a, const Value &b) {
  if (a.is_bool()) return int(a.as_bool()) - int(b.as_bool());
  if (a.is_int()) return a.as_int() < b.as_int() ? -1 : (a.as_int() > b.as_int() ? 1 : 0);
  int c = a.as_string().compare(b.as_string());
  return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

}  // namespace

bool oracle_match(const Predicate &p, const Value &v) {
  if (v.is_null() || kind_of(v) != kind_of(p.value)) return false;
  switch (p.op) {
    case Predicate::Op::kEq:
      return compare(v, p.value) == 0;
    case Predicate::Op::kLe:
      return compare(v, p.value) <= 0;
    case Predicate::Op::kGe:
      return compare(v, p.value) >= 0;
    case Predicate::Op::kBetween:
      return kind_of(v) == kind_of(p.upper) && compare(v, p.value) >= 0 &&
             compare(v, p.upper) <= 0;
  }
  return false;
}

std::vector<Record> oracle_filter(const std::vector<Record> &rows,
                                  const std::vector<Predicate> &predicates) {
  std::vector<Record> out;
  for (const auto &r : rows) {
    bool ok = true;
    for (const auto &p : predicates) {
      auto it = r.find(p.attribute);
      if (it == r.end() || !oracle_match(p, it->second)) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Join

std::vector<Record> nested_loop_join(const ViewDefinition &def,
                                     const std::vector<const Relation *> &bases) {
  std::vector<std::vector<Record>> tables;
  for (const auto *b : bases) tables.push_back(b->tuples());
  std::vector<Record> out;
  std::vector<const Record *> chosen;

  std::function<void(std::size_t)> descend = [&](std::size_t level) {
    if (level == tables.size()) {
      Record merged;
      for (const auto *r : chosen) {
        for (const auto &[a, v] : *r) merged[a] = v;
      }
      Record row;
      row[def.join_key] = merged[def.join_key];
      for (const auto &a : def.attributes) row[a] = merged[a];
      out.push_back(row);
      return;
    }
    for (const auto &candidate : tables[level]) {
      bool ok = true;
      for (const auto *prev : chosen) {
        for (const auto &[a, v] : candidate) {
          auto it = prev->find(a);
          if (it == prev->end()) continue;
          if (v.is_null() || it->second.is_null() || !(v == it->second)) {
            ok = false;
            break;
          }
        }
        if (!ok) break;
      }
      if (!ok) continue;
      chosen.push_back(&candidate);
      descend(level + 1);
      chosen.pop_back();
    }
  };
  descend(0);
  return out;
}

namespace {

Record random_base_row(std::mt19937_64 &rng, const std::string &relation, std::int64_t key) {
  auto small = [&](int n) {
    return rng() % 12 == 0 ? Value() : Value(static_cast<std::int64_t>(rng() % n));
  };
  auto shared = [&] { return rng() % 12 == 0 ? Value() : Value(rng() % 4 ? "s" : "t"); };
  if (relation == "R1") return {{"booking_id", key}, {"A", small(5)}, {"S", shared()}};
  if (relation == "R2") return {{"booking_id", key}, {"B", small(5)}, {"S", shared()}};
  return {{"booking_id", key}, {"C", small(3)}};
}

}  // namespace

std::vector<Relation> random_bases(std::mt19937_64 &rng, std::size_t max_tuples) {
  std::vector<Relation> out{
      Relation("R1", "booking_id",
               {{"booking_id", DataType::kInteger}, {"A", DataType::kInteger}, {"S", DataType::kText}}),
      Relation("R2", "booking_id",
               {{"booking_id", DataType::kInteger}, {"B", DataType::kInteger}, {"S", DataType::kText}}),
      Relation("R3", "booking_id", {{"booking_id", DataType::kInteger}, {"C", DataType::kInteger}})};
  std::size_t span = max_tuples + max_tuples / 4;
  for (auto &r : out) {
    std::size_t n = rng() % (max_tuples + 1);
    for (std::size_t i = 0; i < n; ++i) {
      auto key = static_cast<std::int64_t>(1 + rng() % span);
      if (!r.find(key)) r.insert(random_base_row(rng, r.name(), key));
    }
  }
  return out;
}

ViewDefinition random_bases_view() {
  ViewDefinition def;
  def.name = "V";
  def.attributes = {"A", "S", "B", "C"};
  def.bases = {"R1", "R2", "R3"};
  return def;
}

std::vector<Delta> random_deltas(std::mt19937_64 &rng, const std::vector<Relation> &bases) {
  std::vector<Delta> out;
  for (const auto &r : bases) {
    if (rng() % 2) continue;
    Delta d;
    d.relation = r.name();
    std::set<std::int64_t> touched;
    auto edits = 1 + rng() % 4;
    auto span = static_cast<std::int64_t>(r.size() + 20);
    for (std::size_t e = 0; e < edits; ++e) {
      if (rng() % 2 && r.size() > 0) {
        auto it = r.rows().begin();
        std::advance(it, rng() % r.size());
        if (touched.insert(it->first.as_int()).second) d.deleted.push_back(it->second);
      } else {
        auto key = static_cast<std::int64_t>(1 + rng() % span);
        if (!r.find(key) && touched.insert(key).second) {
          d.inserted.push_back(random_base_row(rng, r.name(), key));
        }
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

bool same_multiset(std::vector<Record> a, std::vector<Record> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

// ---------------------------------------------------------------------------
// Two-source scenario

namespace {

const std::vector<std::string> kCities{"DEL", "BOM", "BLR", "MAA"};
const std::vector<std::string> kClasses{"Economy", "Business", "First"};
const std::map<std::string, std::string> kCabinCode{
    {"Economy", "Y"}, {"Business", "J"}, {"First", "F"}};

template <typename T>
const T &pick(std::mt19937_64 &rng, const std::vector<T> &pool) {
  return pool[rng() % pool.size()];
}

std::string june(int day) {
  return "2013-06-" + std::string(day < 10 ? "0" : "") + std::to_string(day);
}

Value maybe_null(std::mt19937_64 &rng, Value v) {
  return rng() % 10 == 0 ? Value() : v;
}

}  // namespace

Scenario make_scenario(std::mt19937_64 &rng, std::size_t max_tuples) {
  Scenario s;
  DomainId airline{2, "Airline"};
  auto alpha = tree("alpha", airline,
                    {group("Trip", {field("From"), field("To"),
                                    field("Class", DataType::kEnum, kClasses)}),
                     group("Travel", {field("Adults", DataType::kInteger),
                                      field("Leave Date", DataType::kDate)})});
  auto beta = tree("beta", airline,
                   {group("Route", {field("Origin"), field("Cabin", DataType::kEnum, kClasses)}),
                    group("Extra", {field("Adult", DataType::kInteger),
                                    field("Departure", DataType::kDate),
                                    field("Fare", DataType::kInteger)})});
  SynonymTable syn;
  syn.add("From", {"Origin"});
  syn.add("Class", {"Cabin"});
  syn.add("Adults", {"Adult"});
  syn.add("Leave Date", {"Departure"});
  std::vector<InterfaceTree> trees{alpha, beta};
  s.unified = merge_interfaces(trees, syn);
  s.provides["alpha"] = {"From", "To", "Class", "Adults", "Leave Date"};
  s.provides["beta"] = {"From", "Class", "Adults", "Leave Date", "Fare"};

  s.rules = parse_rules(R"([
    {"source": "alpha", "attribute": "Leave Date", "kind": "date_format", "params": {"pattern": "D/M/YYYY"}},
    {"source": "beta", "attribute": "Cabin", "kind": "encode", "params": {"map": {"Y": "Economy", "J": "Business", "F": "First"}}},
    {"source": "beta", "attribute": "Fare", "kind": "scale", "params": {"factor": "1/100"}}
  ])");

  Relation a1("A1", "booking_id",
              {{"booking_id", DataType::kInteger}, {"From", DataType::kText},
               {"To", DataType::kText}, {"Class", DataType::kEnum}});
  Relation a2("A2", "booking_id",
              {{"booking_id", DataType::kInteger}, {"Adults", DataType::kInteger},
               {"Leave Date", DataType::kText}});
  Relation f("F", "booking_id",
             {{"booking_id", DataType::kInteger}, {"Origin", DataType::kText},
              {"Cabin", DataType::kText}, {"Adult", DataType::kInteger},
              {"Departure", DataType::kDate}, {"Fare", DataType::kInteger}});

  std::size_t keys = 20 + rng() % (max_tuples / 2 - 19);
  for (std::int64_t k = 1; k <= static_cast<std::int64_t>(keys); ++k) {
    int day = 1 + static_cast<int>(rng() % 10);
    Record t{{"booking_id", k},
             {"From", maybe_null(rng, pick(rng, kCities))},
             {"To", maybe_null(rng, pick(rng, kCities))},
             {"Class", maybe_null(rng, pick(rng, kClasses))},
             {"Adults", maybe_null(rng, static_cast<std::int64_t>(rng() % 5))},
             {"Leave Date", maybe_null(rng, june(day))},
             {"Fare", maybe_null(rng, static_cast<std::int64_t>(100 + 50 * (rng() % 9)))}};
    s.truth[k] = t;
    auto where = rng() % 10;
    if (where < 7) {
      s.holders["alpha"].insert(k);
      a1.insert({{"booking_id", k}, {"From", t["From"]}, {"To", t["To"]}, {"Class", t["Class"]}});
      Value local_date = t["Leave Date"].is_null()
                             ? Value()
                             : Value(std::to_string(day) + "/6/2013");
      a2.insert({{"booking_id", k}, {"Adults", t["Adults"]}, {"Leave Date", local_date}});
    }
    if (where >= 4) {
      s.holders["beta"].insert(k);
      Value cabin = t["Class"].is_null() ? Value() : Value(kCabinCode.at(t["Class"].as_string()));
      Value fare = t["Fare"].is_null() ? Value() : Value(t["Fare"].as_int() * 100);
      f.insert({{"booking_id", k}, {"Origin", t["From"]}, {"Cabin", cabin},
                {"Adult", t["Adults"]}, {"Departure", t["Leave Date"]}, {"Fare", fare}});
    }
  }

  SourceStore sa("alpha");
  sa.add_relation(std::move(a1));
  sa.add_relation(std::move(a2));
  ViewDefinition v;
  v.name = "AlphaAll";
  v.attributes = {"From", "To", "Class", "Adults", "Leave Date"};
  v.bases = {"A1", "A2"};
  sa.add_view(v);
  SourceStore sb("beta");
  sb.add_relation(std::move(f));
  s.stores.emplace("alpha", std::move(sa));
  s.stores.emplace("beta", std::move(sb));
  return s;
}

GlobalQuery random_query(std::mt19937_64 &rng, const Scenario &) {
  std::vector<std::string> attrs{"From", "To", "Class", "Adults", "Leave Date", "Fare"};
  std::shuffle(attrs.begin(), attrs.end(), rng);
  std::size_t n = 1 + rng() % 3;
  GlobalQuery q;
  q.domain = {2, "Airline"};
  q.id = "qtest";
  auto ordered_op = [&](Value lo, Value hi) {
    Predicate p;
    switch (rng() % 4) {
      case 0: p.op = Predicate::Op::kEq; p.value = lo; break;
      case 1: p.op = Predicate::Op::kLe; p.value = hi; break;
      case 2: p.op = Predicate::Op::kGe; p.value = lo; break;
      default:
        p.op = Predicate::Op::kBetween;
        p.value = std::min(lo, hi);
        p.upper = std::max(lo, hi);
    }
    return p;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto &a = attrs[i];
    Predicate p;
    if (a == "From" || a == "To") {
      p.value = pick(rng, kCities);
    } else if (a == "Class") {
      p.value = pick(rng, kClasses);
    } else if (a == "Adults") {
      p = ordered_op(static_cast<std::int64_t>(rng() % 5), static_cast<std::int64_t>(rng() % 5));
    } else if (a == "Fare") {
      p = ordered_op(static_cast<std::int64_t>(100 + 50 * (rng() % 9)),
                     static_cast<std::int64_t>(100 + 50 * (rng() % 9)));
    } else {
      p = ordered_op(june(1 + static_cast<int>(rng() % 10)), june(1 + static_cast<int>(rng() % 10)));
    }
    p.attribute = a;
    q.predicates.push_back(p);
  }
  q.keyword_count = q.predicates.size();
  return q;
}

std::vector<CanonicalRecord> union_oracle(const Scenario &s, const GlobalQuery &q) {
  std::vector<CanonicalRecord> out;
  for (const auto &[k, row] : s.truth) {
    std::set<std::string> available;
    std::set<Provenance> prov;
    for (const auto &[source, keys] : s.holders) {
      if (!keys.count(k)) continue;
      const auto &attrs = s.provides.at(source);
      bool touches = std::any_of(q.predicates.begin(), q.predicates.end(),
                                 [&](const Predicate &p) { return attrs.count(p.attribute); });
      if (!touches) continue;
      available.insert(attrs.begin(), attrs.end());
      prov.insert({source, std::to_string(k)});
    }
    if (prov.empty()) continue;
    bool ok = std::all_of(q.predicates.begin(), q.predicates.end(), [&](const Predicate &p) {
      return available.count(p.attribute) && oracle_match(p, row.at(p.attribute));
    });
    if (!ok) continue;
    CanonicalRecord c;
    c.values["booking_id"] = k;
    for (const auto &p : q.predicates) c.values[p.attribute] = row.at(p.attribute);
    c.provenance = prov;
    out.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lattice

double oracle_benefit(const std::vector<LatticeNode> &nodes, const std::string &view,
                      const std::set<std::string> &materialized) {
  std::map<std::string, const LatticeNode *> by_name;
  for (const auto &n : nodes) by_name[n.name] = &n;
  std::set<std::string> seen;
  std::vector<std::string> stack(by_name.at(view)->ancestors.begin(),
                                 by_name.at(view)->ancestors.end());
  while (!stack.empty()) {
    auto a = stack.back();
    stack.pop_back();
    if (!seen.insert(a).second) continue;
    for (const auto &up : by_name.at(a)->ancestors) stack.push_back(up);
  }
  double best = -1;
  for (const auto &a : seen) {
    if (materialized.count(a) && (best < 0 || by_name.at(a)->cost < best)) best = by_name.at(a)->cost;
  }
  if (best < 0) throw std::logic_error("no materialized ancestor");
  double gain = (best - by_name.at(view)->cost) * static_cast<double>(by_name.at(view)->weight);
  return gain > 0 ? gain : 0;
}

}  // namespace qii::testing
