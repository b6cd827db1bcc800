#include "qii/result_integrator.h"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "qii/csv.h"
#include "qii/error.h"
#include "qii/text.h"

namespace qii {

using nlohmann::ordered_json;

std::string NormalizationRule::describe() const {
  return std::visit(
      [&](const auto &k) -> std::string {
        using T = std::decay_t<decltype(k)>;
        std::string head = source_id + "." + attribute + " ";
        if constexpr (std::is_same_v<T, DateFormat>) {
          return head + "date_format(" + k.pattern + ")";
        } else if constexpr (std::is_same_v<T, Scale>) {
          return head + "scale(" + std::to_string(k.numerator) + "/" +
                 std::to_string(k.denominator) + ")";
        } else {
          return head + "encode(" + std::to_string(k.mapping.size()) + " codes)";
        }
      },
      kind);
}

void validate(const NormalizationRule &rule) {
  if (const auto *s = std::get_if<NormalizationRule::Scale>(&rule.kind)) {
    if (s->numerator == 0 || s->denominator == 0) {
      throw ConfigError("scale factor of " + rule.source_id + "." + rule.attribute + " is zero");
    }
  }
  if (const auto *e = std::get_if<NormalizationRule::Encode>(&rule.kind)) {
    std::set<std::string> locals, canon;
    for (const auto &[l, c] : e->mapping) {
      if (!locals.insert(l).second) {
        throw ConfigError("encode map of " + rule.attribute + " repeats code '" + l + "'");
      }
      if (!canon.insert(c).second) {
        throw ConfigError("encode map of " + rule.attribute + " is not injective at '" + c + "'");
      }
    }
  }
  if (const auto *d = std::get_if<NormalizationRule::DateFormat>(&rule.kind)) {
    if (d->pattern.find("YYYY") == std::string::npos) {
      throw ConfigError("date pattern '" + d->pattern + "' has no YYYY");
    }
  }
}

namespace {

NormalizationRule::Scale parse_factor(const ordered_json &j) {
  if (j.is_number_integer()) return {j.get<std::int64_t>(), 1};
  if (j.is_object()) return {j.at("num").get<std::int64_t>(), j.at("den").get<std::int64_t>()};
  auto text = j.get<std::string>();
  auto parts = split(text, '/');
  try {
    if (parts.size() == 1) return {std::stoll(parts[0]), 1};
    if (parts.size() == 2) return {std::stoll(parts[0]), std::stoll(parts[1])};
  } catch (const std::exception &) {
  }
  throw ConfigError("bad scale factor '" + text + "'");
}

}  // namespace

std::vector<NormalizationRule> parse_rules(std::string_view text) {
  std::vector<NormalizationRule> rules;
  try {
    auto doc = ordered_json::parse(text.begin(), text.end());
    for (const auto &r : doc) {
      NormalizationRule rule;
      rule.source_id = r.at("source").get<std::string>();
      rule.attribute = r.at("attribute").get<std::string>();
      auto kind = r.at("kind").get<std::string>();
      const auto params = r.value("params", ordered_json::object());
      if (kind == "date_format") {
        rule.kind = NormalizationRule::DateFormat{params.at("pattern").get<std::string>()};
      } else if (kind == "scale") {
        rule.kind = parse_factor(params.at("factor"));
      } else if (kind == "encode") {
        NormalizationRule::Encode e;
        for (const auto &[k, v] : params.at("map").items()) e.mapping.emplace_back(k, v.get<std::string>());
        rule.kind = std::move(e);
      } else {
        throw ConfigError("unknown normalization kind '" + kind + "'");
      }
      validate(rule);
      rules.push_back(std::move(rule));
    }
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("normalization rules: ") + e.what());
  }
  return rules;
}

ordered_json rules_to_json(const std::vector<NormalizationRule> &rules) {
  auto out = ordered_json::array();
  for (const auto &rule : rules) {
    ordered_json j{{"source", rule.source_id}, {"attribute", rule.attribute}};
    std::visit(
        [&](const auto &k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, NormalizationRule::DateFormat>) {
            j["kind"] = "date_format";
            j["params"] = {{"pattern", k.pattern}};
          } else if constexpr (std::is_same_v<T, NormalizationRule::Scale>) {
            j["kind"] = "scale";
            j["params"] = {{"factor", {{"num", k.numerator}, {"den", k.denominator}}}};
          } else {
            j["kind"] = "encode";
            ordered_json m = ordered_json::object();
            for (const auto &[l, c] : k.mapping) m[l] = c;
            j["params"] = {{"map", m}};
          }
        },
        rule.kind);
    out.push_back(std::move(j));
  }
  return out;
}

DeferredAttributes deferred_attributes(const std::vector<NormalizationRule> &rules) {
  DeferredAttributes out;
  for (const auto &r : rules) out.emplace_back(r.source_id, r.attribute);
  return out;
}

namespace {

bool read_digits(std::string_view raw, std::size_t &pos, std::size_t min, std::size_t max,
                 int &out) {
  std::size_t n = 0;
  out = 0;
  while (pos < raw.size() && n < max && std::isdigit(static_cast<unsigned char>(raw[pos]))) {
    out = out * 10 + (raw[pos] - '0');
    ++pos;
    ++n;
  }
  return n >= min;
}

}  // namespace

std::string reformat_date(std::string_view raw, std::string_view pattern) {
  auto text = trim(raw);
  std::size_t pos = 0;
  int year = -1, month = -1, day = -1;
  for (std::size_t p = 0; p < pattern.size();) {
    auto rest = pattern.substr(p);
    bool ok = true;
    if (rest.substr(0, 4) == "YYYY") {
      ok = read_digits(text, pos, 4, 4, year);
      p += 4;
    } else if (rest.substr(0, 2) == "DD") {
      ok = read_digits(text, pos, 2, 2, day);
      p += 2;
    } else if (rest.substr(0, 2) == "MM") {
      ok = read_digits(text, pos, 2, 2, month);
      p += 2;
    } else if (rest.front() == 'D') {
      ok = read_digits(text, pos, 1, 2, day);
      ++p;
    } else if (rest.front() == 'M') {
      ok = read_digits(text, pos, 1, 2, month);
      ++p;
    } else {
      ok = pos < text.size() && text[pos] == rest.front();
      ++pos;
      ++p;
    }
    if (!ok) throw NormalizationError("date does not match pattern " + std::string(pattern), std::string(raw));
  }
  if (pos != text.size() || !is_valid_date(year, month, day)) {
    throw NormalizationError("invalid date under pattern " + std::string(pattern), std::string(raw));
  }
  return iso_date(year, month, day);
}

std::string format_date(std::string_view iso, std::string_view pattern) {
  if (!is_iso_date(iso)) throw NormalizationError("not an ISO date", std::string(iso));
  int year = std::stoi(std::string(iso.substr(0, 4)));
  int month = std::stoi(std::string(iso.substr(5, 2)));
  int day = std::stoi(std::string(iso.substr(8, 2)));
  auto two = [](int v) { return (v < 10 ? "0" : "") + std::to_string(v); };
  std::string out;
  for (std::size_t p = 0; p < pattern.size();) {
    auto rest = pattern.substr(p);
    if (rest.substr(0, 4) == "YYYY") {
      out += std::to_string(year);
      p += 4;
    } else if (rest.substr(0, 2) == "DD") {
      out += two(day);
      p += 2;
    } else if (rest.substr(0, 2) == "MM") {
      out += two(month);
      p += 2;
    } else if (rest.front() == 'D') {
      out += std::to_string(day);
      ++p;
    } else if (rest.front() == 'M') {
      out += std::to_string(month);
      ++p;
    } else {
      out.push_back(rest.front());
      ++p;
    }
  }
  return out;
}

namespace {

std::int64_t integer_of(const Value &v, const std::string &what) {
  if (v.is_int()) return v.as_int();
  if (auto c = coerce(std::string_view(v.str()), DataType::kInteger)) return c->as_int();
  throw NormalizationError(what + " expects an integer", v.str());
}

Value rescale(std::int64_t value, std::int64_t num, std::int64_t den, const std::string &what) {
  __int128 product = static_cast<__int128>(value) * num;
  if (product % den != 0) {
    throw NormalizationError(what + " does not scale to an integer", std::to_string(value));
  }
  return Value(static_cast<std::int64_t>(product / den));
}

}  // namespace

Value apply_rule(const NormalizationRule &rule, const Value &raw) {
  if (raw.is_null()) return raw;
  return std::visit(
      [&](const auto &k) -> Value {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, NormalizationRule::DateFormat>) {
          return Value(reformat_date(raw.str(), k.pattern));
        } else if constexpr (std::is_same_v<T, NormalizationRule::Scale>) {
          return rescale(integer_of(raw, rule.attribute), k.numerator, k.denominator,
                         rule.attribute);
        } else {
          auto code = raw.str();
          for (const auto &[l, c] : k.mapping) {
            if (l == code) return Value(c);
          }
          throw NormalizationError("value outside encode map of " + rule.attribute, code);
        }
      },
      rule.kind);
}

Value invert_rule(const NormalizationRule &rule, const Value &canonical) {
  if (canonical.is_null()) return canonical;
  return std::visit(
      [&](const auto &k) -> Value {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, NormalizationRule::DateFormat>) {
          return Value(format_date(canonical.str(), k.pattern));
        } else if constexpr (std::is_same_v<T, NormalizationRule::Scale>) {
          return rescale(integer_of(canonical, rule.attribute), k.denominator, k.numerator,
                         rule.attribute);
        } else {
          auto value = canonical.str();
          for (const auto &[l, c] : k.mapping) {
            if (c == value) return Value(l);
          }
          throw NormalizationError("value outside encode map of " + rule.attribute, value);
        }
      },
      rule.kind);
}

CanonicalRecord normalize_record(const Record &raw, std::string_view source,
                                 const std::vector<NormalizationRule> &rules,
                                 const UnifiedInterface &unified, std::string_view join_key) {
  CanonicalRecord out;
  std::string key_text;
  for (const auto &[attr, value] : raw) {
    if (names_equal(attr, join_key)) {
      out.values[std::string(join_key)] = value;
      key_text = value.str();
      continue;
    }
    auto target = unified.unified_name(source, attr);
    if (!target) {
      throw NormalizationError("attribute of " + std::string(source) + " has no unified mapping",
                               attr);
    }
    const FieldNode *leaf = find_field(unified.tree, *target);
    Value v = value;
    bool ruled = false;
    for (const auto &r : rules) {
      if (r.source_id == source && names_equal(r.attribute, attr)) {
        v = apply_rule(r, v);
        ruled = true;
      }
    }
    if (!ruled && leaf->type == DataType::kDate && v.is_string() && !is_iso_date(v.as_string())) {
      v = Value(reformat_date(v.as_string(), kDefaultDatePattern));
    }
    auto typed = coerce(v, leaf->type, leaf->allowed_values);
    if (!typed) {
      throw NormalizationError("value is not a valid " + std::string(datatype_name(leaf->type)) +
                                   " for '" + leaf->name + "'",
                               v.str());
    }
    out.values[leaf->name] = *typed;
  }
  out.provenance.insert({std::string(source), key_text});
  return out;
}

ResultSet integrate(const std::map<std::string, std::vector<CanonicalRecord>> &per_source,
                    std::string_view join_key, const UnifiedInterface &unified,
                    const std::map<std::string, std::vector<Predicate>> &residual) {
  if (join_key.empty()) throw ConfigError("no global join key configured");
  std::vector<std::string> order;
  for (const auto &s : unified.sources) {
    if (per_source.count(s)) order.push_back(s);
  }
  for (const auto &[s, _] : per_source) {
    if (std::find(order.begin(), order.end(), s) == order.end()) order.push_back(s);
  }

  struct Merged {
    CanonicalRecord record;
    std::vector<std::string> sources;
  };
  std::map<Value, Merged> by_key;
  std::vector<Merged> unkeyed;
  ResultSet rs;
  const std::string key_name(join_key);

  for (const auto &source : order) {
    for (const auto &rec : per_source.at(source)) {
      auto kit = rec.values.find(key_name);
      if (kit == rec.values.end() || kit->second.is_null()) {
        unkeyed.push_back({rec, {source}});
        continue;
      }
      auto [it, fresh] = by_key.try_emplace(kit->second, Merged{rec, {source}});
      if (fresh) continue;
      auto &m = it->second;
      for (const auto &[attr, value] : rec.values) {
        auto [vit, added] = m.record.values.emplace(attr, value);
        if (!added && !(vit->second == value)) {
          rs.errors.push_back({source,
                               "conflict on '" + attr + "': kept '" + vit->second.str() +
                                   "' from " + m.sources.front() + ", dropped '" + value.str() + "'",
                               kit->second});
        }
      }
      m.record.provenance.insert(rec.provenance.begin(), rec.provenance.end());
      if (std::find(m.sources.begin(), m.sources.end(), source) == m.sources.end()) {
        m.sources.push_back(source);
      }
    }
  }

  auto passes = [&](const Merged &m) {
    for (const auto &s : m.sources) {
      auto it = residual.find(s);
      if (it == residual.end()) continue;
      if (!matches_all(m.record.values, it->second)) return false;
    }
    return true;
  };
  for (auto &m : unkeyed) {
    if (passes(m)) rs.records.push_back(std::move(m.record));
  }
  for (auto &[key, m] : by_key) {
    if (passes(m)) rs.records.push_back(std::move(m.record));
  }
  std::stable_sort(rs.records.begin(), rs.records.end(),
                   [&](const CanonicalRecord &a, const CanonicalRecord &b) {
                     auto ka = a.values.count(key_name) ? a.values.at(key_name) : Value();
                     auto kb = b.values.count(key_name) ? b.values.at(key_name) : Value();
                     if (ka != kb) return ka < kb;
                     return a.provenance < b.provenance;
                   });
  return rs;
}

ResultSet dedupe(const ResultSet &results) {
  ResultSet out;
  out.errors = results.errors;
  out.stats = results.stats;
  std::map<Record, std::size_t> index;
  for (const auto &r : results.records) {
    auto [it, fresh] = index.try_emplace(r.values, out.records.size());
    if (fresh) {
      out.records.push_back(r);
    } else {
      auto &kept = out.records[it->second].provenance;
      kept.insert(r.provenance.begin(), r.provenance.end());
    }
  }
  return out;
}

std::string result_csv(const ResultSet &results, const UnifiedInterface &unified,
                       std::string_view join_key) {
  std::vector<std::string> columns{std::string(join_key)};
  for (const auto &name : field_names(unified.tree)) {
    bool used = std::any_of(results.records.begin(), results.records.end(),
                            [&](const auto &r) { return r.values.count(name) > 0; });
    if (used) columns.push_back(name);
  }
  auto header = columns;
  header.push_back("provenance");
  header.push_back("manifest");
  std::string out = csv_line(header) + "\n";
  for (const auto &r : results.records) {
    std::vector<std::string> cells;
    for (const auto &c : columns) {
      auto it = r.values.find(c);
      cells.push_back(it == r.values.end() ? "" : it->second.str());
    }
    std::vector<std::string> prov;
    for (const auto &p : r.provenance) prov.push_back(p.source + ":" + p.key);
    cells.push_back(join(prov, ";"));
    std::vector<std::string> notes;
    auto kit = r.values.find(std::string(join_key));
    for (const auto &e : results.errors) {
      if (e.key && kit != r.values.end() && *e.key == kit->second) notes.push_back(e.message);
    }
    cells.push_back(join(notes, "; "));
    out += csv_line(cells) + "\n";
  }
  return out;
}

std::string result_jsonl(const ResultSet &results) {
  std::string out;
  for (const auto &r : results.records) {
    ordered_json j;
    ordered_json values = ordered_json::object();
    for (const auto &[k, v] : r.values) values[k] = to_json(v);
    j["values"] = std::move(values);
    j["provenance"] = ordered_json::array();
    for (const auto &p : r.provenance) j["provenance"].push_back({{"source", p.source}, {"key", p.key}});
    out += j.dump() + "\n";
  }
  for (const auto &e : results.errors) {
    ordered_json j{{"manifest", {{"source", e.source}, {"message", e.message}}}};
    if (e.key) j["manifest"]["key"] = to_json(*e.key);
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace qii
