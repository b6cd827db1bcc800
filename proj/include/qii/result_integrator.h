#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "qii/interface_merger.h"
#include "qii/query_engine.h"

namespace qii {

struct NormalizationRule {
  // Local date text in `pattern` (tokens D, DD, M, MM, YYYY; anything else
  // is a literal separator) → ISO-8601.
  struct DateFormat {
    std::string pattern;
  };
  // Integer value × numerator / denominator; the product must be integral.
  struct Scale {
    std::int64_t numerator = 1;
    std::int64_t denominator = 1;
  };
  // Local code → canonical value. Injective.
  struct Encode {
    std::vector<std::pair<std::string, std::string>> mapping;
  };

  std::string source_id;
  std::string attribute;  // local name
  std::variant<DateFormat, Scale, Encode> kind;

  std::string describe() const;
};

inline constexpr std::string_view kDefaultDatePattern = "D/M/YYYY";

// Throws ConfigError on a zero scale factor or a non-injective encode map.
void validate(const NormalizationRule &rule);

// Rules file: JSON array of {source, attribute, kind, params}.
std::vector<NormalizationRule> parse_rules(std::string_view text);
nlohmann::ordered_json rules_to_json(const std::vector<NormalizationRule> &rules);

// Attributes whose predicates cannot be pushed to their source verbatim.
DeferredAttributes deferred_attributes(const std::vector<NormalizationRule> &rules);

std::string reformat_date(std::string_view raw, std::string_view pattern);
std::string format_date(std::string_view iso, std::string_view pattern);

Value apply_rule(const NormalizationRule &rule, const Value &raw);
// Inverse of apply_rule for encode and scale rules.
Value invert_rule(const NormalizationRule &rule, const Value &canonical);

struct Provenance {
  std::string source;
  std::string key;

  friend auto operator<=>(const Provenance &, const Provenance &) = default;
};

struct CanonicalRecord {
  Record values;  // unified attribute names plus the join key
  std::set<Provenance> provenance;

  friend bool operator==(const CanonicalRecord &, const CanonicalRecord &) = default;
};

struct ResultStats {
  std::size_t tuples_scanned = 0;
  std::int64_t elapsed_ns = 0;
};

struct ResultSet {
  std::vector<CanonicalRecord> records;
  std::vector<ManifestEntry> errors;
  ResultStats stats;
};

// Renames local attributes to unified ones, applies this source's rules
// once each and types every value by its unified leaf. Dates without an
// explicit rule are accepted as ISO or read with kDefaultDatePattern.
CanonicalRecord normalize_record(const Record &raw, std::string_view source,
                                 const std::vector<NormalizationRule> &rules,
                                 const UnifiedInterface &unified,
                                 std::string_view join_key = "booking_id");

// Merges records that share a join key value across sources (first source
// in unified.sources order wins conflicts, which go to the manifest), then
// drops merged records failing the residual predicates of any
// contributing source. Output is sorted by key, then source.
ResultSet integrate(const std::map<std::string, std::vector<CanonicalRecord>> &per_source,
                    std::string_view join_key, const UnifiedInterface &unified,
                    const std::map<std::string, std::vector<Predicate>> &residual);

// Collapses records with identical values, unioning provenance.
ResultSet dedupe(const ResultSet &results);

std::string result_csv(const ResultSet &results, const UnifiedInterface &unified,
                       std::string_view join_key = "booking_id");
std::string result_jsonl(const ResultSet &results);

}  // namespace qii
