#include "qii/mediator.h"

#include <algorithm>
#include <chrono>
#include <filesystem>

#include "qii/error.h"
#include "qii/text.h"

namespace qii {

std::string SourceDirectory::join_key() const {
  return config.value("join_key", std::string("booking_id"));
}

SourceDirectory load_sources(const std::string &dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ConfigError("sources directory '" + dir + "' not found");
  SourceDirectory out;
  auto catalog = fs::path(dir) / "catalog.json";
  if (fs::exists(catalog)) {
    try {
      out.config = nlohmann::ordered_json::parse(read_file(catalog.string()));
    } catch (const nlohmann::json::exception &e) {
      throw ConfigError("catalog.json: " + std::string(e.what()));
    }
  }
  auto rules = fs::path(dir) / "rules.json";
  if (fs::exists(rules)) out.rules = parse_rules(read_file(rules.string()));
  std::vector<fs::path> subdirs;
  for (const auto &entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) subdirs.push_back(entry.path());
  }
  std::sort(subdirs.begin(), subdirs.end());
  for (const auto &d : subdirs) {
    auto store = SourceStore::load_directory(d.string());
    auto id = store.id();
    out.stores.emplace(id, std::move(store));
  }
  return out;
}

ResultSet answer_query(const GlobalQuery &query, const UnifiedInterface &unified,
                       const std::map<std::string, SourceStore> &stores,
                       const std::vector<NormalizationRule> &rules,
                       const DispatchOptions &options, QueryTrace *trace) {
  auto start = std::chrono::steady_clock::now();
  auto local = generate_local_queries(query, unified, deferred_attributes(rules));
  auto dispatched = dispatch(local, stores, options);

  std::vector<ManifestEntry> manifest = dispatched.manifest;
  std::map<std::string, std::vector<CanonicalRecord>> normalized;
  for (const auto &[source, records] : dispatched.results) {
    auto &bucket = normalized[source];
    for (const auto &raw : records) {
      try {
        bucket.push_back(normalize_record(raw, source, rules, unified, options.join_key));
      } catch (const NormalizationError &e) {
        auto key = raw.find(options.join_key);
        manifest.push_back({source, e.what(),
                            key == raw.end() ? std::nullopt : std::optional<Value>(key->second)});
      }
    }
  }
  std::map<std::string, std::vector<Predicate>> residual;
  for (const auto &lq : local) {
    auto &r = residual[lq.destination];
    r.insert(r.end(), lq.residual.begin(), lq.residual.end());
  }
  auto integrated = integrate(normalized, options.join_key, unified, residual);
  auto result = dedupe(integrated);
  manifest.insert(manifest.end(), result.errors.begin(), result.errors.end());
  result.errors = std::move(manifest);
  result.stats.tuples_scanned = dispatched.tuples_scanned;
  result.stats.elapsed_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                                std::chrono::steady_clock::now() - start)
                                .count();
  if (trace) {
    trace->local_queries = std::move(local);
    trace->dispatched = std::move(dispatched);
  }
  return result;
}

}  // namespace qii
