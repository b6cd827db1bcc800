#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "qii/query_engine.h"
#include "qii/result_integrator.h"

namespace qii {

// A sources directory: one sub-directory per source store, plus optional
// catalog.json (privileges, constraints, join_key) and rules.json
// (normalization rules).
struct SourceDirectory {
  std::map<std::string, SourceStore> stores;
  std::vector<NormalizationRule> rules;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();

  std::string join_key() const;
};

SourceDirectory load_sources(const std::string &dir);

struct QueryTrace {
  std::vector<LocalQuery> local_queries;
  DispatchResult dispatched;
};

// Translate → dispatch → normalize → integrate → dedupe. Normalization
// failures drop the record and land in the manifest.
ResultSet answer_query(const GlobalQuery &query, const UnifiedInterface &unified,
                       const std::map<std::string, SourceStore> &stores,
                       const std::vector<NormalizationRule> &rules,
                       const DispatchOptions &options = {}, QueryTrace *trace = nullptr);

}  // namespace qii
