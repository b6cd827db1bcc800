#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qii/query_engine.h"
#include "qii/source_store.h"

namespace qii {

// Synthetic airline workload: Option, Status and Passenger relations with
// booking_id keys 1..size shared by all three. Deterministic for a seed.
std::vector<Relation> generate_data(std::size_t size, std::uint64_t seed);

// The all-attribute view over Option ⋈ Status ⋈ Passenger.
ViewDefinition airline_view_definition();

// Predicates used for a given keyword count: 1 touches Option, 2 adds
// Status, 4 adds Passenger; larger counts keep drawing from the pool.
std::vector<Predicate> bench_predicates(std::size_t keyword_count);
inline constexpr std::size_t kMaxBenchKeywords = 8;

struct BenchSpec {
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> keyword_counts;
  std::uint64_t seed = 42;
  int repetitions = 11;

  void validate() const;
};

struct BenchRow {
  std::size_t size = 0;
  std::size_t keyword_count = 0;
  QueryPlan::Path path = QueryPlan::Path::kBaseJoin;
  std::size_t tuples_scanned = 0;
  std::int64_t elapsed_ns = 0;  // median over repetitions
  std::size_t result_count = 0;
};

// For every (size, keyword count) cell, times the view path and the
// base-join path sequentially and reports the median.
std::vector<BenchRow> run_bench(const BenchSpec &spec);

// size,keywords,path,tuples_scanned,elapsed_ns
std::string bench_csv(const std::vector<BenchRow> &rows);

}  // namespace qii
