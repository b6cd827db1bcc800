#include "qii/bench.h"

#include <algorithm>
#include <array>
#include <chrono>
#include <random>

#include "qii/csv.h"
#include "qii/error.h"

namespace qii {

namespace {

constexpr std::array<const char *, 8> kCities = {"DEL", "BOM", "BLR", "MAA",
                                                 "CCU", "HYD", "GOI", "PNQ"};
constexpr std::array<const char *, 3> kClasses = {"Economy", "Business", "First"};

class Draw {
 public:
  explicit Draw(std::uint64_t seed) : engine_(seed) {}
  // Uniform in [0, n); modulo keeps the sequence identical across standard
  // libraries, unlike std::uniform_int_distribution.
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
};

std::string day_of_2013(int day_index) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int month = 0;
  while (day_index >= kDays[month]) day_index -= kDays[month++];
  return iso_date(2013, month + 1, day_index + 1);
}

}  // namespace

std::vector<Relation> generate_data(std::size_t size, std::uint64_t seed) {
  if (size < 1) throw ArgumentError("generate_data needs size >= 1");
  Relation option("Option", "booking_id",
                  {{"booking_id", DataType::kInteger}, {"From", DataType::kText},
                   {"To", DataType::kText}, {"One way", DataType::kBoolean},
                   {"Round trip", DataType::kBoolean}, {"Multicity", DataType::kBoolean},
                   {"Package", DataType::kBoolean}, {"Class", DataType::kEnum}});
  Relation status("Status", "booking_id",
                  {{"booking_id", DataType::kInteger}, {"Leave", DataType::kEnum},
                   {"Return", DataType::kEnum}, {"Leave Date", DataType::kDate},
                   {"Return Date", DataType::kDate}});
  Relation passenger("Passenger", "booking_id",
                     {{"booking_id", DataType::kInteger}, {"Adults", DataType::kInteger},
                      {"Children", DataType::kInteger}, {"Infant", DataType::kInteger}});
  Draw draw(seed);
  for (std::size_t i = 1; i <= size; ++i) {
    Value key(static_cast<std::int64_t>(i));
    auto from = draw.below(kCities.size());
    auto to = (from + 1 + draw.below(kCities.size() - 1)) % kCities.size();
    auto mode = draw.below(4);
    option.insert({{"booking_id", key},
                   {"From", kCities[from]},
                   {"To", kCities[to]},
                   {"One way", Value(mode == 0)},
                   {"Round trip", Value(mode == 1)},
                   {"Multicity", Value(mode == 2)},
                   {"Package", Value(mode == 3)},
                   {"Class", kClasses[draw.below(kClasses.size())]}});
    bool returning = mode != 0;
    int leave_day = static_cast<int>(draw.below(365));
    int back_day = std::min(364, leave_day + 1 + static_cast<int>(draw.below(14)));
    status.insert({{"booking_id", key},
                   {"Leave", draw.below(4) == 0 ? "No" : "Yes"},
                   {"Return", returning ? "Yes" : "No"},
                   {"Leave Date", day_of_2013(leave_day)},
                   {"Return Date", returning ? Value(day_of_2013(back_day)) : Value()}});
    passenger.insert({{"booking_id", key},
                      {"Adults", Value(static_cast<std::int64_t>(1 + draw.below(9)))},
                      {"Children", Value(static_cast<std::int64_t>(draw.below(5)))},
                      {"Infant", Value(static_cast<std::int64_t>(draw.below(3)))}});
  }
  std::vector<Relation> out;
  out.push_back(std::move(option));
  out.push_back(std::move(status));
  out.push_back(std::move(passenger));
  return out;
}

ViewDefinition airline_view_definition() {
  return {"Airline",
          {"From", "To", "Leave", "Return", "Leave Date", "Return Date", "Adults", "Infant",
           "Children", "Class"},
          {"Option", "Status", "Passenger"},
          "booking_id"};
}

std::vector<Predicate> bench_predicates(std::size_t keyword_count) {
  static const std::vector<Predicate> kPool = {
      {"From", Predicate::Op::kEq, "DEL", {}},
      {"Leave", Predicate::Op::kEq, "Yes", {}},
      {"To", Predicate::Op::kEq, "BOM", {}},
      {"Adults", Predicate::Op::kBetween, Value(1), Value(4)},
      {"Class", Predicate::Op::kEq, "Economy", {}},
      {"Return", Predicate::Op::kEq, "Yes", {}},
      {"Children", Predicate::Op::kLe, Value(2), {}},
      {"Leave Date", Predicate::Op::kBetween, "2013-01-01", "2013-06-30"},
  };
  if (keyword_count < 1 || keyword_count > kPool.size()) {
    throw ArgumentError("keyword count must be within 1.." + std::to_string(kPool.size()));
  }
  return {kPool.begin(), kPool.begin() + static_cast<std::ptrdiff_t>(keyword_count)};
}

void BenchSpec::validate() const {
  if (sizes.empty() || keyword_counts.empty()) {
    throw ArgumentError("bench needs at least one size and one keyword count");
  }
  for (auto s : sizes) {
    if (s < 1) throw ArgumentError("bench sizes must be positive");
  }
  for (auto k : keyword_counts) bench_predicates(k);
  if (repetitions < 3) throw ArgumentError("bench needs at least 3 repetitions");
}

std::vector<BenchRow> run_bench(const BenchSpec &spec) {
  spec.validate();
  std::vector<BenchRow> rows;
  for (auto size : spec.sizes) {
    SourceStore store("bench");
    for (auto &r : generate_data(size, spec.seed)) store.add_relation(std::move(r));
    store.add_view(airline_view_definition());
    auto inventory = relation_inventory(store);
    auto views = view_list(store);
    for (auto keywords : spec.keyword_counts) {
      auto predicates = bench_predicates(keywords);
      std::vector<std::string> attributes;
      for (const auto &p : predicates) attributes.push_back(p.attribute);
      for (auto plan : {plan_access(attributes, views, inventory),
                        plan_access(attributes, {}, inventory)}) {
        std::vector<std::int64_t> times;
        Selection last;
        for (int rep = 0; rep < spec.repetitions; ++rep) {
          auto start = std::chrono::steady_clock::now();
          last = execute_plan(plan, store, predicates, attributes, "booking_id");
          times.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(
                              std::chrono::steady_clock::now() - start)
                              .count());
        }
        std::nth_element(times.begin(), times.begin() + times.size() / 2, times.end());
        rows.push_back({size, keywords, plan.path, last.tuples_scanned, times[times.size() / 2],
                        last.records.size()});
      }
    }
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow> &rows) {
  std::string out = "size,keywords,path,tuples_scanned,elapsed_ns\n";
  for (const auto &r : rows) {
    out += csv_line({std::to_string(r.size), std::to_string(r.keyword_count),
                     r.path == QueryPlan::Path::kView ? "view" : "base_join",
                     std::to_string(r.tuples_scanned), std::to_string(r.elapsed_ns)}) +
           "\n";
  }
  return out;
}

}  // namespace qii
