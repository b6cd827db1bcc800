#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "qii/error.h"
#include "qii/interface_merger.h"
#include "qii/text.h"
#include "support.h"

using namespace qii;
using qii::testing::field;
using qii::testing::group;
using qii::testing::tree;

namespace {

const std::vector<std::string> kFourteen{
    "Adults", "Children", "Infant",     "From",   "To",     "One way", "Round trip",
    "Multicity", "Package", "Class",    "Leave",  "Return", "Leave Date", "Return Date"};

std::set<std::string> field_set(const UnifiedInterface &u) {
  auto names = field_names(u.tree);
  return {names.begin(), names.end()};
}

// Canonical names with their alias spellings, for random forms.
const std::vector<std::pair<std::string, std::vector<std::string>>> kVocabulary{
    {"From", {"Origin", "Leaving from"}}, {"To", {"Destination"}},
    {"Leave Date", {"Departure Date"}},   {"Return Date", {"Return on"}},
    {"Adults", {"Adult"}},                {"Children", {"Kids"}},
    {"Class", {"Cabin"}},                 {"Infant", {}},
    {"Package", {}},                      {"Leave", {}}};

SynonymTable vocabulary_synonyms() {
  SynonymTable syn;
  for (const auto &[c, aliases] : kVocabulary) {
    if (!aliases.empty()) syn.add(c, aliases);
  }
  return syn;
}

InterfaceTree random_form(std::mt19937_64 &rng, const std::string &name) {
  std::vector<std::vector<Node>> groups(1 + rng() % 3);
  for (const auto &[canonical, aliases] : kVocabulary) {
    if (rng() % 3 == 0) continue;
    std::string spelling = canonical;
    if (!aliases.empty() && rng() % 2) spelling = aliases[rng() % aliases.size()];
    groups[rng() % groups.size()].push_back(field(spelling));
  }
  std::vector<Node> children;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) continue;
    children.push_back(group("G" + std::to_string(rng() % 4), std::move(groups[g])));
  }
  if (children.empty()) children.push_back(field("Leave"));
  // Group names may repeat by chance; rename duplicates.
  std::set<std::string> seen;
  for (auto &c : children) {
    if (!c.is_field() && !seen.insert(c.group().name).second) {
      c.group().name += "_" + std::to_string(seen.size());
      seen.insert(c.group().name);
    }
  }
  return tree(name, {2, "Airline"}, std::move(children));
}

std::set<std::string> canonical_leaves(const InterfaceTree &t, const SynonymTable &syn) {
  std::set<std::string> out;
  for (const auto &n : field_names(t)) out.insert(canonicalize(n, syn));
  return out;
}

}  // namespace

TEST_SUITE("interface_merger") {
  TEST_CASE("canonicalize") {
    SynonymTable syn;
    syn.add("From", {"Origin"});
    syn.add("Multicity", {"Multiplicity"});
    CHECK(canonicalize("origin", syn) == "From");
    CHECK(canonicalize("Multiplicity", syn) == "Multicity");
    CHECK(canonicalize("From", SynonymTable{}) == "From");
    CHECK(canonicalize("  Leave   Date ", SynonymTable{}) == "Leave Date");
  }

  TEST_CASE("synonym sets must stay disjoint") {
    SynonymTable syn;
    syn.add("From", {"Origin"});
    CHECK_THROWS_AS(syn.add("Source", {"origin"}), ConfigError);
    CHECK_THROWS_AS(syn.add("To", {"From"}), ConfigError);
    CHECK_THROWS_AS(syn.add("Origin", {"Start"}), ConfigError);
    CHECK_THROWS_AS(SynonymTable::parse("{\"A\": [\"x\"], \"B\": [\"X\"]}"), ConfigError);
  }

  TEST_CASE("matching pairs leaves through the synonym closure") {
    SynonymTable syn;
    syn.add("From", {"Origin"});
    syn.add("To", {"Destination"});
    syn.add("Leave Date", {"Departure Date"});
    auto a = tree("a", {2, "Airline"}, {field("From"), field("To"), field("Departure Date")});
    auto b = tree("b", {2, "Airline"},
                  {field("Origin"), field("Destination"), field("Leave Date")});
    auto pairs = match_attributes(a, b, syn);
    CHECK(pairs == std::vector<std::pair<std::string, std::string>>{
                       {"From", "Origin"}, {"To", "Destination"}, {"Departure Date", "Leave Date"}});
    CHECK(match_attributes(a, a, SynonymTable{}).size() == 3);
    auto c = tree("c", {2, "Airline"}, {field("Fare")});
    CHECK(match_attributes(a, c, SynonymTable{}).empty());
    auto book = tree("book", {1, "Book"}, {field("From")});
    CHECK_THROWS_AS(match_attributes(a, book, syn), DomainMismatchError);
  }

  TEST_CASE("three-field and four-field forms merge to four leaves, seven mappings") {
    SynonymTable syn;
    syn.add("From", {"Origin"});
    syn.add("To", {"Destination"});
    syn.add("Leave Date", {"Departure Date"});
    std::vector<InterfaceTree> trees{
        tree("a", {2, "Airline"}, {field("From"), field("To"), field("Departure Date")}),
        tree("b", {2, "Airline"},
             {field("Origin"), field("Destination"), field("Leave Date"), field("Return Date")})};
    auto u = merge_interfaces(trees, syn);
    CHECK(field_set(u) == std::set<std::string>{"From", "To", "Leave Date", "Return Date"});
    CHECK(u.mappings.size() == 7);
    CHECK(*u.unified_name("b", "Origin") == "From");
    CHECK(*u.local_name("a", "Leave Date") == "Departure Date");
    CHECK_FALSE(u.local_name("a", "Return Date"));
    CHECK(u.sources == std::vector<std::string>{"a", "b"});
  }

  TEST_CASE("the shipped airline forms unify to the fourteen supergroup fields") {
    auto reg = DomainRegistry::with_defaults();
    auto dir = qii::testing::data_dir();
    std::vector<InterfaceTree> trees{
        parse_interface(read_file(dir + "/interfaces/airline_a.json"), reg),
        parse_interface(read_file(dir + "/interfaces/airline_b.json"), reg)};
    auto u = merge_interfaces(trees, qii::testing::airline_synonyms());
    auto names = field_names(u.tree);
    CHECK(names == kFourteen);
    CHECK(u.mappings.size() == leaf_count(trees[0]) + leaf_count(trees[1]));
    CHECK(*u.unified_name("airline_b", "Multiplicity") == "Multicity");
  }

  TEST_CASE("two identical airline forms unify to the same fourteen fields") {
    std::vector<InterfaceTree> trees{qii::testing::airline_tree("a"),
                                     qii::testing::airline_tree("b")};
    auto u = merge_interfaces(trees, SynonymTable{});
    CHECK(field_names(u.tree) == kFourteen);
    CHECK(u.mappings.size() == 28);
  }

  TEST_CASE("unmatched fields join their group, else a trailing other group") {
    std::vector<InterfaceTree> trees{
        tree("a", {2, "Airline"}, {group("Place", {field("From")})}),
        tree("b", {2, "Airline"},
             {group("place", {field("To")}), group("Misc", {field("Fare", DataType::kInteger)})})};
    auto u = merge_interfaces(trees, SynonymTable{});
    REQUIRE(u.tree.children.size() == 2);
    const auto &place = u.tree.children[0].group();
    CHECK(place.children.size() == 2);
    CHECK(place.children[1].name() == "To");
    CHECK(u.tree.children[1].group().name == "other");
    CHECK(u.tree.children[1].group().children[0].name() == "Fare");
  }

  TEST_CASE("type conflicts resolve to the more general type with a warning") {
    std::vector<InterfaceTree> trees{
        tree("a", {2, "Airline"}, {field("Adults", DataType::kInteger)}),
        tree("b", {2, "Airline"}, {field("Adults", DataType::kText)})};
    auto u = merge_interfaces(trees, SynonymTable{});
    CHECK(find_field(u.tree, "Adults")->type == DataType::kText);
    CHECK(u.warnings.size() == 1);
  }

  TEST_CASE("merge preconditions") {
    CHECK_THROWS_AS(merge_interfaces(std::vector<InterfaceTree>{}, SynonymTable{}), ArgumentError);
    std::vector<InterfaceTree> mixed{tree("a", {2, "Airline"}, {field("From")}),
                                     tree("b", {1, "Book"}, {field("Title")})};
    CHECK_THROWS_AS(merge_interfaces(mixed, SynonymTable{}), DomainMismatchError);
  }

  TEST_CASE("unified interface serializes losslessly") {
    std::vector<InterfaceTree> trees{qii::testing::airline_tree("a"),
                                     tree("b", {2, "Airline"}, {field("Origin"), field("Fare")})};
    SynonymTable syn;
    syn.add("From", {"Origin"});
    auto u = merge_interfaces(trees, syn);
    auto reg = DomainRegistry::with_defaults();
    auto text = serialize_unified(u);
    auto back = parse_unified(text, reg);
    CHECK(serialize_unified(back) == text);
    CHECK(back.mappings == u.mappings);
    CHECK(back.sources == u.sources);
  }

  TEST_CASE("trip-mode projections") {
    std::vector<InterfaceTree> trees{qii::testing::airline_tree()};
    auto u = merge_interfaces(trees, SynonymTable{});
    CHECK(project_for_mode(u, TripMode::kOneWay) ==
          std::vector<std::string>{"Adults", "Children", "Infant", "From", "To", "Leave",
                                   "Leave Date"});
    // Round trip adds the Return status pair, in tree order.
    CHECK(project_for_mode(u, TripMode::kRoundTrip) ==
          std::vector<std::string>{"Adults", "Children", "Infant", "From", "To", "Leave",
                                   "Return", "Leave Date", "Return Date"});
    auto all = field_names(u.tree);
    for (auto mode : {TripMode::kOneWay, TripMode::kRoundTrip, TripMode::kMultiCity,
                      TripMode::kPackage}) {
      for (const auto &f : project_for_mode(u, mode)) {
        CHECK(std::find(all.begin(), all.end(), f) != all.end());
      }
    }
    CHECK(parse_trip_mode("one way") == TripMode::kOneWay);
    CHECK_THROWS(parse_trip_mode("Charter"));
  }

  TEST_CASE("projection needs the mode's selector field") {
    std::vector<InterfaceTree> trees{tree("a", {2, "Airline"}, {field("From"), field("To")})};
    auto u = merge_interfaces(trees, SynonymTable{});
    CHECK_THROWS(project_for_mode(u, TripMode::kOneWay));
  }

  TEST_CASE("shipped mode rules match the built-in defaults") {
    auto rules = ModeRules::from_json(
        nlohmann::ordered_json::parse(read_file(qii::testing::data_dir() + "/modes.json")));
    auto defaults = ModeRules::airline_defaults();
    for (auto mode : {TripMode::kOneWay, TripMode::kRoundTrip, TripMode::kMultiCity,
                      TripMode::kPackage}) {
      auto shipped = rules.find(mode)->fields;
      auto builtin = defaults.find(mode)->fields;
      std::sort(shipped.begin(), shipped.end());
      std::sort(builtin.begin(), builtin.end());
      CHECK(shipped == builtin);
      CHECK(rules.find(mode)->selector == defaults.find(mode)->selector);
    }
  }

  TEST_CASE("property: merge laws over random forms") {
    std::mt19937_64 rng(21);
    auto syn = vocabulary_synonyms();
    for (int trial = 0; trial < 200; ++trial) {
      auto a = random_form(rng, "a");
      auto b = random_form(rng, "b");
      std::vector<InterfaceTree> ab{a, b}, ba{b, a}, aa{a, a}, just_a{a};
      auto u_ab = merge_interfaces(ab, syn);
      auto u_ba = merge_interfaces(ba, syn);
      // Commutativity of field sets.
      CHECK(field_set(u_ab) == field_set(u_ba));
      // Idempotence.
      auto b_aa = aa;
      b_aa[1].form_name = "a2";
      CHECK(field_set(merge_interfaces(b_aa, syn)) == field_set(merge_interfaces(just_a, syn)));
      // Duplicate freedom.
      auto expected = canonical_leaves(a, syn);
      auto more = canonical_leaves(b, syn);
      expected.insert(more.begin(), more.end());
      CHECK(field_set(u_ab) == expected);
      CHECK(field_names(u_ab.tree).size() == expected.size());
      // Coverage: one mapping per input leaf.
      for (const auto *t : {&a, &b}) {
        for (const auto &leaf : field_names(*t)) {
          auto n = std::count_if(u_ab.mappings.begin(), u_ab.mappings.end(), [&](const auto &m) {
            return m.source_id == t->form_name && m.local_name == leaf;
          });
          CHECK(n == 1);
        }
      }
      CHECK_NOTHROW(validate(u_ab));
    }
  }
}
