#include <random>

#include "doctest.h"
#include "qii/error.h"
#include "qii/text.h"
#include "qii/view_selector.h"
#include "support.h"

using namespace qii;

namespace {

std::vector<LatticeNode> airline_nodes() {
  return {{"Airline", 100, 1, {}},
          {"Place", 80, 3, {"Airline"}},
          {"Status", 75, 3, {"Airline"}},
          {"Passenger", 70, 3, {"Airline"}},
          {"All", 20, 1, {"Airline"}}};
}

ViewLattice random_lattice(std::mt19937_64 &rng, std::vector<LatticeNode> &nodes) {
  nodes.clear();
  int n = 2 + static_cast<int>(rng() % 8);
  nodes.push_back({"v0", static_cast<double>(500 + rng() % 500), 1, {}});
  for (int i = 1; i < n; ++i) {
    LatticeNode node{"v" + std::to_string(i), static_cast<double>(rng() % 600),
                     static_cast<long>(1 + rng() % 4), {}};
    node.ancestors.insert("v" + std::to_string(rng() % i));
    if (i > 1 && rng() % 2) node.ancestors.insert("v" + std::to_string(rng() % i));
    nodes.push_back(node);
  }
  return ViewLattice("v0", nodes);
}

}  // namespace

TEST_SUITE("view_selector") {
  TEST_CASE("benefits of the airline lattice") {
    ViewLattice lat("Airline", airline_nodes());
    std::set<std::string> top{"Airline"};
    CHECK(benefit("Place", top, lat) == 60);
    CHECK(benefit("Status", top, lat) == 75);
    CHECK(benefit("Passenger", top, lat) == 90);
    CHECK(benefit("All", top, lat) == 80);
    CHECK_THROWS_AS(benefit("Airline", top, lat), ArgumentError);
    CHECK_THROWS_AS(benefit("Place", {"Status"}, lat), StructuralError);
  }

  TEST_CASE("equal cost gives zero benefit and is never picked") {
    ViewLattice lat("T", {{"T", 10, 1, {}}, {"Same", 10, 5, {"T"}}, {"Dearer", 30, 2, {"T"}}});
    CHECK(benefit("Same", {"T"}, lat) == 0);
    CHECK(benefit("Dearer", {"T"}, lat) == 0);
    auto r = greedy_select(lat, 3);
    CHECK(r.picks.size() == 1);
    CHECK(r.materialized == std::set<std::string>{"T"});
  }

  TEST_CASE("greedy selection on the airline lattice") {
    ViewLattice lat("Airline", airline_nodes());
    auto r = greedy_select(lat, 3);
    REQUIRE(r.picks.size() == 3);
    CHECK(r.picks[0].view == "Airline");
    CHECK(r.picks[1].view == "Passenger");
    CHECK(r.picks[1].benefit == 90);
    CHECK(r.picks[2].view == "All");
    CHECK(r.picks[2].benefit == 80);
    CHECK(r.materialized == std::set<std::string>{"Airline", "Passenger", "All"});
    CHECK(r.rounds[0] == std::map<std::string, double>{
                             {"Place", 60}, {"Status", 75}, {"Passenger", 90}, {"All", 80}});
  }

  TEST_CASE("k=1 keeps only the top; k=5 continues by benefit") {
    ViewLattice lat("Airline", airline_nodes());
    CHECK(greedy_select(lat, 1).materialized == std::set<std::string>{"Airline"});
    auto r = greedy_select(lat, 5);
    std::vector<std::string> order;
    for (const auto &p : r.picks) order.push_back(p.view);
    CHECK(order == std::vector<std::string>{"Airline", "Passenger", "All", "Status", "Place"});
    CHECK(greedy_select(lat, 50).picks.size() == 5);
    CHECK_THROWS_AS(greedy_select(lat, 0), ArgumentError);
  }

  TEST_CASE("the shipped lattice file") {
    auto lat = ViewLattice::parse(read_file(qii::testing::data_dir() + "/lattice.json"));
    CHECK(greedy_select(lat, 3).materialized == std::set<std::string>{"Airline", "Passenger", "All"});
    auto again = ViewLattice::from_json(lat.to_json());
    CHECK(again.to_json() == lat.to_json());
  }

  TEST_CASE("malformed lattices are refused") {
    CHECK_THROWS_AS(ViewLattice("T", {{"T", 1, 1, {}}, {"A", 1, 1, {"Missing"}}}), StructuralError);
    CHECK_THROWS_AS(ViewLattice("T", {{"T", 1, 1, {"A"}}, {"A", 1, 1, {"T"}}}), StructuralError);
    CHECK_THROWS_AS(ViewLattice("T", {{"T", 1, 1, {}}, {"A", 1, 1, {}}}), StructuralError);
    CHECK_THROWS_AS(ViewLattice("X", {{"T", 1, 1, {}}}), StructuralError);
    CHECK_THROWS_AS(ViewLattice("T", {{"T", -1, 1, {}}}), StructuralError);
  }

  TEST_CASE("ties break toward the smaller name") {
    ViewLattice lat("T", {{"T", 100, 1, {}}, {"b", 50, 1, {"T"}}, {"a", 50, 1, {"T"}}});
    CHECK(greedy_select(lat, 2).picks[1].view == "a");
  }

  TEST_CASE("property: each round picks a maximal benefit and sets only grow") {
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<LatticeNode> nodes;
      auto lat = random_lattice(rng, nodes);
      int k = 1 + static_cast<int>(rng() % nodes.size());
      auto r = greedy_select(lat, k);
      REQUIRE(r.picks[0].view == "v0");
      std::set<std::string> m{"v0"};
      for (std::size_t i = 1; i < r.picks.size(); ++i) {
        const auto &pick = r.picks[i];
        double best = 0;
        for (const auto &n : nodes) {
          if (m.count(n.name)) continue;
          double b = qii::testing::oracle_benefit(nodes, n.name, m);
          CHECK(r.rounds[i - 1].at(n.name) == b);
          best = std::max(best, b);
        }
        CHECK(pick.benefit == best);
        CHECK(pick.benefit > 0);
        auto before = m;
        m.insert(pick.view);
        CHECK(std::includes(m.begin(), m.end(), before.begin(), before.end()));
      }
      CHECK(r.materialized == m);
      // Stopping early means nothing left was worth materializing.
      if (static_cast<int>(r.picks.size()) < k) {
        for (const auto &n : nodes) {
          if (!m.count(n.name)) CHECK(qii::testing::oracle_benefit(nodes, n.name, m) == 0);
        }
      }
    }
  }

  TEST_CASE("property: scaling all costs scales benefits, keeps picks") {
    std::mt19937_64 rng(63);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<LatticeNode> nodes;
      auto lat = random_lattice(rng, nodes);
      double c = 1 + static_cast<double>(rng() % 9);
      auto scaled_nodes = nodes;
      for (auto &n : scaled_nodes) n.cost *= c;
      ViewLattice scaled("v0", scaled_nodes);
      int k = static_cast<int>(nodes.size());
      auto a = greedy_select(lat, k), b = greedy_select(scaled, k);
      REQUIRE(a.picks.size() == b.picks.size());
      for (std::size_t i = 0; i < a.picks.size(); ++i) {
        CHECK(a.picks[i].view == b.picks[i].view);
        CHECK(b.picks[i].benefit == a.picks[i].benefit * c);
      }
    }
  }
}
