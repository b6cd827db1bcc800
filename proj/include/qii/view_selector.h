#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace qii {

struct LatticeNode {
  std::string name;
  double cost = 0;  // records scanned to answer a query from this view
  long weight = 1;  // multiplier applied to the per-node saving
  std::set<std::string> ancestors;
};

// Candidate views ordered by "can be computed from". The top view has no
// ancestors and every other node reaches it.
class ViewLattice {
 public:
  ViewLattice(std::string top, std::vector<LatticeNode> nodes);

  static ViewLattice from_json(const nlohmann::ordered_json &doc);
  static ViewLattice parse(std::string_view text);
  nlohmann::ordered_json to_json() const;

  const std::string &top() const { return top_; }
  const std::map<std::string, LatticeNode> &nodes() const { return nodes_; }
  const LatticeNode &node(std::string_view name) const;

  // Transitive ancestors of `name`.
  const std::set<std::string> &ancestors_of(std::string_view name) const;

 private:
  std::string top_;
  std::map<std::string, LatticeNode> nodes_;
  std::map<std::string, std::set<std::string>> closure_;
};

// (cost of the cheapest materialized ancestor − cost(view)) × weight(view),
// clamped at 0.
double benefit(std::string_view view, const std::set<std::string> &materialized,
               const ViewLattice &lattice);

struct SelectionPick {
  int round = 0;  // 0 is the top view
  std::string view;
  double benefit = 0;
};

struct SelectionResult {
  std::vector<SelectionPick> picks;
  std::set<std::string> materialized;
  // Benefit of every candidate considered in each greedy round (round 1 is
  // rounds[0]).
  std::vector<std::map<std::string, double>> rounds;

  nlohmann::ordered_json to_json() const;
  std::string table() const;
};

// Materializes the top view, then repeatedly adds the candidate of largest
// benefit (ties: smallest name) until k views are chosen or nothing has
// positive benefit.
SelectionResult greedy_select(const ViewLattice &lattice, int k);

}  // namespace qii
