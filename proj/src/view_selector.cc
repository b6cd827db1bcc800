#include "qii/view_selector.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "qii/error.h"

namespace qii {

using nlohmann::ordered_json;

ViewLattice::ViewLattice(std::string top, std::vector<LatticeNode> nodes) : top_(std::move(top)) {
  for (auto &n : nodes) {
    if (n.name.empty()) throw StructuralError("lattice node without a name");
    if (!(n.cost >= 0) || !std::isfinite(n.cost)) {
      throw StructuralError("lattice node '" + n.name + "' has a negative cost");
    }
    if (n.weight < 1) throw StructuralError("lattice node '" + n.name + "' has weight < 1");
    auto name = n.name;
    if (!nodes_.emplace(name, std::move(n)).second) {
      throw StructuralError("duplicate lattice node '" + name + "'");
    }
  }
  auto top_it = nodes_.find(top_);
  if (top_it == nodes_.end()) throw StructuralError("top view '" + top_ + "' is not a node");
  if (!top_it->second.ancestors.empty()) throw StructuralError("top view has ancestors");
  for (const auto &[name, n] : nodes_) {
    if (name != top_ && n.ancestors.empty()) {
      throw StructuralError("node '" + name + "' has no ancestor");
    }
    for (const auto &a : n.ancestors) {
      if (!nodes_.count(a)) throw StructuralError("node '" + name + "' names unknown ancestor '" + a + "'");
    }
  }
  // Transitive closure by DFS; a node reaching itself is a cycle.
  enum class Mark { kNone, kActive, kDone };
  std::map<std::string, Mark> mark;
  std::function<void(const std::string &)> visit = [&](const std::string &name) {
    auto &m = mark[name];
    if (m == Mark::kDone) return;
    if (m == Mark::kActive) throw StructuralError("ancestor cycle through '" + name + "'");
    m = Mark::kActive;
    auto &closure = closure_[name];
    for (const auto &a : nodes_.at(name).ancestors) {
      visit(a);
      closure.insert(a);
      closure.insert(closure_[a].begin(), closure_[a].end());
    }
    mark[name] = Mark::kDone;
  };
  for (const auto &[name, n] : nodes_) visit(name);
}

ViewLattice ViewLattice::from_json(const ordered_json &doc) {
  try {
    std::vector<LatticeNode> nodes;
    for (const auto &n : doc.at("nodes")) {
      LatticeNode node;
      node.name = n.at("name").get<std::string>();
      node.cost = n.at("cost").get<double>();
      node.weight = n.value("weight", 1L);
      for (const auto &a : n.value("ancestors", ordered_json::array())) {
        node.ancestors.insert(a.get<std::string>());
      }
      nodes.push_back(std::move(node));
    }
    return ViewLattice(doc.at("top").get<std::string>(), std::move(nodes));
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("lattice: ") + e.what());
  }
}

ViewLattice ViewLattice::parse(std::string_view text) {
  try {
    return from_json(ordered_json::parse(text.begin(), text.end()));
  } catch (const nlohmann::json::parse_error &e) {
    throw ConfigError(std::string("lattice: ") + e.what());
  }
}

namespace {

ordered_json number(double v) {
  if (std::floor(v) == v && std::fabs(v) < 9e15) return static_cast<long long>(v);
  return v;
}

}  // namespace

ordered_json ViewLattice::to_json() const {
  ordered_json j;
  j["top"] = top_;
  j["nodes"] = ordered_json::array();
  for (const auto &[name, n] : nodes_) {
    j["nodes"].push_back({{"name", name},
                          {"cost", number(n.cost)},
                          {"weight", n.weight},
                          {"ancestors", std::vector<std::string>(n.ancestors.begin(), n.ancestors.end())}});
  }
  return j;
}

const LatticeNode &ViewLattice::node(std::string_view name) const {
  auto it = nodes_.find(std::string(name));
  if (it == nodes_.end()) throw ArgumentError("unknown view '" + std::string(name) + "'");
  return it->second;
}

const std::set<std::string> &ViewLattice::ancestors_of(std::string_view name) const {
  node(name);
  return closure_.at(std::string(name));
}

double benefit(std::string_view view, const std::set<std::string> &materialized,
               const ViewLattice &lattice) {
  const auto &v = lattice.node(view);
  if (materialized.count(v.name)) throw ArgumentError("view '" + v.name + "' is already materialized");
  const LatticeNode *cheapest = nullptr;
  for (const auto &a : lattice.ancestors_of(view)) {
    if (!materialized.count(a)) continue;
    const auto &n = lattice.node(a);
    if (!cheapest || n.cost < cheapest->cost) cheapest = &n;
  }
  if (!cheapest) throw StructuralError("view '" + v.name + "' has no materialized ancestor");
  return std::max(0.0, cheapest->cost - v.cost) * static_cast<double>(v.weight);
}

SelectionResult greedy_select(const ViewLattice &lattice, int k) {
  if (k < 1) throw ArgumentError("k must be at least 1");
  SelectionResult result;
  result.picks.push_back({0, lattice.top(), 0});
  result.materialized.insert(lattice.top());
  for (int round = 1; round < k; ++round) {
    std::map<std::string, double> scores;
    for (const auto &[name, n] : lattice.nodes()) {
      if (!result.materialized.count(name)) scores[name] = benefit(name, result.materialized, lattice);
    }
    if (scores.empty()) break;
    result.rounds.push_back(scores);
    // std::map iterates names in order, so the first maximum wins ties.
    auto best = scores.begin();
    for (auto it = scores.begin(); it != scores.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    if (best->second <= 0) break;
    result.picks.push_back({round, best->first, best->second});
    result.materialized.insert(best->first);
  }
  return result;
}

ordered_json SelectionResult::to_json() const {
  ordered_json j;
  j["picks"] = ordered_json::array();
  for (const auto &p : picks) {
    j["picks"].push_back({{"round", p.round}, {"view", p.view}, {"benefit", number(p.benefit)}});
  }
  j["materialized"] = ordered_json::array();
  for (const auto &p : picks) j["materialized"].push_back(p.view);
  j["rounds"] = ordered_json::array();
  for (const auto &r : rounds) {
    ordered_json scores = ordered_json::object();
    for (const auto &[name, b] : r) scores[name] = number(b);
    j["rounds"].push_back(std::move(scores));
  }
  return j;
}

std::string SelectionResult::table() const {
  std::ostringstream out;
  auto fmt = [](double v) { return number(v).dump(); };
  out << "round  pick        benefit  candidates\n";
  out << "0      " << picks.front().view << std::string(12 - std::min<std::size_t>(11, picks.front().view.size()), ' ')
      << "-        top view\n";
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    std::string pick = i + 1 < picks.size() ? picks[i + 1].view : "(none)";
    std::string value = i + 1 < picks.size() ? fmt(picks[i + 1].benefit) : "0";
    out << i + 1 << std::string(7 - std::to_string(i + 1).size(), ' ') << pick
        << std::string(12 - std::min<std::size_t>(11, pick.size()), ' ') << value
        << std::string(9 - std::min<std::size_t>(8, value.size()), ' ');
    bool first = true;
    for (const auto &[name, b] : rounds[i]) {
      out << (first ? "" : " ") << name << "=" << fmt(b);
      first = false;
    }
    out << "\n";
  }
  out << "materialized:";
  for (const auto &p : picks) out << " " << p.view;
  out << "\n";
  return out.str();
}

}  // namespace qii
