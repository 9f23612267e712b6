#include "selftrack/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

namespace selftrack {

namespace {

struct IncidentEdge {
  NodeId other;
  double cost;
  bool regular;
};

std::vector<std::vector<IncidentEdge>> incidence(const MulticutInstance& instance) {
  std::vector<std::vector<IncidentEdge>> inc(instance.num_nodes());
  for (const auto& e : instance.edges()) {
    inc[e.u].push_back({e.v, e.cost, true});
    inc[e.v].push_back({e.u, e.cost, true});
  }
  for (const auto& e : instance.lifted_edges()) {
    inc[e.u].push_back({e.v, e.cost, false});
    inc[e.v].push_back({e.u, e.cost, false});
  }
  return inc;
}

void require_labeling(const MulticutInstance& instance, const EdgeLabeling& labeling) {
  if (!labeling.matches(instance)) {
    throw std::invalid_argument("edge labeling is not defined on exactly the instance's edges");
  }
}

}  // namespace

double objective(const MulticutInstance& instance, const EdgeLabeling& labeling) {
  require_labeling(instance, labeling);
  double total = 0.0;
  for (std::size_t i = 0; i < instance.num_edges(); ++i) {
    if (labeling.regular[i]) total += instance.edges()[i].cost;
  }
  for (std::size_t i = 0; i < instance.num_lifted_edges(); ++i) {
    if (labeling.lifted[i]) total += instance.lifted_edges()[i].cost;
  }
  return total;
}

std::string Violation::describe() const {
  std::ostringstream os;
  os << (kind == EdgeKind::Regular ? "regular" : "lifted") << " edge #" << index << " (" << u << ", " << v
     << ") labeled " << (label ? "cut" : "join") << " but its endpoints are "
     << (endpoints_connected ? "connected" : "disconnected") << " in the join subgraph";
  return os.str();
}

FeasibilityReport check_feasibility(const MulticutInstance& instance, const EdgeLabeling& labeling) {
  require_labeling(instance, labeling);
  const Partition components = labeling_to_partition(instance, labeling);
  FeasibilityReport report;
  auto check = [&](EdgeKind kind, const std::vector<Edge>& edges, const std::vector<std::uint8_t>& labels) {
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const bool connected = components[edges[i].u] == components[edges[i].v];
      const bool cut = labels[i] != 0;
      if (cut == connected) {
        report.violations.push_back(Violation{kind, i, edges[i].u, edges[i].v, labels[i], connected});
      }
    }
  };
  check(EdgeKind::Regular, instance.edges(), labeling.regular);
  check(EdgeKind::Lifted, instance.lifted_edges(), labeling.lifted);
  report.feasible = report.violations.empty();
  return report;
}

EdgeLabeling partition_to_labeling(const MulticutInstance& instance, const Partition& partition) {
  const Partition refined = connected_refinement(instance, partition);
  EdgeLabeling labeling;
  labeling.regular.reserve(instance.num_edges());
  labeling.lifted.reserve(instance.num_lifted_edges());
  for (const auto& e : instance.edges()) labeling.regular.push_back(refined[e.u] != refined[e.v]);
  for (const auto& e : instance.lifted_edges()) labeling.lifted.push_back(refined[e.u] != refined[e.v]);
  return labeling;
}

double partition_objective(const MulticutInstance& instance, const Partition& partition) {
  return objective(instance, partition_to_labeling(instance, partition));
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration

namespace {

class BruteForce {
 public:
  explicit BruteForce(const MulticutInstance& instance)
      : instance_(instance), n_(instance.num_nodes()), lower_(n_), assign_(n_, 0), best_assign_(n_, 0) {
    for (const auto& edges : {std::cref(instance.edges()), std::cref(instance.lifted_edges())}) {
      for (const auto& e : edges.get()) lower_[e.v].emplace_back(e.u, e.cost);
    }
  }

  Solution run() {
    if (n_ == 0) return Solution{Partition{}, 0.0};
    recurse(0, 0, 0.0);
    return Solution{Partition(best_assign_), partition_objective(instance_, Partition(best_assign_))};
  }

 private:
  void recurse(std::size_t node, std::size_t used, double cut) {
    if (node == n_) {
      if (cut < best_ - kTieTolerance && blocks_connected(used)) {
        best_ = cut;
        best_assign_ = assign_;
      }
      return;
    }
    for (std::size_t block = 0; block <= used; ++block) {
      double delta = 0.0;
      for (const auto& [other, cost] : lower_[node]) {
        if (assign_[other] != block) delta += cost;
      }
      assign_[node] = block;
      recurse(node + 1, std::max(used, block + 1), cut + delta);
    }
  }

  bool blocks_connected(std::size_t num_blocks) const {
    DisjointSets sets(n_);
    std::size_t components = n_;
    for (const auto& e : instance_.edges()) {
      if (assign_[e.u] == assign_[e.v] && sets.unite(e.u, e.v)) --components;
    }
    return components == num_blocks;
  }

  static constexpr double kTieTolerance = 1e-9;

  const MulticutInstance& instance_;
  std::size_t n_;
  std::vector<std::vector<std::pair<NodeId, double>>> lower_;
  std::vector<std::size_t> assign_;
  std::vector<std::size_t> best_assign_;
  double best_ = std::numeric_limits<double>::infinity();
};

}  // namespace

Solution solve_bruteforce(const MulticutInstance& instance) {
  if (instance.num_nodes() > kBruteForceMaxNodes) {
    throw std::invalid_argument("brute-force solver supports at most " + std::to_string(kBruteForceMaxNodes) +
                                " nodes, got " + std::to_string(instance.num_nodes()));
  }
  return BruteForce(instance).run();
}

// ---------------------------------------------------------------------------
// Greedy additive edge contraction

GaecResult solve_gaec(const MulticutInstance& instance) {
  const std::size_t n = instance.num_nodes();
  struct Link {
    double weight = 0.0;
    bool regular = false;
  };
  std::vector<std::unordered_map<std::size_t, Link>> adj(n);
  double total = 0.0;
  auto add = [&](const Edge& e, bool regular) {
    auto& a = adj[e.u][e.v];
    a.weight += e.cost;
    a.regular = a.regular || regular;
    adj[e.v][e.u] = a;
    total += e.cost;
  };
  for (const auto& e : instance.edges()) add(e, true);
  for (const auto& e : instance.lifted_edges()) add(e, false);

  // Largest weight first; among equal weights the smallest (a, b) pair.
  using Entry = std::tuple<double, std::size_t, std::size_t>;
  auto worse = [](const Entry& x, const Entry& y) {
    if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) < std::get<0>(y);
    return std::make_pair(std::get<1>(x), std::get<2>(x)) > std::make_pair(std::get<1>(y), std::get<2>(y));
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> queue(worse);
  for (std::size_t a = 0; a < n; ++a) {
    for (const auto& [b, link] : adj[a]) {
      if (a < b && link.regular && link.weight > 0.0) queue.emplace(link.weight, a, b);
    }
  }

  GaecResult result;
  result.trace.push_back(total);
  std::vector<bool> alive(n, true);
  DisjointSets sets(n);
  while (!queue.empty()) {
    const auto [weight, a, b] = queue.top();
    queue.pop();
    if (!alive[a] || !alive[b]) continue;
    const auto it = adj[a].find(b);
    if (it == adj[a].end() || !it->second.regular || it->second.weight != weight) continue;

    // Cluster ids stay equal to their smallest member.
    const std::size_t keep = std::min(a, b);
    const std::size_t gone = std::max(a, b);
    adj[keep].erase(gone);
    adj[gone].erase(keep);
    for (const auto& [x, link] : adj[gone]) {
      adj[x].erase(gone);
      auto& merged = adj[keep][x];
      merged.weight += link.weight;
      merged.regular = merged.regular || link.regular;
      adj[x][keep] = merged;
      if (merged.regular && merged.weight > 0.0) queue.emplace(merged.weight, std::min(keep, x), std::max(keep, x));
    }
    adj[gone].clear();
    alive[gone] = false;
    sets.unite(keep, gone);
    total -= weight;
    result.trace.push_back(total);
  }

  std::vector<std::size_t> labels(n);
  for (std::size_t v = 0; v < n; ++v) labels[v] = sets.find(v);
  result.solution.partition = Partition(std::move(labels));
  result.solution.objective = partition_objective(instance, result.solution.partition);
  return result;
}

// ---------------------------------------------------------------------------
// Local search

namespace {

class LocalSearch {
 public:
  LocalSearch(const MulticutInstance& instance, const Partition& initial, const LocalSearchOptions& options)
      : instance_(instance), options_(options), inc_(incidence(instance)), n_(instance.num_nodes()) {
    const Partition start = connected_refinement(instance, initial);
    comp_ = start.component_of();
    members_.resize(start.num_components());
    for (std::size_t v = 0; v < n_; ++v) members_[comp_[v]].push_back(static_cast<NodeId>(v));
    sum_.assign(members_.size(), 0.0);
    regular_adjacent_.assign(members_.size(), 0);
    cluster_seen_.assign(members_.size(), 0);
    mark_.assign(n_, 0);
    index_.assign(n_, 0);
  }

  Partition run() {
    for (std::size_t pass = 0; pass < options_.max_passes; ++pass) {
      bool improved = false;
      improved |= node_moves();
      improved |= cluster_merges();
      if (!improved) improved |= boundary_sequences();
      if (!improved) break;
    }
    return Partition(comp_);
  }

 private:
  std::size_t new_cluster() {
    for (std::size_t c = 0; c < members_.size(); ++c) {
      if (members_[c].empty()) return c;
    }
    members_.emplace_back();
    sum_.push_back(0.0);
    regular_adjacent_.push_back(0);
    cluster_seen_.push_back(0);
    return members_.size() - 1;
  }

  void remove_member(std::size_t cluster, NodeId v) {
    auto& m = members_[cluster];
    m.erase(std::find(m.begin(), m.end(), v));
  }

  void insert_member(std::size_t cluster, NodeId v) {
    auto& m = members_[cluster];
    m.insert(std::upper_bound(m.begin(), m.end(), v), v);
    comp_[v] = cluster;
  }

  // Splits `nodes` (all in one cluster) into regular-edge connected pieces.
  // Returns piece index per entry of `nodes`, and the number of pieces.
  std::size_t pieces_of(const std::vector<NodeId>& nodes, std::vector<std::size_t>& piece) {
    piece.assign(nodes.size(), std::numeric_limits<std::size_t>::max());
    if (nodes.empty()) return 0;
    ++stamp_;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      mark_[nodes[i]] = stamp_;
      index_[nodes[i]] = i;
    }
    std::size_t count = 0;
    std::vector<NodeId> stack;
    for (std::size_t s = 0; s < nodes.size(); ++s) {
      if (piece[s] != std::numeric_limits<std::size_t>::max()) continue;
      piece[s] = count;
      stack.push_back(nodes[s]);
      while (!stack.empty()) {
        const NodeId x = stack.back();
        stack.pop_back();
        for (const auto& e : inc_[x]) {
          if (!e.regular || mark_[e.other] != stamp_) continue;
          auto& p = piece[index_[e.other]];
          if (p == std::numeric_limits<std::size_t>::max()) {
            p = count;
            stack.push_back(e.other);
          }
        }
      }
      ++count;
    }
    return count;
  }

  // Total cost of edges that run between different pieces of `nodes`.
  double cost_between_pieces(const std::vector<NodeId>& nodes, const std::vector<std::size_t>& piece) {
    double total = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      for (const auto& e : inc_[nodes[i]]) {
        if (e.other > nodes[i] && mark_[e.other] == stamp_ && piece[index_[e.other]] != piece[i]) total += e.cost;
      }
    }
    return total;
  }

  // Keeps piece 0 in `cluster` and moves every other piece to a fresh cluster.
  void split_cluster(std::size_t cluster, const std::vector<NodeId>& nodes, const std::vector<std::size_t>& piece,
                     std::size_t count) {
    if (count <= 1) return;
    std::vector<std::vector<NodeId>> parts(count);
    for (std::size_t i = 0; i < nodes.size(); ++i) parts[piece[i]].push_back(nodes[i]);
    for (auto& p : parts) std::sort(p.begin(), p.end());
    members_[cluster] = std::move(parts[0]);
    for (std::size_t p = 1; p < count; ++p) {
      const std::size_t c = new_cluster();
      for (NodeId v : parts[p]) comp_[v] = c;
      members_[c] = std::move(parts[p]);
    }
  }

  // Total cost of all edges between two clusters.
  double cost_between(std::size_t a, std::size_t b) const {
    if (members_[a].size() > members_[b].size()) std::swap(a, b);
    double total = 0.0;
    for (NodeId u : members_[a]) {
      for (const auto& e : inc_[u]) {
        if (comp_[e.other] == b) total += e.cost;
      }
    }
    return total;
  }

  void merge_into(std::size_t keep, std::size_t gone) {
    for (NodeId v : members_[gone]) comp_[v] = keep;
    members_[keep].insert(members_[keep].end(), members_[gone].begin(), members_[gone].end());
    std::sort(members_[keep].begin(), members_[keep].end());
    members_[gone].clear();
  }

  bool node_moves() {
    bool improved = false;
    std::vector<std::size_t> touched;
    std::vector<NodeId> rest;
    std::vector<std::size_t> piece;
    for (NodeId v = 0; v < n_; ++v) {
      const std::size_t home = comp_[v];
      touched.clear();
      ++cluster_stamp_;
      for (const auto& e : inc_[v]) {
        const std::size_t c = comp_[e.other];
        if (cluster_seen_[c] != cluster_stamp_) {
          cluster_seen_[c] = cluster_stamp_;
          sum_[c] = 0.0;
          regular_adjacent_[c] = 0;
          touched.push_back(c);
        }
        sum_[c] += e.cost;
        if (e.regular) regular_adjacent_[c] = 1;
      }
      if (cluster_seen_[home] != cluster_stamp_) sum_[home] = 0.0;

      rest.clear();
      for (NodeId u : members_[home]) {
        if (u != v) rest.push_back(u);
      }
      double extra = 0.0;
      const std::size_t count = pieces_of(rest, piece);
      if (count > 1) extra = cost_between_pieces(rest, piece);
      const double loss = sum_[home] + extra;

      double best_gain = options_.min_improvement;
      std::size_t best_target = std::numeric_limits<std::size_t>::max();
      bool split_off = false;
      std::sort(touched.begin(), touched.end());
      for (std::size_t c : touched) {
        if (c == home || !regular_adjacent_[c]) continue;
        const double gain = sum_[c] - loss;
        if (gain > best_gain) {
          best_gain = gain;
          best_target = c;
        }
      }
      if (!rest.empty() && -loss > best_gain) {
        best_gain = -loss;
        split_off = true;
      }
      // Bridge: v joins two clusters it touches and merges them.
      std::size_t bridge_with = std::numeric_limits<std::size_t>::max();
      for (std::size_t i = 0; i < touched.size(); ++i) {
        const std::size_t b = touched[i];
        if (b == home || !regular_adjacent_[b]) continue;
        for (std::size_t j = i + 1; j < touched.size(); ++j) {
          const std::size_t c = touched[j];
          if (c == home || !regular_adjacent_[c]) continue;
          const double gain = sum_[b] + sum_[c] + cost_between(b, c) - loss;
          if (gain > best_gain) {
            best_gain = gain;
            best_target = b;
            bridge_with = c;
            split_off = false;
          }
        }
      }
      if (!split_off && best_target == std::numeric_limits<std::size_t>::max()) continue;

      remove_member(home, v);
      split_cluster(home, rest, piece, count);
      const std::size_t target = split_off ? new_cluster() : best_target;
      insert_member(target, v);
      if (bridge_with != std::numeric_limits<std::size_t>::max()) merge_into(target, bridge_with);
      improved = true;
    }
    return improved;
  }

  bool cluster_merges() {
    struct PairSum {
      double weight = 0.0;
      bool regular = false;
    };
    std::unordered_map<std::uint64_t, PairSum> sums;
    auto accumulate = [&](const Edge& e, bool regular) {
      std::size_t a = comp_[e.u];
      std::size_t b = comp_[e.v];
      if (a == b) return;
      if (a > b) std::swap(a, b);
      auto& s = sums[(static_cast<std::uint64_t>(a) << 32) | b];
      s.weight += e.cost;
      s.regular = s.regular || regular;
    };
    for (const auto& e : instance_.edges()) accumulate(e, true);
    for (const auto& e : instance_.lifted_edges()) accumulate(e, false);

    std::vector<std::pair<double, std::uint64_t>> candidates;
    for (const auto& [key, s] : sums) {
      if (s.regular && s.weight > options_.min_improvement) candidates.emplace_back(s.weight, key);
    }
    std::sort(candidates.begin(), candidates.end(), [](const auto& x, const auto& y) {
      return x.first != y.first ? x.first > y.first : x.second < y.second;
    });
    std::vector<bool> used(members_.size(), false);
    bool improved = false;
    for (const auto& [weight, key] : candidates) {
      const std::size_t a = key >> 32;
      const std::size_t b = key & 0xffffffffu;
      if (used[a] || used[b]) continue;
      used[a] = used[b] = true;
      merge_into(a, b);
      improved = true;
    }
    return improved;
  }

  // Joined cost inside the connected refinement of each of two node sets.
  double joined_cost(const std::vector<NodeId>& nodes) {
    std::vector<std::size_t> piece;
    pieces_of(nodes, piece);
    double total = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      for (const auto& e : inc_[nodes[i]]) {
        if (e.other > nodes[i] && mark_[e.other] == stamp_ && piece[index_[e.other]] == piece[i]) total += e.cost;
      }
    }
    return total;
  }

  // Kernighan-Lin pass on the boundary between two clusters: tentatively
  // move nodes one at a time (best local gain first, each node at most once,
  // negative gains allowed), then keep the prefix with the largest exact gain.
  bool improve_pair(std::size_t a, std::size_t b) {
    std::vector<NodeId> side_a = members_[a];
    std::vector<NodeId> side_b = members_[b];
    const double before = joined_cost(side_a) + joined_cost(side_b);

    std::vector<NodeId> region = side_a;
    region.insert(region.end(), side_b.begin(), side_b.end());
    std::sort(region.begin(), region.end());
    std::unordered_map<NodeId, int> side;
    for (NodeId v : side_a) side[v] = 0;
    for (NodeId v : side_b) side[v] = 1;
    std::unordered_map<NodeId, bool> locked;

    // d[v] = cost to nodes on the other side minus cost to own side.
    auto local_gain = [&](NodeId v) {
      double g = 0.0;
      for (const auto& e : inc_[v]) {
        const auto it = side.find(e.other);
        if (it == side.end()) continue;
        g += (it->second != side[v]) ? e.cost : -e.cost;
      }
      return g;
    };
    std::size_t size_b = side_b.size();
    auto on_boundary = [&](NodeId v) {
      if (size_b == 0) return true;
      for (const auto& e : inc_[v]) {
        if (!e.regular) continue;
        const auto it = side.find(e.other);
        if (it != side.end() && it->second != side[v]) return true;
      }
      return false;
    };

    std::vector<NodeId> sequence;
    double best_gain = options_.min_improvement;
    std::size_t best_length = 0;
    std::vector<NodeId> trial_a, trial_b;
    const std::size_t limit = region.size();
    for (std::size_t step = 0; step < limit; ++step) {
      NodeId pick = 0;
      double pick_gain = -std::numeric_limits<double>::infinity();
      bool found = false;
      for (NodeId v : region) {
        if (locked[v] || !on_boundary(v)) continue;
        const double g = local_gain(v);
        if (g > pick_gain) {
          pick_gain = g;
          pick = v;
          found = true;
        }
      }
      if (!found) break;
      side[pick] = 1 - side[pick];
      size_b += side[pick] == 1 ? 1 : std::size_t(-1);
      locked[pick] = true;
      sequence.push_back(pick);

      trial_a.clear();
      trial_b.clear();
      for (NodeId v : region) (side[v] == 0 ? trial_a : trial_b).push_back(v);
      const double gain = joined_cost(trial_a) + joined_cost(trial_b) - before;
      if (gain > best_gain) {
        best_gain = gain;
        best_length = sequence.size();
      }
    }
    if (best_length == 0) return false;

    for (NodeId v : side_a) side[v] = 0;
    for (NodeId v : side_b) side[v] = 1;
    for (std::size_t i = 0; i < best_length; ++i) side[sequence[i]] = 1 - side[sequence[i]];
    std::vector<NodeId> new_a, new_b;
    for (NodeId v : region) (side[v] == 0 ? new_a : new_b).push_back(v);
    assign_cluster(a, new_a);
    assign_cluster(b, new_b);
    return true;
  }

  // Same pass against an empty cluster, i.e. splitting a cluster in two.
  bool improve_split(std::size_t a) {
    if (members_[a].size() < 2) return false;
    const std::size_t b = new_cluster();
    const bool improved = improve_pair(a, b);
    return improved;
  }

  void assign_cluster(std::size_t cluster, const std::vector<NodeId>& nodes) {
    members_[cluster] = nodes;
    for (NodeId v : nodes) comp_[v] = cluster;
    std::vector<std::size_t> piece;
    const std::size_t count = pieces_of(nodes, piece);
    split_cluster(cluster, nodes, piece, count);
  }

  bool boundary_sequences() {
    std::vector<std::uint64_t> pairs;
    for (const auto& e : instance_.edges()) {
      std::size_t a = comp_[e.u];
      std::size_t b = comp_[e.v];
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      pairs.push_back((static_cast<std::uint64_t>(a) << 32) | b);
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    bool improved = false;
    std::vector<bool> touched(members_.size(), false);
    for (std::uint64_t key : pairs) {
      const std::size_t a = key >> 32;
      const std::size_t b = key & 0xffffffffu;
      if (touched[a] || touched[b] || members_[a].empty() || members_[b].empty()) continue;
      if (improve_pair(a, b)) {
        touched.resize(members_.size(), false);
        touched[a] = touched[b] = true;
        improved = true;
      }
    }
    if (improved) return true;
    const std::size_t clusters = members_.size();
    for (std::size_t a = 0; a < clusters; ++a) improved |= improve_split(a);
    return improved;
  }

  const MulticutInstance& instance_;
  LocalSearchOptions options_;
  std::vector<std::vector<IncidentEdge>> inc_;
  std::size_t n_;
  std::vector<std::size_t> comp_;
  std::vector<std::vector<NodeId>> members_;
  std::vector<double> sum_;
  std::vector<std::uint8_t> regular_adjacent_;
  std::vector<std::uint64_t> mark_;
  std::vector<std::uint64_t> cluster_seen_;
  std::vector<std::size_t> index_;
  std::uint64_t stamp_ = 0;
  std::uint64_t cluster_stamp_ = 0;
};

}  // namespace

Solution solve_kl(const MulticutInstance& instance, const Partition& initial, const LocalSearchOptions& options) {
  if (initial.size() != instance.num_nodes()) {
    throw std::invalid_argument("initial partition does not cover the instance's nodes");
  }
  const double start = partition_objective(instance, initial);
  Partition result = LocalSearch(instance, initial, options).run();
  const double value = partition_objective(instance, result);
  if (value > start) {
    // Never hand back something worse than the refined input.
    Partition refined = connected_refinement(instance, initial);
    return Solution{std::move(refined), start};
  }
  return Solution{std::move(result), value};
}

Solution solve_gaec_kl(const MulticutInstance& instance) {
  return solve_kl(instance, solve_gaec(instance).solution.partition);
}

std::string format_partition(const Partition& partition) {
  std::ostringstream os;
  const auto blocks = partition.blocks();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (b) os << '|';
    os << '{';
    for (std::size_t i = 0; i < blocks[b].size(); ++i) {
      if (i) os << ',';
      os << blocks[b][i];
    }
    os << '}';
  }
  return os.str();
}

}  // namespace selftrack
