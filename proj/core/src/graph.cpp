#include "selftrack/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace selftrack {

namespace {

std::uint64_t pair_key(NodeId u, NodeId v) { return (static_cast<std::uint64_t>(u) << 32) | v; }

void canonicalize(std::vector<Edge>& edges, std::size_t num_nodes, std::unordered_set<std::uint64_t>& seen,
                  const char* what) {
  for (auto& e : edges) {
    if (e.u == e.v) {
      throw std::invalid_argument(std::string(what) + " edge is a self-loop at node " + std::to_string(e.u));
    }
    if (e.u >= num_nodes || e.v >= num_nodes) {
      throw std::invalid_argument(std::string(what) + " edge references a node outside [0, " +
                                  std::to_string(num_nodes) + ")");
    }
    if (!std::isfinite(e.cost)) {
      throw std::invalid_argument(std::string(what) + " edge has a non-finite cost");
    }
    if (e.u > e.v) {
      std::swap(e.u, e.v);
    }
    if (!seen.insert(pair_key(e.u, e.v)).second) {
      throw std::invalid_argument("duplicate node pair (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                                  ") in " + what + " edges");
    }
  }
}

}  // namespace

MulticutInstance::MulticutInstance(std::size_t num_nodes, std::vector<Edge> edges, std::vector<Edge> lifted_edges)
    : num_nodes_(num_nodes), edges_(std::move(edges)), lifted_(std::move(lifted_edges)) {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(edges_.size() + lifted_.size());
  canonicalize(edges_, num_nodes_, seen, "regular");
  canonicalize(lifted_, num_nodes_, seen, "lifted");
}

MulticutInstance MulticutInstance::with_costs(std::span<const double> regular_costs,
                                              std::span<const double> lifted_costs) const {
  if (regular_costs.size() != edges_.size() || lifted_costs.size() != lifted_.size()) {
    throw std::invalid_argument("cost vector sizes do not match the edge sets");
  }
  MulticutInstance out = *this;
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    if (!std::isfinite(regular_costs[i])) throw std::invalid_argument("non-finite regular edge cost");
    out.edges_[i].cost = regular_costs[i];
  }
  for (std::size_t i = 0; i < lifted_.size(); ++i) {
    if (!std::isfinite(lifted_costs[i])) throw std::invalid_argument("non-finite lifted edge cost");
    out.lifted_[i].cost = lifted_costs[i];
  }
  return out;
}

MulticutInstance MulticutInstance::without_lifted() const {
  MulticutInstance out = *this;
  out.lifted_.clear();
  return out;
}

std::vector<std::vector<std::pair<NodeId, std::size_t>>> MulticutInstance::adjacency() const {
  std::vector<std::vector<std::pair<NodeId, std::size_t>>> adj(num_nodes_);
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    adj[edges_[i].u].emplace_back(edges_[i].v, i);
    adj[edges_[i].v].emplace_back(edges_[i].u, i);
  }
  return adj;
}

EdgeLabeling EdgeLabeling::all(const MulticutInstance& instance, std::uint8_t label) {
  return EdgeLabeling{std::vector<std::uint8_t>(instance.num_edges(), label),
                      std::vector<std::uint8_t>(instance.num_lifted_edges(), label)};
}

Partition::Partition(std::vector<std::size_t> labels) : component_of_(std::move(labels)) {
  std::map<std::size_t, std::size_t> remap;
  for (auto& c : component_of_) {
    auto [it, inserted] = remap.try_emplace(c, remap.size());
    c = it->second;
  }
  num_components_ = remap.size();
}

Partition Partition::singletons(std::size_t n) {
  std::vector<std::size_t> labels(n);
  std::iota(labels.begin(), labels.end(), std::size_t{0});
  return Partition(std::move(labels));
}

Partition Partition::single_block(std::size_t n) { return Partition(std::vector<std::size_t>(n, 0)); }

std::vector<std::vector<NodeId>> Partition::blocks() const {
  std::vector<std::vector<NodeId>> out(num_components_);
  for (std::size_t v = 0; v < component_of_.size(); ++v) {
    out[component_of_[v]].push_back(static_cast<NodeId>(v));
  }
  return out;
}

DisjointSets::DisjointSets(std::size_t n) : parent_(n), rank_(n, 1) {
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t DisjointSets::find(std::size_t x) {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

bool DisjointSets::unite(std::size_t a, std::size_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (rank_[a] < rank_[b]) std::swap(a, b);
  parent_[b] = a;
  rank_[a] += rank_[b];
  return true;
}

MulticutInstance build_graph(std::span<const Detection> detections, int max_frame_gap,
                             std::span<const int> lifted_gaps) {
  if (max_frame_gap < 1) {
    throw std::invalid_argument("max_frame_gap must be at least 1");
  }
  for (int gap : lifted_gaps) {
    if (gap <= max_frame_gap) {
      throw std::invalid_argument("lifted gap " + std::to_string(gap) + " must exceed max_frame_gap " +
                                  std::to_string(max_frame_gap) + " so that lifted and regular edges are disjoint");
    }
  }
  std::vector<int> gaps(lifted_gaps.begin(), lifted_gaps.end());
  std::sort(gaps.begin(), gaps.end());
  gaps.erase(std::unique(gaps.begin(), gaps.end()), gaps.end());

  std::map<int, std::vector<NodeId>> by_frame;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (detections[i].frame < 1) {
      throw std::invalid_argument("detection " + std::to_string(i) + " has frame < 1");
    }
    by_frame[detections[i].frame].push_back(static_cast<NodeId>(i));
  }

  std::vector<Edge> edges;
  std::vector<Edge> lifted;
  auto connect = [&](NodeId i, int other_frame, std::vector<Edge>& out) {
    auto it = by_frame.find(other_frame);
    if (it == by_frame.end()) return;
    for (NodeId j : it->second) {
      out.push_back(Edge{std::min(i, j), std::max(i, j), 0.0});
    }
  };
  for (const auto& [frame, nodes] : by_frame) {
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      for (std::size_t b = a + 1; b < nodes.size(); ++b) {
        edges.push_back(Edge{std::min(nodes[a], nodes[b]), std::max(nodes[a], nodes[b]), 0.0});
      }
    }
    for (NodeId i : nodes) {
      for (int gap = 1; gap <= max_frame_gap; ++gap) connect(i, frame + gap, edges);
      for (int gap : gaps) connect(i, frame + gap, lifted);
    }
  }
  return MulticutInstance(detections.size(), std::move(edges), std::move(lifted));
}

Partition labeling_to_partition(const MulticutInstance& instance, const EdgeLabeling& labeling) {
  if (labeling.regular.size() != instance.num_edges()) {
    throw std::invalid_argument("labeling does not match the instance's regular edges");
  }
  DisjointSets sets(instance.num_nodes());
  const auto& edges = instance.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (labeling.regular[i] == 0) sets.unite(edges[i].u, edges[i].v);
  }
  std::vector<std::size_t> labels(instance.num_nodes());
  for (std::size_t v = 0; v < labels.size(); ++v) labels[v] = sets.find(v);
  return Partition(std::move(labels));
}

Partition connected_refinement(const MulticutInstance& instance, const Partition& partition) {
  if (partition.size() != instance.num_nodes()) {
    throw std::invalid_argument("partition does not cover the instance's nodes");
  }
  DisjointSets sets(instance.num_nodes());
  for (const auto& e : instance.edges()) {
    if (partition[e.u] == partition[e.v]) sets.unite(e.u, e.v);
  }
  std::vector<std::size_t> labels(instance.num_nodes());
  for (std::size_t v = 0; v < labels.size(); ++v) labels[v] = sets.find(v);
  return Partition(std::move(labels));
}

}  // namespace selftrack
