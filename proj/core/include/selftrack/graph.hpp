#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "selftrack/geometry.hpp"

namespace selftrack {

using NodeId = std::uint32_t;

/// Undirected weighted pair, stored canonically with u < v.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;
  double cost = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

enum class EdgeKind : std::uint8_t { Regular, Lifted };

/// Graph G=(V,E) plus lifted edges F with real costs on E and F.
///
/// Lifted edges contribute to the objective but never to connectivity. The
/// constructor canonicalizes every pair to u < v and rejects self-loops,
/// out-of-range ids, non-finite costs and any pair that occurs twice within
/// or across the two edge sets.
class MulticutInstance {
 public:
  MulticutInstance() = default;
  MulticutInstance(std::size_t num_nodes, std::vector<Edge> edges, std::vector<Edge> lifted_edges = {});

  std::size_t num_nodes() const { return num_nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Edge>& lifted_edges() const { return lifted_; }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t num_lifted_edges() const { return lifted_.size(); }

  /// Copy with replaced costs, index-aligned with edges() and lifted_edges().
  MulticutInstance with_costs(std::span<const double> regular_costs, std::span<const double> lifted_costs) const;

  /// Copy without lifted edges.
  MulticutInstance without_lifted() const;

  /// Regular-edge adjacency: for each node, (neighbor, edge index) pairs.
  std::vector<std::vector<std::pair<NodeId, std::size_t>>> adjacency() const;

 private:
  std::size_t num_nodes_ = 0;
  std::vector<Edge> edges_;
  std::vector<Edge> lifted_;
};

/// 0/1 labels index-aligned with an instance's edge lists; 1 = cut, 0 = join.
struct EdgeLabeling {
  std::vector<std::uint8_t> regular;
  std::vector<std::uint8_t> lifted;

  static EdgeLabeling all(const MulticutInstance& instance, std::uint8_t label);

  bool matches(const MulticutInstance& instance) const {
    return regular.size() == instance.num_edges() && lifted.size() == instance.num_lifted_edges();
  }

  friend bool operator==(const EdgeLabeling&, const EdgeLabeling&) = default;
};

/// Node-to-component map with contiguous ids 0..k-1.
///
/// Ids are normalized to first-appearance order, so two partitions that
/// differ only by a relabeling of components compare equal.
class Partition {
 public:
  Partition() = default;
  explicit Partition(std::vector<std::size_t> labels);

  static Partition singletons(std::size_t n);
  static Partition single_block(std::size_t n);

  std::size_t size() const { return component_of_.size(); }
  std::size_t num_components() const { return num_components_; }
  std::size_t operator[](std::size_t node) const { return component_of_[node]; }
  const std::vector<std::size_t>& component_of() const { return component_of_; }

  /// Members of each component in ascending node order.
  std::vector<std::vector<NodeId>> blocks() const;

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<std::size_t> component_of_;
  std::size_t num_components_ = 0;
};

/// Union-find with path halving and union by size.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n);
  std::size_t find(std::size_t x);
  bool unite(std::size_t a, std::size_t b);
  std::size_t size() const { return parent_.size(); }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> rank_;
};

/// Detection graph with unset (zero) costs.
///
/// Node i is detections[i]. Regular edges join every pair whose frame
/// distance lies in [0, max_frame_gap], so same-frame pairs are included.
/// Lifted edges join every pair whose frame distance equals one of
/// lifted_gaps. Throws if max_frame_gap < 1 or a lifted gap does not exceed
/// max_frame_gap.
MulticutInstance build_graph(std::span<const Detection> detections, int max_frame_gap,
                             std::span<const int> lifted_gaps);

/// Components of the join subgraph of the regular edges; lifted labels are ignored.
Partition labeling_to_partition(const MulticutInstance& instance, const EdgeLabeling& labeling);

/// Connected components of the regular edges restricted to each block.
///
/// A block that is disconnected in G is split into its connected pieces.
Partition connected_refinement(const MulticutInstance& instance, const Partition& partition);

}  // namespace selftrack
