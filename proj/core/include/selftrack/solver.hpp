#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "selftrack/graph.hpp"

namespace selftrack {

/// Sum of c_e * y_e over regular and lifted edges.
double objective(const MulticutInstance& instance, const EdgeLabeling& labeling);

/// An edge whose label disagrees with the connectivity of the join subgraph.
struct Violation {
  EdgeKind kind = EdgeKind::Regular;
  std::size_t index = 0;
  NodeId u = 0;
  NodeId v = 0;
  std::uint8_t label = 0;
  bool endpoints_connected = false;

  std::string describe() const;
};

struct FeasibilityReport {
  bool feasible = true;
  std::vector<Violation> violations;

  explicit operator bool() const { return feasible; }
};

/// A labeling is feasible iff for every e=(u,v) in E and F, y_e = 0 exactly
/// when u and v lie in the same component of the join subgraph of G.
///
/// This is equivalent to the cycle, path and cut inequality systems of the
/// (lifted) multicut polytope, without enumerating cycles.
FeasibilityReport check_feasibility(const MulticutInstance& instance, const EdgeLabeling& labeling);

inline bool is_feasible(const MulticutInstance& instance, const EdgeLabeling& labeling) {
  return check_feasibility(instance, labeling).feasible;
}

/// y_e = 1 iff the endpoints lie in different blocks of the connected
/// refinement of the partition. The result is always feasible.
EdgeLabeling partition_to_labeling(const MulticutInstance& instance, const Partition& partition);

/// Objective of the feasible labeling induced by a partition.
double partition_objective(const MulticutInstance& instance, const Partition& partition);

struct Solution {
  Partition partition;
  double objective = 0.0;
};

inline constexpr std::size_t kBruteForceMaxNodes = 12;

/// Exact minimum by enumerating every set partition (restricted growth
/// strings in lexicographic order). The first partition that attains the
/// minimum wins ties. Throws for more than kBruteForceMaxNodes nodes.
Solution solve_bruteforce(const MulticutInstance& instance);

struct GaecResult {
  Solution solution;
  /// Objective after each contraction, starting with the all-cut value.
  std::vector<double> trace;
};

/// Greedy additive edge contraction for lifted multicuts.
///
/// Starting from singletons, repeatedly joins the pair of clusters that share
/// a regular edge and has the largest positive total inter-cluster cost
/// (regular and lifted). Ties go to the smallest canonical pair of cluster
/// representatives. Stops when no such pair has positive total cost.
GaecResult solve_gaec(const MulticutInstance& instance);

struct LocalSearchOptions {
  /// Minimum objective decrease for a move to count as an improvement.
  double min_improvement = 1e-9;
  std::size_t max_passes = 10000;
};

/// Local search over node moves to adjacent clusters, splitting a node off
/// into a new cluster, merging adjacent clusters, and Kernighan-Lin style
/// move sequences on the boundary of two adjacent clusters. Every accepted
/// step strictly lowers the lifted multicut objective; the output is never
/// worse than the connected refinement of the initial partition.
Solution solve_kl(const MulticutInstance& instance, const Partition& initial, const LocalSearchOptions& options = {});

/// GAEC followed by local search.
Solution solve_gaec_kl(const MulticutInstance& instance);

/// Instance text format: "n m k", then m regular and k lifted lines "u v cost".
MulticutInstance read_instance(std::istream& in);
MulticutInstance read_instance_file(const std::string& path);
void write_instance(std::ostream& out, const MulticutInstance& instance);

/// "{0,2}|{1}" style rendering of a partition.
std::string format_partition(const Partition& partition);

}  // namespace selftrack
