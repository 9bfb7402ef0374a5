#ifndef HBN_PARTITION_HPP_
#define HBN_PARTITION_HPP_

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hbn/arch.hpp"
#include "hbn/binarize.hpp"

namespace hbn {

struct PartitionConfig {
  double ratio = 0.4;                       // R in (0,1]
  std::optional<double> gamma;              // explicit tradeoff; unset = auto
  bool first_layer_full_precision = true;
  bool binarize_last_layer_weights = false; // hybrid-2 switch
  bool parallel_small_to_weightbin = true;
  bool naive_sort_strategy = false;         // sort-by-metric baseline instead of clustering
};

struct PartitionError : std::runtime_error {
  double min_achievable_ratio;
  PartitionError(const std::string& msg, double min_ratio)
      : std::runtime_error(msg), min_achievable_ratio(min_ratio) {}
};

struct KMeansResult {
  std::vector<std::uint32_t> assignment;  // input index -> cluster id, ascending-mean order
  std::vector<double> means;
  double cost = 0.0;  // total within-cluster sum of squared deviations
};

struct PartitionResult {
  std::uint32_t cluster_count = 0;              // N at which the loop stopped
  std::vector<std::uint32_t> assignments;       // per metric index
  std::uint32_t top_cluster_size = 0;           // K
  std::set<std::string> to_convert;             // members of the highest-mean cluster
  double ratio_achieved = 0.0;                  // K/P
};

struct HybridPlan {
  struct Entry {
    std::string layer_name;
    LayerMode mode = LayerMode::kFullBin;
    std::string provenance;  // first-layer | partition | parallel-small | last-layer
    double metric = 0.0;
    double error = 0.0;
    std::uint64_t flops = 0;
  };
  std::vector<Entry> entries;

  const Entry* find(const std::string& name) const;
};

/// M = E + gamma / NF.
double compute_metric(double error, std::uint64_t flops, double gamma);

/// gamma = mean(E) / mean(1/NF): balances the mean magnitude of the two
/// metric terms. All-zero errors fall back to gamma = 1.
double auto_gamma(const std::vector<double>& errors, const std::vector<std::uint64_t>& flops);

/// Globally optimal 1-D k-means by dynamic programming over the sorted
/// distinct values (exact ties always share a cluster). Requires
/// 1 <= k <= number of distinct values. Clusters come out in ascending-mean
/// order and the assignment is deterministic.
KMeansResult kmeans_1d(const std::vector<double>& values, std::uint32_t k);

/// Algorithm: for N = 2..P cluster the metric values and stop at the first N
/// whose highest-mean cluster holds at most ratio*P layers. Throws
/// PartitionError (with the minimum achievable ratio) when no N satisfies.
PartitionResult partition(const std::vector<LayerErrorStat>& metrics, const PartitionConfig& config);

/// Applies the mode rules: layer 1 stays a full-precision conv, to_convert
/// layers become weight-binarized, the rest fully binarized; then the
/// smaller branch of each parallel group and (optionally) the last layer are
/// weight-binarized. First-layer full precision beats every other claim.
HybridPlan build_hybrid_plan(const NetworkArch& arch, const PartitionResult& result,
                             const PartitionConfig& config);

}  // namespace hbn

#endif  // HBN_PARTITION_HPP_
