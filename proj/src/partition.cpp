#include "hbn/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace hbn {

const HybridPlan::Entry* HybridPlan::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.layer_name == name) return &e;
  return nullptr;
}

double compute_metric(double error, std::uint64_t flops, double gamma) {
  if (flops == 0) throw std::invalid_argument("compute_metric: degenerate layer with 0 FLOPs");
  if (!std::isfinite(error) || error < 0)
    throw std::invalid_argument("compute_metric: error must be finite and nonnegative");
  if (!std::isfinite(gamma) || gamma <= 0)
    throw std::invalid_argument("compute_metric: gamma must be positive");
  return error + gamma / static_cast<double>(flops);
}

double auto_gamma(const std::vector<double>& errors, const std::vector<std::uint64_t>& flops) {
  if (errors.empty() || errors.size() != flops.size())
    throw std::invalid_argument("auto_gamma: mismatched or empty inputs");
  double mean_e = 0.0, mean_inv_nf = 0.0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (flops[i] == 0) throw std::invalid_argument("auto_gamma: layer with 0 FLOPs");
    mean_e += errors[i];
    mean_inv_nf += 1.0 / static_cast<double>(flops[i]);
  }
  mean_e /= static_cast<double>(errors.size());
  mean_inv_nf /= static_cast<double>(errors.size());
  if (mean_e == 0.0) return 1.0;  // documented fallback
  return mean_e / mean_inv_nf;
}

namespace {

// Distinct sorted values with multiplicities; ties never split.
struct Runs {
  std::vector<double> value;
  std::vector<std::uint64_t> count;
};

Runs make_runs(std::vector<double> sorted) {
  Runs r;
  for (double v : sorted) {
    if (!r.value.empty() && r.value.back() == v) {
      ++r.count.back();
    } else {
      r.value.push_back(v);
      r.count.push_back(1);
    }
  }
  return r;
}

}  // namespace

KMeansResult kmeans_1d(const std::vector<double>& values, std::uint32_t k) {
  if (values.empty()) throw std::invalid_argument("kmeans_1d: empty input");

  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const Runs runs = make_runs(sorted);
  const std::size_t d = runs.value.size();
  if (k < 1 || k > d)
    throw std::invalid_argument("kmeans_1d: k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(d) + " distinct values]");

  // Weighted prefix sums over runs.
  std::vector<double> pref_w(d + 1, 0), pref_s(d + 1, 0), pref_q(d + 1, 0);
  for (std::size_t i = 0; i < d; ++i) {
    const double w = static_cast<double>(runs.count[i]);
    pref_w[i + 1] = pref_w[i] + w;
    pref_s[i + 1] = pref_s[i] + w * runs.value[i];
    pref_q[i + 1] = pref_q[i] + w * runs.value[i] * runs.value[i];
  }
  auto sse = [&](std::size_t a, std::size_t b) {  // runs [a, b]
    const double w = pref_w[b + 1] - pref_w[a];
    const double s = pref_s[b + 1] - pref_s[a];
    const double q = pref_q[b + 1] - pref_q[a];
    return std::max(0.0, q - s * s / w);
  };

  // cost[m][j]: best split of runs 0..j into m+1 clusters; cut[m][j]: first
  // run of the last cluster. Smallest cut wins ties, so results are
  // deterministic.
  std::vector<std::vector<double>> cost(k, std::vector<double>(d, 0.0));
  std::vector<std::vector<std::size_t>> cut(k, std::vector<std::size_t>(d, 0));
  for (std::size_t j = 0; j < d; ++j) cost[0][j] = sse(0, j);
  for (std::uint32_t m = 1; m < k; ++m) {
    for (std::size_t j = m; j < d; ++j) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_i = m;
      for (std::size_t i = m; i <= j; ++i) {
        const double c = cost[m - 1][i - 1] + sse(i, j);
        if (c < best) {
          best = c;
          best_i = i;
        }
      }
      cost[m][j] = best;
      cut[m][j] = best_i;
    }
  }

  // Recover cluster boundaries (run index ranges).
  std::vector<std::size_t> start(k);
  {
    std::size_t j = d - 1;
    for (std::uint32_t m = k; m-- > 0;) {
      start[m] = (m == 0) ? 0 : cut[m][j];
      if (m > 0) j = start[m] - 1;
    }
  }

  std::vector<std::uint32_t> run_cluster(d);
  for (std::uint32_t m = 0; m < k; ++m) {
    const std::size_t lo = start[m];
    const std::size_t hi = (m + 1 < k) ? start[m + 1] - 1 : d - 1;
    for (std::size_t r = lo; r <= hi; ++r) run_cluster[r] = m;
  }

  KMeansResult out;
  out.cost = cost[k - 1][d - 1];
  out.means.assign(k, 0.0);
  std::vector<double> weight(k, 0.0);
  for (std::size_t r = 0; r < d; ++r) {
    out.means[run_cluster[r]] += runs.value[r] * static_cast<double>(runs.count[r]);
    weight[run_cluster[r]] += static_cast<double>(runs.count[r]);
  }
  for (std::uint32_t m = 0; m < k; ++m) out.means[m] /= weight[m];

  out.assignment.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto it = std::lower_bound(runs.value.begin(), runs.value.end(), values[i]);
    out.assignment[i] = run_cluster[static_cast<std::size_t>(it - runs.value.begin())];
  }
  return out;
}

PartitionResult partition(const std::vector<LayerErrorStat>& metrics,
                          const PartitionConfig& config) {
  const std::size_t P = metrics.size();
  if (P < 2) throw std::invalid_argument("partition: need at least 2 layers");
  if (config.ratio <= 0.0 || config.ratio > 1.0)
    throw std::invalid_argument("partition: ratio must be in (0, 1]");

  std::vector<double> values(P);
  for (std::size_t i = 0; i < P; ++i) values[i] = metrics[i].metric;

  if (config.naive_sort_strategy) {
    // Baseline: convert the floor(R*P) highest-metric layers directly.
    std::vector<std::size_t> order(P);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return values[a] > values[b];
    });
    const auto K = static_cast<std::uint32_t>(config.ratio * static_cast<double>(P) + 1e-12);
    PartitionResult r;
    r.cluster_count = 0;
    r.top_cluster_size = K;
    r.ratio_achieved = static_cast<double>(K) / static_cast<double>(P);
    for (std::uint32_t i = 0; i < K; ++i) r.to_convert.insert(metrics[order[i]].layer_name);
    return r;
  }

  std::size_t distinct = 1;
  {
    std::vector<double> s = values;
    std::sort(s.begin(), s.end());
    distinct = make_runs(s).value.size();
  }
  if (distinct < 2)
    throw PartitionError("partition: all metric values are tied; choose layers manually", 1.0);

  double min_ratio = 1.0;
  for (std::uint32_t n = 2; n <= P; ++n) {
    const auto k = static_cast<std::uint32_t>(std::min<std::size_t>(n, distinct));
    const KMeansResult km = kmeans_1d(values, k);
    std::uint32_t top = 0;
    for (auto c : km.assignment)
      if (c == k - 1) ++top;
    const double ratio = static_cast<double>(top) / static_cast<double>(P);
    min_ratio = std::min(min_ratio, ratio);
    if (ratio <= config.ratio + 1e-12) {
      PartitionResult r;
      r.cluster_count = n;
      r.assignments = km.assignment;
      r.top_cluster_size = top;
      r.ratio_achieved = ratio;
      for (std::size_t i = 0; i < P; ++i)
        if (km.assignment[i] == k - 1) r.to_convert.insert(metrics[i].layer_name);
      return r;
    }
  }
  throw PartitionError("partition: no cluster count satisfies ratio " +
                           std::to_string(config.ratio) + "; minimum achievable is " +
                           std::to_string(min_ratio),
                       min_ratio);
}

HybridPlan build_hybrid_plan(const NetworkArch& arch, const PartitionResult& result,
                             const PartitionConfig& config) {
  if (arch.layers.empty()) throw std::invalid_argument("build_hybrid_plan: empty arch");
  for (const auto& name : result.to_convert)
    if (!arch.find_layer(name))
      throw std::invalid_argument("build_hybrid_plan: to_convert names unknown layer '" + name +
                                  "'");

  const NetworkArch resolved = arch.shapes_resolved() ? arch : infer_shapes(arch);

  HybridPlan plan;
  plan.entries.resize(arch.layers.size());
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    auto& e = plan.entries[i];
    e.layer_name = arch.layers[i].name;
    if (result.to_convert.count(e.layer_name)) {
      e.mode = LayerMode::kWeightBin;
    } else {
      e.mode = LayerMode::kFullBin;
    }
    e.provenance = "partition";
  }

  if (config.parallel_small_to_weightbin) {
    // Total FLOPs per branch of each parallel group; the lightest branch is
    // weight-binarized.
    struct BranchKey {
      std::string group;
      std::uint32_t branch;
      bool operator<(const BranchKey& o) const {
        return group != o.group ? group < o.group : branch < o.branch;
      }
    };
    std::map<BranchKey, double> branch_flops;
    std::map<BranchKey, std::vector<std::size_t>> branch_members;
    for (std::size_t i = 0; i < arch.layers.size(); ++i) {
      const auto& l = arch.layers[i];
      if (!l.parallel_group) continue;
      const auto& r = resolved.resolved[i];
      const double f = static_cast<double>(l.weight_count()) *
                       static_cast<double>(r.out_h * r.out_w);
      BranchKey key{*l.parallel_group, l.branch};
      branch_flops[key] += f;
      branch_members[key].push_back(i);
    }
    std::map<std::string, BranchKey> smallest;
    std::map<std::string, std::size_t> branches_in_group;
    for (const auto& [key, f] : branch_flops) {
      ++branches_in_group[key.group];
      auto it = smallest.find(key.group);
      if (it == smallest.end() || f < branch_flops[it->second]) smallest[key.group] = key;
    }
    for (const auto& [group, key] : smallest) {
      if (branches_in_group[group] < 2) continue;
      for (std::size_t i : branch_members[key]) {
        if (i == 0) continue;  // first-layer rule outranks this one
        auto& e = plan.entries[i];
        if (e.mode != LayerMode::kWeightBin) {
          e.mode = LayerMode::kWeightBin;
          e.provenance = "parallel-small";
        }
      }
    }
  }

  if (config.binarize_last_layer_weights && arch.layers.size() > 1) {
    auto& e = plan.entries.back();
    if (e.mode != LayerMode::kWeightBin) {
      e.mode = LayerMode::kWeightBin;
      e.provenance = "last-layer";
    }
  }

  if (config.first_layer_full_precision) {
    plan.entries.front().mode = LayerMode::kFPrec;
    plan.entries.front().provenance = "first-layer";
  }
  return plan;
}

}  // namespace hbn
