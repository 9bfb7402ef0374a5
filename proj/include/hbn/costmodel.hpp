#ifndef HBN_COSTMODEL_HPP_
#define HBN_COSTMODEL_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hbn/arch.hpp"
#include "hbn/partition.hpp"
#include "hbn/tensor.hpp"

namespace hbn {

struct CostOptions {
  // One full-precision MAC counts as this many binary operations once both
  // operands are binarized.
  double binary_op_equivalence = 58.0;
};

struct LayerCost {
  std::string layer_name;
  std::uint64_t params = 0;
  double bin_params = 0.0;     // params/32, except the first layer keeps full params
  std::uint64_t flops_fprec = 0;
  double repeat_fraction = 0.0;
  bool repeat_missing = false;
  double flops_wbin = 0.0;     // fprec * (1 - repeat)
  double flops_fbin = 0.0;     // wbin / 58 unless input binarization is exempt
  bool input_bin_exempt = false;  // first and last layers keep real inputs
  LayerMode mode = LayerMode::kFullBin;
  double flops_assigned = 0.0;
};

struct CostReport {
  std::string model_name;
  std::vector<LayerCost> rows;

  std::uint64_t total_params = 0;
  double total_bin_params = 0.0;
  double total_fprec = 0.0;
  double total_wbin = 0.0;
  double total_fbin = 0.0;
  double total_hybrid = 0.0;

  double memory_fprec = 0.0;    // parameter-count units (32-bit words)
  double memory_variant = 0.0;  // per the plan's modes
  double compression_ratio = 0.0;

  bool any_repeat_missing = false;
};

struct SpeedupSummary {
  double fprec_x = 0.0;
  double wbin_x = 0.0;
  double fbin_x = 1.0;
  double hybrid_x = 0.0;
};

/// MAC count C_in * C_out * k_h * k_w * h_out * w_out (the FLOPs convention
/// all reports use).
std::uint64_t conv_flops(const LayerSpec& layer, const ResolvedShape& resolved);

/// params / 32: binary weights cost one bit against 32.
double binarized_params(std::uint64_t params);

/// Fraction of redundant sign-binarized 2-D filter slices:
/// 1 - unique / total over all C_out*C_in slices of a (C_out,C_in,kh,kw)
/// weight tensor.
double repeat_fraction(const RealTensor& weights, const LayerSpec& layer);

double effective_flops(const LayerCost& cost, LayerMode mode);

/// Full per-layer and total accounting for the plan. Missing repeat entries
/// count as 0 and set the warning flag on the row.
CostReport model_cost_report(const NetworkArch& arch, const HybridPlan& plan,
                             const std::map<std::string, double>& repeats,
                             const CostOptions& opts = {});

/// Variant totals relative to the fully-binarized baseline.
SpeedupSummary speedup_summary(const CostReport& report);

}  // namespace hbn

#endif  // HBN_COSTMODEL_HPP_
