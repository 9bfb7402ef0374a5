#ifndef HBN_BINARIZE_HPP_
#define HBN_BINARIZE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "hbn/arch.hpp"
#include "hbn/tensor.hpp"

namespace hbn {

/// Sign bits packed 64 per word (bit set <=> value >= 0, i.e. +1) plus the
/// mean-absolute scale of the source tensor. Pad bits past logical_len are 0.
struct BinaryTensor {
  std::vector<std::uint64_t> shape;
  std::vector<std::uint64_t> packed;
  std::uint64_t logical_len = 0;
  double scale = 0.0;  // alpha for weights, beta for inputs; 0 only for all-zero source

  int sign_at(std::uint64_t i) const {
    return (packed[i >> 6] >> (i & 63)) & 1 ? +1 : -1;
  }
};

/// Average binarization error and metric value for one layer.
struct LayerErrorStat {
  std::string layer_name;
  double error = 0.0;       // E, per element
  std::uint64_t sample_count = 0;
  double metric = 0.0;      // M = E + gamma/NF, set by the planner
  std::uint64_t flops = 0;  // NF
};

std::vector<std::uint64_t> pack_bits(const std::vector<int>& signs);
std::vector<int> unpack_bits(const std::vector<std::uint64_t>& packed, std::uint64_t logical_len);

/// Optimal binary approximation: bit i set iff t[i] >= 0 (sgn(0) := +1),
/// scale = mean(|t[i]|).
BinaryTensor sign_binarize(const RealTensor& t);

/// E = ||t - sgn(t)||^2 / n, accumulated in fixed index order (double).
double binarization_error(const RealTensor& t);

/// Variant measured against alpha*sgn(t) instead of sgn(t). Not used by the
/// default pipeline.
double binarization_error_scaled(const RealTensor& t);

/// Mean of binarization_error over samples; every sample must match the
/// layer's resolved input shape. Per-sample errors may be computed
/// concurrently; the mean reduction runs in sample order.
LayerErrorStat layer_error_stats(const std::vector<RealTensor>& samples, const LayerSpec& layer,
                                 const ResolvedShape& resolved, bool scaled = false);

}  // namespace hbn

#endif  // HBN_BINARIZE_HPP_
