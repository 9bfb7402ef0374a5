#ifndef HBN_KERNELS_HPP_
#define HBN_KERNELS_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hbn/arch.hpp"
#include "hbn/binarize.hpp"
#include "hbn/partition.hpp"
#include "hbn/tensor.hpp"

namespace hbn {

/// Sign bits of each filter's flattened receptive field (in_channels * kh * kw
/// per output channel, padded to 64-bit words) plus the per-filter
/// mean-absolute scale.
struct PackedFilterBank {
  std::uint64_t out_channels = 0;
  std::uint64_t field_len = 0;  // receptive field length n
  std::size_t words_per_filter = 0;
  std::vector<std::uint64_t> bits;  // out_channels x words_per_filter
  std::vector<double> alpha;

  const std::uint64_t* filter(std::uint64_t oc) const { return bits.data() + oc * words_per_filter; }
};

/// Packs a (C_out, C_in, kh, kw) weight tensor; alpha[oc] = mean |W[oc]|.
PackedFilterBank pack_filters(const RealTensor& weights);

/// Dot product of two packed ±1 vectors: n - 2*popcount(a xor b). Pad bits
/// must be zero on both sides.
std::int64_t xnor_popcount_dot(const std::vector<std::uint64_t>& a,
                               const std::vector<std::uint64_t>& b, std::uint64_t n);

/// Naive serial cross-correlation, fixed accumulation order (ic, ky, kx with
/// a double accumulator). The oracle every other kernel is checked against.
RealTensor conv2d_reference(const RealTensor& input, const RealTensor& weights,
                            const LayerSpec& layer, const std::vector<float>* bias = nullptr);

/// Same arithmetic as conv2d_reference, parallel across output elements.
/// Per-element accumulation order is unchanged, so results are identical for
/// any thread count.
RealTensor conv2d(const RealTensor& input, const RealTensor& weights, const LayerSpec& layer,
                  const std::vector<float>* bias = nullptr);

/// Convolution with weights alpha*sgn(W); equals conv2d_reference on the
/// materialized binarized weight tensor.
RealTensor weightbin_conv2d(const RealTensor& input, const PackedFilterBank& filters,
                            const LayerSpec& layer, const std::vector<float>* bias = nullptr);

/// The float weight tensor alpha*sgn(W) that weightbin_conv2d effectively
/// convolves with (test/oracle helper).
RealTensor binarized_weight_tensor(const RealTensor& weights);

/// Integer XNOR-popcount correlation map (out_channels x oh x ow, row-major).
/// Zero-padded positions contribute nothing, matching a zero-padded reference
/// on sign tensors.
std::vector<std::int64_t> fullbin_correlation(const BinaryTensor& input_bits,
                                              const PackedFilterBank& filters,
                                              const LayerSpec& layer,
                                              const ResolvedShape& shape);

/// Fully binarized convolution: alpha * beta * (integer correlation).
RealTensor fullbin_conv2d(const BinaryTensor& input_bits, const PackedFilterBank& filters,
                          const LayerSpec& layer, const ResolvedShape& shape,
                          const std::vector<float>* bias = nullptr);

RealTensor max_pool(const RealTensor& input, const PoolSpec& pool);
RealTensor avg_pool(const RealTensor& input, const PoolSpec& pool);

struct ForwardResult {
  std::vector<RealTensor> layer_inputs;   // tensor fed to each layer, pre-binarization
  std::vector<RealTensor> layer_outputs;  // per-layer conv output (before pooling)
  RealTensor output;                      // network output after the final layer (and pool)
};

/// Runs the chain dispatching each layer on its plan mode, capturing every
/// layer's input. Weights keyed by layer name; bias tensors (when a layer
/// declares one) keyed the same in `biases`.
ForwardResult forward(const NetworkArch& arch, const HybridPlan& plan,
                      const std::map<std::string, RealTensor>& weights, const RealTensor& input,
                      const std::map<std::string, std::vector<float>>* biases = nullptr);

}  // namespace hbn

#endif  // HBN_KERNELS_HPP_
