#include "hbn/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hbn {

namespace {

void check_conv_shapes(const RealTensor& input, const RealTensor& weights,
                       const LayerSpec& layer) {
  if (input.rank() != 3)
    throw std::invalid_argument("conv: layer '" + layer.name + "': input must be (C,H,W), got " +
                                shape_to_string(input.shape));
  if (weights.rank() != 4)
    throw std::invalid_argument("conv: layer '" + layer.name +
                                "': weights must be (OC,C,KH,KW), got " +
                                shape_to_string(weights.shape));
  if (weights.dim(1) != input.dim(0) || weights.dim(0) != layer.out_channels ||
      weights.dim(1) != layer.in_channels || weights.dim(2) != layer.kernel_h ||
      weights.dim(3) != layer.kernel_w)
    throw std::invalid_argument("conv: layer '" + layer.name + "': weights " +
                                shape_to_string(weights.shape) + " inconsistent with input " +
                                shape_to_string(input.shape) + " and layer spec");
}

std::uint64_t conv_out(std::uint64_t in, std::uint32_t k, std::uint32_t s, std::uint32_t p) {
  return (in + 2ull * p - k) / s + 1;
}

// Shared element kernel: accumulate one output position in (ic, ky, kx) order.
inline double conv_element(const float* in, std::uint64_t C, std::uint64_t H, std::uint64_t W,
                           const float* w, std::uint64_t KH, std::uint64_t KW,
                           std::int64_t oy, std::int64_t ox, std::uint32_t stride,
                           std::uint32_t pad, double acc) {
  for (std::uint64_t ic = 0; ic < C; ++ic) {
    const float* in_c = in + ic * H * W;
    const float* w_c = w + ic * KH * KW;
    for (std::uint64_t ky = 0; ky < KH; ++ky) {
      const std::int64_t iy = oy * stride - pad + static_cast<std::int64_t>(ky);
      if (iy < 0 || iy >= static_cast<std::int64_t>(H)) continue;
      for (std::uint64_t kx = 0; kx < KW; ++kx) {
        const std::int64_t ix = ox * stride - pad + static_cast<std::int64_t>(kx);
        if (ix < 0 || ix >= static_cast<std::int64_t>(W)) continue;
        acc += static_cast<double>(in_c[iy * W + ix]) * static_cast<double>(w_c[ky * KW + kx]);
      }
    }
  }
  return acc;
}

template <bool Parallel>
RealTensor conv2d_impl(const RealTensor& input, const RealTensor& weights, const LayerSpec& layer,
                       const std::vector<float>* bias) {
  check_conv_shapes(input, weights, layer);
  const std::uint64_t C = input.dim(0), H = input.dim(1), W = input.dim(2);
  const std::uint64_t OC = weights.dim(0), KH = weights.dim(2), KW = weights.dim(3);
  const std::uint64_t OH = conv_out(H, layer.kernel_h, layer.stride, layer.padding);
  const std::uint64_t OW = conv_out(W, layer.kernel_w, layer.stride, layer.padding);
  if (bias && bias->size() != OC)
    throw std::invalid_argument("conv: layer '" + layer.name + "': bias length mismatch");

  RealTensor out({OC, OH, OW});
  const float* in = input.data.data();
  const float* wt = weights.data.data();
  float* dst = out.data.data();

#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static) if (Parallel)
#endif
  for (std::int64_t oc = 0; oc < static_cast<std::int64_t>(OC); ++oc) {
    for (std::int64_t oy = 0; oy < static_cast<std::int64_t>(OH); ++oy) {
      const float* w_oc = wt + oc * C * KH * KW;
      float* row = dst + (oc * OH + oy) * OW;
      for (std::int64_t ox = 0; ox < static_cast<std::int64_t>(OW); ++ox) {
        double acc = bias ? static_cast<double>((*bias)[oc]) : 0.0;
        acc = conv_element(in, C, H, W, w_oc, KH, KW, oy, ox, layer.stride, layer.padding, acc);
        row[ox] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

}  // namespace

PackedFilterBank pack_filters(const RealTensor& weights) {
  if (weights.rank() != 4)
    throw std::invalid_argument("pack_filters: expected (OC,C,KH,KW) weights, got " +
                                shape_to_string(weights.shape));
  PackedFilterBank bank;
  bank.out_channels = weights.dim(0);
  bank.field_len = weights.dim(1) * weights.dim(2) * weights.dim(3);
  bank.words_per_filter = (bank.field_len + 63) / 64;
  bank.bits.assign(bank.out_channels * bank.words_per_filter, 0);
  bank.alpha.assign(bank.out_channels, 0.0);

  for (std::uint64_t oc = 0; oc < bank.out_channels; ++oc) {
    const float* w = weights.data.data() + oc * bank.field_len;
    std::uint64_t* bits = bank.bits.data() + oc * bank.words_per_filter;
    double abs_sum = 0.0;
    for (std::uint64_t i = 0; i < bank.field_len; ++i) {
      if (w[i] >= 0.0f) bits[i >> 6] |= std::uint64_t{1} << (i & 63);
      abs_sum += std::fabs(static_cast<double>(w[i]));
    }
    bank.alpha[oc] = abs_sum / static_cast<double>(bank.field_len);
  }
  return bank;
}

std::int64_t xnor_popcount_dot(const std::vector<std::uint64_t>& a,
                               const std::vector<std::uint64_t>& b, std::uint64_t n) {
  const std::size_t words = (n + 63) / 64;
  if (a.size() != words || b.size() != words)
    throw std::invalid_argument("xnor_popcount_dot: packed lengths do not match n");
  std::uint64_t mismatches = 0;
  for (std::size_t i = 0; i < words; ++i) mismatches += std::popcount(a[i] ^ b[i]);
  return static_cast<std::int64_t>(n) - 2 * static_cast<std::int64_t>(mismatches);
}

RealTensor conv2d_reference(const RealTensor& input, const RealTensor& weights,
                            const LayerSpec& layer, const std::vector<float>* bias) {
  return conv2d_impl<false>(input, weights, layer, bias);
}

RealTensor conv2d(const RealTensor& input, const RealTensor& weights, const LayerSpec& layer,
                  const std::vector<float>* bias) {
  return conv2d_impl<true>(input, weights, layer, bias);
}

RealTensor binarized_weight_tensor(const RealTensor& weights) {
  const PackedFilterBank bank = pack_filters(weights);
  RealTensor out(weights.shape);
  for (std::uint64_t oc = 0; oc < bank.out_channels; ++oc) {
    const float a = static_cast<float>(bank.alpha[oc]);
    const std::uint64_t* bits = bank.filter(oc);
    float* w = out.data.data() + oc * bank.field_len;
    for (std::uint64_t i = 0; i < bank.field_len; ++i)
      w[i] = (bits[i >> 6] >> (i & 63)) & 1 ? a : -a;
  }
  return out;
}

RealTensor weightbin_conv2d(const RealTensor& input, const PackedFilterBank& filters,
                            const LayerSpec& layer, const std::vector<float>* bias) {
  RealTensor wq({filters.out_channels, layer.in_channels, layer.kernel_h, layer.kernel_w});
  if (wq.size() != filters.out_channels * filters.field_len)
    throw std::invalid_argument("weightbin_conv2d: filter bank does not match layer '" +
                                layer.name + "'");
  for (std::uint64_t oc = 0; oc < filters.out_channels; ++oc) {
    const float a = static_cast<float>(filters.alpha[oc]);
    const std::uint64_t* bits = filters.filter(oc);
    float* w = wq.data.data() + oc * filters.field_len;
    for (std::uint64_t i = 0; i < filters.field_len; ++i)
      w[i] = (bits[i >> 6] >> (i & 63)) & 1 ? a : -a;
  }
  return conv2d_impl<true>(input, wq, layer, bias);
}

std::vector<std::int64_t> fullbin_correlation(const BinaryTensor& input_bits,
                                              const PackedFilterBank& filters,
                                              const LayerSpec& layer,
                                              const ResolvedShape& shape) {
  const std::uint64_t C = shape.in_channels, H = shape.in_h, W = shape.in_w;
  const std::uint64_t OH = shape.out_h, OW = shape.out_w;
  const std::uint64_t KH = layer.kernel_h, KW = layer.kernel_w;
  if (input_bits.logical_len != C * H * W)
    throw std::invalid_argument("fullbin: layer '" + layer.name +
                                "': packed input length does not match resolved shape");
  if (filters.field_len != C * KH * KW)
    throw std::invalid_argument("fullbin: layer '" + layer.name +
                                "': filter field length does not match window packing");

  const std::size_t words = filters.words_per_filter;
  std::vector<std::int64_t> out(filters.out_channels * OH * OW, 0);

#ifdef _OPENMP
#pragma omp parallel
#endif
  {
    // Per-thread window buffers: sign bits (pad slots forced to +1) and a
    // mask of pad slots so their contribution can be subtracted exactly.
    std::vector<std::uint64_t> window(words), pad_mask(words);
#ifdef _OPENMP
#pragma omp for collapse(2) schedule(static)
#endif
    for (std::int64_t oy = 0; oy < static_cast<std::int64_t>(OH); ++oy) {
      for (std::int64_t ox = 0; ox < static_cast<std::int64_t>(OW); ++ox) {
        std::fill(window.begin(), window.end(), 0);
        std::fill(pad_mask.begin(), pad_mask.end(), 0);
        std::uint64_t slot = 0;
        std::uint64_t pad_count = 0;
        for (std::uint64_t ic = 0; ic < C; ++ic) {
          for (std::uint64_t ky = 0; ky < KH; ++ky) {
            const std::int64_t iy =
                oy * layer.stride - layer.padding + static_cast<std::int64_t>(ky);
            for (std::uint64_t kx = 0; kx < KW; ++kx, ++slot) {
              const std::int64_t ix =
                  ox * layer.stride - layer.padding + static_cast<std::int64_t>(kx);
              if (iy < 0 || iy >= static_cast<std::int64_t>(H) || ix < 0 ||
                  ix >= static_cast<std::int64_t>(W)) {
                window[slot >> 6] |= std::uint64_t{1} << (slot & 63);
                pad_mask[slot >> 6] |= std::uint64_t{1} << (slot & 63);
                ++pad_count;
                continue;
              }
              const std::uint64_t idx = (ic * H + iy) * W + ix;
              if ((input_bits.packed[idx >> 6] >> (idx & 63)) & 1)
                window[slot >> 6] |= std::uint64_t{1} << (slot & 63);
            }
          }
        }
        for (std::uint64_t oc = 0; oc < filters.out_channels; ++oc) {
          const std::uint64_t* f = filters.filter(oc);
          std::uint64_t mismatches = 0;
          std::uint64_t pad_pos = 0;  // pad slots where the filter bit is +1
          for (std::size_t wd = 0; wd < words; ++wd) {
            mismatches += std::popcount(window[wd] ^ f[wd]);
            pad_pos += std::popcount(f[wd] & pad_mask[wd]);
          }
          const std::int64_t dot_total = static_cast<std::int64_t>(filters.field_len) -
                                         2 * static_cast<std::int64_t>(mismatches);
          const std::int64_t dot_pad =
              2 * static_cast<std::int64_t>(pad_pos) - static_cast<std::int64_t>(pad_count);
          out[(oc * OH + oy) * OW + ox] = dot_total - dot_pad;
        }
      }
    }
  }
  return out;
}

RealTensor fullbin_conv2d(const BinaryTensor& input_bits, const PackedFilterBank& filters,
                          const LayerSpec& layer, const ResolvedShape& shape,
                          const std::vector<float>* bias) {
  const std::vector<std::int64_t> corr = fullbin_correlation(input_bits, filters, layer, shape);
  RealTensor out({filters.out_channels, shape.out_h, shape.out_w});
  const std::uint64_t plane = shape.out_h * shape.out_w;
  for (std::uint64_t oc = 0; oc < filters.out_channels; ++oc) {
    const double scale = filters.alpha[oc] * input_bits.scale;
    const double b = bias ? static_cast<double>((*bias)[oc]) : 0.0;
    for (std::uint64_t i = 0; i < plane; ++i)
      out.data[oc * plane + i] =
          static_cast<float>(scale * static_cast<double>(corr[oc * plane + i]) + b);
  }
  return out;
}

namespace {

template <bool Avg>
RealTensor pool_impl(const RealTensor& input, const PoolSpec& pool) {
  if (input.rank() != 3)
    throw std::invalid_argument("pool: input must be (C,H,W), got " +
                                shape_to_string(input.shape));
  const std::uint64_t C = input.dim(0), H = input.dim(1), W = input.dim(2);
  const std::uint64_t OH = pool_out_dim(H, pool), OW = pool_out_dim(W, pool);
  RealTensor out({C, OH, OW});
  for (std::uint64_t c = 0; c < C; ++c) {
    for (std::uint64_t oy = 0; oy < OH; ++oy) {
      for (std::uint64_t ox = 0; ox < OW; ++ox) {
        double acc = Avg ? 0.0 : -std::numeric_limits<double>::infinity();
        std::uint64_t count = 0;
        for (std::uint32_t ky = 0; ky < pool.kernel; ++ky) {
          const std::int64_t iy =
              static_cast<std::int64_t>(oy * pool.stride + ky) - pool.padding;
          if (iy < 0 || iy >= static_cast<std::int64_t>(H)) continue;
          for (std::uint32_t kx = 0; kx < pool.kernel; ++kx) {
            const std::int64_t ix =
                static_cast<std::int64_t>(ox * pool.stride + kx) - pool.padding;
            if (ix < 0 || ix >= static_cast<std::int64_t>(W)) continue;
            const double v = input.data[(c * H + iy) * W + ix];
            if (Avg)
              acc += v;
            else
              acc = std::max(acc, v);
            ++count;
          }
        }
        out.data[(c * OH + oy) * OW + ox] =
            static_cast<float>(Avg ? acc / static_cast<double>(count) : acc);
      }
    }
  }
  return out;
}

RealTensor apply_pool(const RealTensor& t, const PoolSpec& p) {
  return p.kind == PoolKind::kAvg ? avg_pool(t, p) : max_pool(t, p);
}

}  // namespace

RealTensor max_pool(const RealTensor& input, const PoolSpec& pool) {
  return pool_impl<false>(input, pool);
}

RealTensor avg_pool(const RealTensor& input, const PoolSpec& pool) {
  return pool_impl<true>(input, pool);
}

ForwardResult forward(const NetworkArch& arch, const HybridPlan& plan,
                      const std::map<std::string, RealTensor>& weights, const RealTensor& input,
                      const std::map<std::string, std::vector<float>>* biases) {
  const NetworkArch net = arch.shapes_resolved() ? arch : infer_shapes(arch);
  if (plan.entries.size() != net.layers.size())
    throw std::invalid_argument("forward: plan does not cover the architecture");

  ForwardResult res;
  res.layer_inputs.resize(net.layers.size());
  res.layer_outputs.resize(net.layers.size());

  auto run_layer = [&](std::size_t i, const RealTensor& in) -> RealTensor {
    const auto& spec = net.layers[i];
    const auto* entry = plan.find(spec.name);
    if (!entry) throw std::invalid_argument("forward: plan missing layer '" + spec.name + "'");
    const auto wit = weights.find(spec.name);
    if (wit == weights.end())
      throw std::invalid_argument("forward: no weights for layer '" + spec.name + "'");
    const std::vector<float>* bias = nullptr;
    if (spec.bias) {
      if (!biases || !biases->count(spec.name))
        throw std::invalid_argument("forward: layer '" + spec.name +
                                    "' declares bias but none was supplied");
      bias = &biases->at(spec.name);
    }
    res.layer_inputs[i] = in;
    RealTensor out;
    switch (entry->mode) {
      case LayerMode::kFPrec:
        out = conv2d(in, wit->second, spec, bias);
        break;
      case LayerMode::kWeightBin:
        out = weightbin_conv2d(in, pack_filters(wit->second), spec, bias);
        break;
      case LayerMode::kFullBin:
        out = fullbin_conv2d(sign_binarize(in), pack_filters(wit->second), spec, net.resolved[i],
                             bias);
        break;
    }
    res.layer_outputs[i] = out;
    if (spec.pool_after) out = apply_pool(out, *spec.pool_after);
    return out;
  };

  RealTensor cur = input;
  std::size_t i = 0;
  while (i < net.layers.size()) {
    if (!net.layers[i].parallel_group) {
      cur = run_layer(i, cur);
      ++i;
      continue;
    }
    const std::string gid = *net.layers[i].parallel_group;
    const RealTensor group_in = cur;
    std::map<std::uint32_t, RealTensor> branch_out;
    std::size_t j = i;
    for (; j < net.layers.size() && net.layers[j].parallel_group &&
           *net.layers[j].parallel_group == gid;
         ++j) {
      const std::uint32_t b = net.layers[j].branch;
      const RealTensor& in = branch_out.count(b) ? branch_out[b] : group_in;
      branch_out[b] = run_layer(j, in);
    }
    auto it = branch_out.begin();
    RealTensor merged = it->second;
    for (++it; it != branch_out.end(); ++it) {
      if (net.merge == ParallelMerge::kConcat) {
        merged.shape[0] += it->second.shape[0];
        merged.data.insert(merged.data.end(), it->second.data.begin(), it->second.data.end());
      } else {
        if (it->second.shape != merged.shape)
          throw std::invalid_argument("forward: parallel group '" + gid +
                                      "': add-merge shape mismatch");
        for (std::size_t n = 0; n < merged.data.size(); ++n)
          merged.data[n] += it->second.data[n];
      }
    }
    cur = merged;
    i = j;
  }
  res.output = cur;
  return res;
}

}  // namespace hbn
