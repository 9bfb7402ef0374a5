#ifndef HBN_ARCH_HPP_
#define HBN_ARCH_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hbn {

enum class LayerKind { kConv, kLinear };

/// Per-layer compute mode of a hybrid network.
enum class LayerMode { kFPrec, kWeightBin, kFullBin };

const char* layer_mode_name(LayerMode m);
LayerMode layer_mode_from_name(const std::string& name);

enum class PoolKind { kMax, kAvg };

/// Pooling applied to a layer's output before the next layer sees it.
struct PoolSpec {
  PoolKind kind = PoolKind::kMax;
  std::uint32_t kernel = 2;
  std::uint32_t stride = 2;
  std::uint32_t padding = 0;
  bool ceil_mode = false;
};

/// One convolutional (or linear-as-1x1-conv) layer. Linear layers carry
/// kernel 1x1, stride 1, padding 0.
struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::kConv;
  std::uint32_t in_channels = 1;
  std::uint32_t out_channels = 1;
  std::uint32_t kernel_h = 1;
  std::uint32_t kernel_w = 1;
  std::uint32_t stride = 1;
  std::uint32_t padding = 0;
  bool bias = false;

  std::optional<std::uint64_t> params_override;
  std::optional<double> repeat_fraction;
  std::optional<PoolSpec> pool_after;

  // Parallel-group membership. Layers sharing a group id form a group of
  // branches that all read the group's input; branch outputs merge by
  // element-wise add (residual) or channel concat (expand-style).
  std::optional<std::string> parallel_group;
  std::uint32_t branch = 0;

  std::uint64_t weight_count() const {
    return static_cast<std::uint64_t>(in_channels) * out_channels * kernel_h * kernel_w;
  }
  std::uint64_t param_count() const {
    if (params_override) return *params_override;
    return weight_count() + (bias ? out_channels : 0);
  }
};

enum class ParallelMerge { kAdd, kConcat };

/// Resolved spatial extents for one layer after shape inference.
struct ResolvedShape {
  std::uint64_t in_channels = 0, in_h = 0, in_w = 0;
  std::uint64_t out_channels = 0, out_h = 0, out_w = 0;
};

/// Ordered chain of layers with an input shape. Parallel groups are the
/// only non-linear structure; everything else chains front to back.
struct NetworkArch {
  std::string model_name;
  std::uint64_t input_channels = 0, input_h = 0, input_w = 0;
  std::vector<LayerSpec> layers;
  ParallelMerge merge = ParallelMerge::kAdd;  // default; overridable per group
  std::vector<ResolvedShape> resolved;        // filled by infer_shapes

  bool shapes_resolved() const { return resolved.size() == layers.size(); }
  const LayerSpec* find_layer(const std::string& name) const;
  int layer_index(const std::string& name) const;
};

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Walks the chain (and parallel groups) resolving every layer's input and
/// output extents. Output dims follow floor((i + 2p - k)/s) + 1. Throws
/// ShapeError naming the offending layer when a dimension underflows or the
/// channel chain is inconsistent.
NetworkArch infer_shapes(const NetworkArch& arch);

/// Number of layers that participate in partitioning (all conv/linear).
std::size_t count_conv_layers(const NetworkArch& arch);

std::uint64_t pool_out_dim(std::uint64_t in, const PoolSpec& p);

}  // namespace hbn

#endif  // HBN_ARCH_HPP_
