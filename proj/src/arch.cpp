#include "hbn/arch.hpp"

#include <map>
#include <stdexcept>

namespace hbn {

const char* layer_mode_name(LayerMode m) {
  switch (m) {
    case LayerMode::kFPrec: return "fprec";
    case LayerMode::kWeightBin: return "weightbin";
    case LayerMode::kFullBin: return "fullbin";
  }
  return "?";
}

LayerMode layer_mode_from_name(const std::string& name) {
  if (name == "fprec") return LayerMode::kFPrec;
  if (name == "weightbin") return LayerMode::kWeightBin;
  if (name == "fullbin") return LayerMode::kFullBin;
  throw std::invalid_argument("unknown layer mode: " + name);
}

const LayerSpec* NetworkArch::find_layer(const std::string& name) const {
  for (const auto& l : layers)
    if (l.name == name) return &l;
  return nullptr;
}

int NetworkArch::layer_index(const std::string& name) const {
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].name == name) return static_cast<int>(i);
  return -1;
}

std::uint64_t pool_out_dim(std::uint64_t in, const PoolSpec& p) {
  const std::int64_t padded = static_cast<std::int64_t>(in) + 2 * p.padding - p.kernel;
  if (padded < 0) throw ShapeError("pool window larger than padded input");
  std::uint64_t out = static_cast<std::uint64_t>(padded) / p.stride + 1;
  if (p.ceil_mode && static_cast<std::uint64_t>(padded) % p.stride != 0) ++out;
  return out;
}

namespace {

std::uint64_t conv_out_dim(std::uint64_t in, std::uint32_t k, std::uint32_t s,
                           std::uint32_t p, const std::string& layer, const char* axis) {
  const std::int64_t padded = static_cast<std::int64_t>(in) + 2 * static_cast<std::int64_t>(p) -
                              static_cast<std::int64_t>(k);
  if (padded < 0)
    throw ShapeError("layer '" + layer + "': kernel " + std::to_string(k) +
                     " exceeds padded input " + axis + "=" + std::to_string(in + 2 * p));
  const std::uint64_t out = static_cast<std::uint64_t>(padded) / s + 1;
  if (out < 1)
    throw ShapeError("layer '" + layer + "': output " + axis + " underflows (" +
                     std::to_string(out) + ")");
  return out;
}

struct ChainState {
  std::uint64_t ch, h, w;
};

}  // namespace

NetworkArch infer_shapes(const NetworkArch& arch) {
  if (arch.input_channels < 1 || arch.input_h < 1 || arch.input_w < 1)
    throw ShapeError("input shape not set");

  NetworkArch out = arch;
  out.resolved.assign(arch.layers.size(), ResolvedShape{});

  ChainState cur{arch.input_channels, arch.input_h, arch.input_w};

  std::size_t i = 0;
  while (i < arch.layers.size()) {
    const auto& spec = arch.layers[i];
    if (!spec.parallel_group) {
      ResolvedShape r;
      r.in_channels = cur.ch;
      r.in_h = cur.h;
      r.in_w = cur.w;
      if (spec.in_channels != cur.ch)
        throw ShapeError("layer '" + spec.name + "': declared in_channels " +
                         std::to_string(spec.in_channels) + " != chained channels " +
                         std::to_string(cur.ch));
      r.out_channels = spec.out_channels;
      r.out_h = conv_out_dim(cur.h, spec.kernel_h, spec.stride, spec.padding, spec.name, "h");
      r.out_w = conv_out_dim(cur.w, spec.kernel_w, spec.stride, spec.padding, spec.name, "w");
      out.resolved[i] = r;
      cur = {r.out_channels, r.out_h, r.out_w};
      if (spec.pool_after) {
        cur.h = pool_out_dim(cur.h, *spec.pool_after);
        cur.w = pool_out_dim(cur.w, *spec.pool_after);
      }
      ++i;
      continue;
    }

    // Parallel group: consecutive layers sharing the id. Every branch starts
    // from the group input; branch outputs must agree spatially.
    const std::string gid = *spec.parallel_group;
    const ChainState group_in = cur;
    std::map<std::uint32_t, ChainState> branch_out;
    std::size_t j = i;
    for (; j < arch.layers.size() && arch.layers[j].parallel_group &&
           *arch.layers[j].parallel_group == gid;
         ++j) {
      const auto& member = arch.layers[j];
      ChainState in = branch_out.count(member.branch) ? branch_out[member.branch] : group_in;
      ResolvedShape r;
      r.in_channels = in.ch;
      r.in_h = in.h;
      r.in_w = in.w;
      if (member.in_channels != in.ch)
        throw ShapeError("layer '" + member.name + "': declared in_channels " +
                         std::to_string(member.in_channels) + " != branch channels " +
                         std::to_string(in.ch));
      r.out_channels = member.out_channels;
      r.out_h = conv_out_dim(in.h, member.kernel_h, member.stride, member.padding, member.name, "h");
      r.out_w = conv_out_dim(in.w, member.kernel_w, member.stride, member.padding, member.name, "w");
      out.resolved[j] = r;
      ChainState bo{r.out_channels, r.out_h, r.out_w};
      if (member.pool_after) {
        bo.h = pool_out_dim(bo.h, *member.pool_after);
        bo.w = pool_out_dim(bo.w, *member.pool_after);
      }
      branch_out[member.branch] = bo;
    }

    auto it = branch_out.begin();
    ChainState merged = it->second;
    for (++it; it != branch_out.end(); ++it) {
      if (it->second.h != merged.h || it->second.w != merged.w)
        throw ShapeError("parallel group '" + gid + "': branch spatial dims disagree");
      if (arch.merge == ParallelMerge::kConcat) {
        merged.ch += it->second.ch;
      } else if (it->second.ch != merged.ch) {
        throw ShapeError("parallel group '" + gid + "': add-merge channel mismatch");
      }
    }
    cur = merged;
    i = j;
  }

  return out;
}

std::size_t count_conv_layers(const NetworkArch& arch) {
  return arch.layers.size();
}

}  // namespace hbn
