#include "hbn/costmodel.hpp"

#include <stdexcept>
#include <unordered_set>

#include "hbn/binarize.hpp"

namespace hbn {

std::uint64_t conv_flops(const LayerSpec& layer, const ResolvedShape& resolved) {
  if (resolved.out_h == 0 || resolved.out_w == 0)
    throw std::invalid_argument("conv_flops: unresolved shapes for layer '" + layer.name + "'");
  return layer.weight_count() * resolved.out_h * resolved.out_w;
}

double binarized_params(std::uint64_t params) {
  return static_cast<double>(params) / 32.0;
}

double repeat_fraction(const RealTensor& weights, const LayerSpec& layer) {
  if (weights.rank() != 4)
    throw std::invalid_argument("repeat_fraction: layer '" + layer.name +
                                "': expected 4-D weights, got " + shape_to_string(weights.shape));
  const std::uint64_t slices = weights.dim(0) * weights.dim(1);
  const std::uint64_t slice_len = weights.dim(2) * weights.dim(3);
  if (slices == 0 || slice_len == 0)
    throw std::invalid_argument("repeat_fraction: degenerate weight tensor");

  std::unordered_set<std::string> unique;
  std::string key((slice_len + 7) / 8, '\0');
  for (std::uint64_t s = 0; s < slices; ++s) {
    std::fill(key.begin(), key.end(), '\0');
    const float* base = weights.data.data() + s * slice_len;
    for (std::uint64_t i = 0; i < slice_len; ++i)
      if (base[i] >= 0.0f) key[i >> 3] |= static_cast<char>(1 << (i & 7));
    unique.insert(key);
  }
  return 1.0 - static_cast<double>(unique.size()) / static_cast<double>(slices);
}

double effective_flops(const LayerCost& cost, LayerMode mode) {
  switch (mode) {
    case LayerMode::kFPrec: return static_cast<double>(cost.flops_fprec);
    case LayerMode::kWeightBin: return cost.flops_wbin;
    case LayerMode::kFullBin: return cost.flops_fbin;
  }
  return 0.0;
}

CostReport model_cost_report(const NetworkArch& arch, const HybridPlan& plan,
                             const std::map<std::string, double>& repeats,
                             const CostOptions& opts) {
  const NetworkArch net = arch.shapes_resolved() ? arch : infer_shapes(arch);
  if (plan.entries.size() != net.layers.size())
    throw std::invalid_argument("model_cost_report: plan does not cover the architecture");

  CostReport rep;
  rep.model_name = net.model_name;
  rep.rows.resize(net.layers.size());

  const std::size_t last = net.layers.size() - 1;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& spec = net.layers[i];
    const auto* entry = plan.find(spec.name);
    if (!entry)
      throw std::invalid_argument("model_cost_report: plan missing layer '" + spec.name + "'");

    LayerCost& row = rep.rows[i];
    row.layer_name = spec.name;
    row.params = spec.param_count();
    row.bin_params = (i == 0) ? static_cast<double>(row.params) : binarized_params(row.params);
    row.flops_fprec = conv_flops(spec, net.resolved[i]);

    auto it = repeats.find(spec.name);
    if (it != repeats.end()) {
      row.repeat_fraction = it->second;
    } else if (spec.repeat_fraction) {
      row.repeat_fraction = *spec.repeat_fraction;
    } else {
      row.repeat_fraction = 0.0;
      row.repeat_missing = spec.kind == LayerKind::kConv;
      rep.any_repeat_missing |= row.repeat_missing;
    }
    if (row.repeat_fraction < 0.0 || row.repeat_fraction > 1.0)
      throw std::invalid_argument("model_cost_report: repeat fraction out of [0,1] for '" +
                                  spec.name + "'");

    row.input_bin_exempt = (i == 0 || i == last);
    row.flops_wbin = static_cast<double>(row.flops_fprec) * (1.0 - row.repeat_fraction);
    row.flops_fbin =
        row.input_bin_exempt ? row.flops_wbin : row.flops_wbin / opts.binary_op_equivalence;
    row.mode = entry->mode;
    row.flops_assigned = effective_flops(row, row.mode);

    rep.total_params += row.params;
    rep.total_bin_params += row.bin_params;
    rep.total_fprec += static_cast<double>(row.flops_fprec);
    rep.total_wbin += row.flops_wbin;
    rep.total_fbin += row.flops_fbin;
    rep.total_hybrid += row.flops_assigned;
  }

  rep.memory_fprec = static_cast<double>(rep.total_params);
  rep.memory_variant = 0.0;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerCost& row = rep.rows[i];
    const bool weights_binarized =
        row.mode != LayerMode::kFPrec && !(i == last && row.mode == LayerMode::kFullBin);
    rep.memory_variant +=
        weights_binarized ? binarized_params(row.params) : static_cast<double>(row.params);
  }
  rep.compression_ratio = rep.memory_variant > 0 ? rep.memory_fprec / rep.memory_variant : 0.0;
  return rep;
}

SpeedupSummary speedup_summary(const CostReport& report) {
  SpeedupSummary s;
  if (report.total_fbin <= 0) throw std::invalid_argument("speedup_summary: empty report");
  s.fprec_x = report.total_fprec / report.total_fbin;
  s.wbin_x = report.total_wbin / report.total_fbin;
  s.fbin_x = 1.0;
  s.hybrid_x = report.total_hybrid / report.total_fbin;
  return s;
}

}  // namespace hbn
