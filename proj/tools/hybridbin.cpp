#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hbn/arch.hpp"
#include "hbn/binarize.hpp"
#include "hbn/costmodel.hpp"
#include "hbn/io.hpp"
#include "hbn/kernels.hpp"
#include "hbn/partition.hpp"

namespace fs = std::filesystem;
using namespace hbn;

namespace {

std::string dump_name(const std::string& layer, unsigned sample) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%04u.hbna", sample);
  return layer + buf;
}

struct MetricInputs {
  std::vector<LayerErrorStat> stats;  // merged E + NF, metric filled
  double gamma = 0.0;
};

// Joins the errors file with per-layer FLOPs and evaluates the metric.
MetricInputs make_metrics(const NetworkArch& arch, const std::vector<LayerErrorStat>& errors,
                          const std::string& gamma_arg) {
  std::map<std::string, LayerErrorStat> by_name;
  for (const auto& e : errors) by_name[e.layer_name] = e;

  MetricInputs mi;
  std::vector<double> evals;
  std::vector<std::uint64_t> flops;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto it = by_name.find(arch.layers[i].name);
    if (it == by_name.end())
      throw ParseError("errors file has no entry for layer '" + arch.layers[i].name + "'");
    LayerErrorStat s = it->second;
    s.flops = conv_flops(arch.layers[i], arch.resolved[i]);
    evals.push_back(s.error);
    flops.push_back(s.flops);
    mi.stats.push_back(std::move(s));
  }
  mi.gamma = (gamma_arg == "auto") ? auto_gamma(evals, flops) : std::stod(gamma_arg);
  if (mi.gamma <= 0) throw ParseError("gamma must be positive");
  for (auto& s : mi.stats) s.metric = compute_metric(s.error, s.flops, mi.gamma);
  return mi;
}

int cmd_error(const std::string& arch_path, const std::string& act_dir, unsigned samples,
              bool scaled, const std::string& out_path) {
  const NetworkArch arch = infer_shapes(load_arch(arch_path));

  std::vector<std::string> missing;
  std::vector<LayerErrorStat> stats;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto& layer = arch.layers[i];
    std::vector<RealTensor> dumps;
    if (samples > 0) {
      for (unsigned s = 0; s < samples; ++s) {
        const fs::path p = fs::path(act_dir) / dump_name(layer.name, s);
        if (!fs::exists(p)) {
          missing.push_back(p.string());
          continue;
        }
        dumps.push_back(read_hbna(p.string()));
      }
    } else {
      for (unsigned s = 0;; ++s) {
        const fs::path p = fs::path(act_dir) / dump_name(layer.name, s);
        if (!fs::exists(p)) break;
        dumps.push_back(read_hbna(p.string()));
      }
      if (dumps.empty()) missing.push_back(layer.name + " (no dumps)");
    }
    if (!missing.empty()) continue;
    stats.push_back(layer_error_stats(dumps, layer, arch.resolved[i], scaled));
  }
  if (!missing.empty()) {
    std::cerr << "error: missing activation dumps:\n";
    for (const auto& m : missing) std::cerr << "  " << m << "\n";
    return kExitInputError;
  }
  write_file(out_path, emit_errors(arch.model_name, stats, scaled));
  return kExitOk;
}

int cmd_plan(const std::string& arch_path, const std::string& errors_path, double ratio,
             const std::string& gamma_arg, bool hybrid2, bool naive, bool no_parallel_small,
             bool no_first_fprec, const std::string& out_path) {
  const NetworkArch arch = infer_shapes(load_arch(arch_path));
  const MetricInputs mi = make_metrics(arch, parse_errors(read_file(errors_path)), gamma_arg);

  PartitionConfig config;
  config.ratio = ratio;
  config.gamma = mi.gamma;
  config.binarize_last_layer_weights = hybrid2;
  config.naive_sort_strategy = naive;
  config.parallel_small_to_weightbin = !no_parallel_small;
  config.first_layer_full_precision = !no_first_fprec;

  const PartitionResult result = partition(mi.stats, config);
  HybridPlan plan = build_hybrid_plan(arch, result, config);
  for (auto& e : plan.entries) {
    for (const auto& s : mi.stats) {
      if (s.layer_name == e.layer_name) {
        e.metric = s.metric;
        e.error = s.error;
        e.flops = s.flops;
      }
    }
  }

  PlanFile pf;
  pf.model = arch.model_name;
  pf.gamma = mi.gamma;
  pf.ratio = ratio;
  pf.cluster_count = result.cluster_count;
  pf.top_cluster_size = result.top_cluster_size;
  pf.ratio_achieved = result.ratio_achieved;
  pf.plan = std::move(plan);
  write_file(out_path, emit_plan(pf));
  return kExitOk;
}

std::map<std::string, double> measured_repeats(const NetworkArch& arch,
                                               const std::string& weights_dir) {
  std::map<std::string, double> repeats;
  for (const auto& layer : arch.layers) {
    const fs::path p = fs::path(weights_dir) / (layer.name + ".hbna");
    if (!fs::exists(p))
      throw ParseError("no weight file for layer '" + layer.name + "' in " + weights_dir);
    repeats[layer.name] = repeat_fraction(read_hbna(p.string()), layer);
  }
  return repeats;
}

int cmd_cost(const std::string& arch_path, const std::string& plan_path,
             const std::string& repeats_path, const std::string& measure_dir,
             const std::string& format, double binop_equiv, const std::string& out_path) {
  const NetworkArch arch = infer_shapes(load_arch(arch_path));
  const PlanFile pf = load_plan(plan_path);

  std::map<std::string, double> repeats;
  if (!repeats_path.empty() && !measure_dir.empty())
    throw ParseError("--repeats and --measure-weights are mutually exclusive");
  if (!repeats_path.empty())
    repeats = load_repeats(repeats_path);
  else if (!measure_dir.empty())
    repeats = measured_repeats(arch, measure_dir);

  CostOptions opts;
  opts.binary_op_equivalence = binop_equiv;
  const CostReport report = model_cost_report(arch, pf.plan, repeats, opts);
  const std::string text =
      format == "tsv" ? render_report_tsv(report) : render_report_table(report);
  if (out_path.empty())
    std::cout << text;
  else
    write_file(out_path, text);
  if (report.any_repeat_missing)
    std::cerr << "warning: repeat fractions missing for some conv layers (treated as 0)\n";
  return kExitOk;
}

int cmd_simulate(const std::string& arch_path, const std::string& plan_path,
                 const std::string& weights_dir, const std::string& input_path,
                 const std::string& dump_dir, unsigned sample_index,
                 const std::string& out_path) {
  const NetworkArch arch = infer_shapes(load_arch(arch_path));
  const PlanFile pf = load_plan(plan_path);

  std::map<std::string, RealTensor> weights;
  std::map<std::string, std::vector<float>> biases;
  for (const auto& layer : arch.layers) {
    const fs::path p = fs::path(weights_dir) / (layer.name + ".hbna");
    if (!fs::exists(p))
      throw ParseError("no weight file for layer '" + layer.name + "' in " + weights_dir);
    weights.emplace(layer.name, read_hbna(p.string()));
    if (layer.bias) {
      const fs::path bp = fs::path(weights_dir) / (layer.name + ".bias.hbna");
      if (!fs::exists(bp))
        throw ParseError("layer '" + layer.name + "' declares bias but " + bp.string() +
                         " is missing");
      biases.emplace(layer.name, read_hbna(bp.string()).data);
    }
  }

  const RealTensor input = read_hbna(input_path);
  const ForwardResult res = forward(arch, pf.plan, weights, input, &biases);

  if (!dump_dir.empty()) {
    fs::create_directories(dump_dir);
    for (std::size_t i = 0; i < arch.layers.size(); ++i) {
      const fs::path p = fs::path(dump_dir) / dump_name(arch.layers[i].name, sample_index);
      write_hbna(p.string(), res.layer_inputs[i]);
    }
  }
  if (!out_path.empty()) write_hbna(out_path, res.output);
  return kExitOk;
}

int cmd_sweep(const std::string& arch_path, const std::string& errors_path,
              const std::vector<double>& ratios, const std::string& gamma_arg, bool hybrid2,
              const std::string& repeats_path, const std::string& out_path) {
  const NetworkArch arch = infer_shapes(load_arch(arch_path));
  const MetricInputs mi = make_metrics(arch, parse_errors(read_file(errors_path)), gamma_arg);
  std::map<std::string, double> repeats;
  if (!repeats_path.empty()) repeats = load_repeats(repeats_path);

  std::ostringstream out;
  out << "ratio\tstatus\tclusters\ttop_cluster\tweightbin_layers\thybrid_flops\t"
         "hybrid_vs_fbin\tcompression\n";
  std::size_t successes = 0;
  for (double r : ratios) {
    PartitionConfig config;
    config.ratio = r;
    config.gamma = mi.gamma;
    config.binarize_last_layer_weights = hybrid2;
    char buf[256];
    try {
      const PartitionResult result = partition(mi.stats, config);
      const HybridPlan plan = build_hybrid_plan(arch, result, config);
      const CostReport rep = model_cost_report(arch, plan, repeats);
      std::size_t n_wbin = 0;
      for (const auto& e : plan.entries)
        if (e.mode == LayerMode::kWeightBin) ++n_wbin;
      std::snprintf(buf, sizeof buf, "%.17g\tok\t%u\t%u\t%zu\t%.17g\t%.17g\t%.17g\n", r,
                    result.cluster_count, result.top_cluster_size, n_wbin, rep.total_hybrid,
                    rep.total_hybrid / rep.total_fbin, rep.compression_ratio);
      ++successes;
    } catch (const PartitionError& e) {
      std::snprintf(buf, sizeof buf, "%.17g\tunsatisfiable\t\t\t\t\t\t# min ratio %.17g\n", r,
                    e.min_achievable_ratio);
    }
    out << buf;
  }
  if (out_path.empty())
    std::cout << out.str();
  else
    write_file(out_path, out.str());
  return successes > 0 ? kExitOk : kExitUnsatisfiable;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid binary network planner: binarization error statistics, layer "
               "partitioning, cost reports and desk-scale simulation"};
  app.require_subcommand(1);

  // error
  auto* err = app.add_subcommand("error", "average per-layer binarization error from dumps");
  std::string e_arch, e_dir, e_out;
  unsigned e_samples = 0;
  bool e_scaled = false;
  err->add_option("--arch", e_arch)->required();
  err->add_option("--activations", e_dir)->required();
  err->add_option("--samples", e_samples, "samples per layer (0 = all available)");
  err->add_flag("--scaled", e_scaled, "measure against alpha*sgn instead of sgn");
  err->add_option("--out", e_out)->required();

  // plan
  auto* pl = app.add_subcommand("plan", "partition layers and emit a hybrid plan");
  std::string p_arch, p_errors, p_gamma = "auto", p_out;
  double p_ratio = 0.4;
  bool p_hybrid2 = false, p_naive = false, p_no_par = false, p_no_first = false;
  pl->add_option("--arch", p_arch)->required();
  pl->add_option("--errors", p_errors)->required();
  pl->add_option("--ratio", p_ratio, "hybridization ratio R in (0,1]");
  pl->add_option("--gamma", p_gamma, "tradeoff gamma: 'auto' or a positive value");
  pl->add_flag("--hybrid2", p_hybrid2, "weight-binarize the last layer");
  pl->add_flag("--naive", p_naive, "sort-by-metric baseline instead of clustering");
  pl->add_flag("--no-parallel-small", p_no_par, "keep small parallel branches fully binarized");
  pl->add_flag("--no-first-fprec", p_no_first, "do not force the first layer to full precision");
  pl->add_option("--out", p_out)->required();

  // cost
  auto* co = app.add_subcommand("cost", "FLOPs/memory report for a plan");
  std::string c_arch, c_plan, c_repeats, c_measure, c_format = "table", c_out;
  double c_binop = 58.0;
  co->add_option("--arch", c_arch)->required();
  co->add_option("--plan", c_plan)->required();
  co->add_option("--repeats", c_repeats, "repeat-fraction file");
  co->add_option("--measure-weights", c_measure, "measure repeats from weight tensors in dir");
  co->add_option("--format", c_format)->check(CLI::IsMember({"table", "tsv"}));
  co->add_option("--binary-op-equivalence", c_binop, "binary ops per full-precision MAC");
  co->add_option("--out", c_out, "write here instead of stdout");

  // simulate
  auto* si = app.add_subcommand("simulate", "run the forward pass with plan modes");
  std::string s_arch, s_plan, s_weights, s_input, s_dump, s_out;
  unsigned s_index = 0;
  si->add_option("--arch", s_arch)->required();
  si->add_option("--plan", s_plan)->required();
  si->add_option("--weights", s_weights)->required();
  si->add_option("--input", s_input)->required();
  si->add_option("--dump-activations", s_dump, "write per-layer input dumps here");
  si->add_option("--sample-index", s_index, "sample index used in dump filenames");
  si->add_option("--out", s_out, "write the network output tensor here");

  // sweep
  auto* sw = app.add_subcommand("sweep", "plan + cost summary over a grid of ratios");
  std::string w_arch, w_errors, w_gamma = "auto", w_repeats, w_out;
  std::vector<double> w_ratios;
  bool w_hybrid2 = false;
  sw->add_option("--arch", w_arch)->required();
  sw->add_option("--errors", w_errors)->required();
  sw->add_option("--ratios", w_ratios, "comma-separated ratio grid")->required()->delimiter(',');
  sw->add_option("--gamma", w_gamma);
  sw->add_flag("--hybrid2", w_hybrid2);
  sw->add_option("--repeats", w_repeats);
  sw->add_option("--out", w_out, "write here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*err) return cmd_error(e_arch, e_dir, e_samples, e_scaled, e_out);
    if (*pl)
      return cmd_plan(p_arch, p_errors, p_ratio, p_gamma, p_hybrid2, p_naive, p_no_par,
                      p_no_first, p_out);
    if (*co) return cmd_cost(c_arch, c_plan, c_repeats, c_measure, c_format, c_binop, c_out);
    if (*si) return cmd_simulate(s_arch, s_plan, s_weights, s_input, s_dump, s_index, s_out);
    if (*sw) return cmd_sweep(w_arch, w_errors, w_ratios, w_gamma, w_hybrid2, w_repeats, w_out);
  } catch (const PartitionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUnsatisfiable;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternalError;
  }
  return kExitInternalError;
}
