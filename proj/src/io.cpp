#include "hbn/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace hbn {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw ParseError("short write to '" + path + "'");
}

// --- HBNA --------------------------------------------------------------------

namespace {

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& s, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Cursor {
  const unsigned char* p;
  std::size_t len;
  std::size_t off = 0;
  const std::string& path;

  void need(std::size_t n, const char* what) {
    if (off + n > len)
      throw ParseError("'" + path + "': truncated " + what + " at offset " + std::to_string(off));
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[off + i]) << (8 * i);
    off += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[off + i]) << (8 * i);
    off += 8;
    return v;
  }
};

}  // namespace

void write_hbna(const std::string& path, const RealTensor& t) {
  std::string buf;
  buf.reserve(16 + 8 * t.shape.size() + 4 * t.data.size());
  buf += "HBNA";
  put_u32(buf, 1);
  put_u32(buf, static_cast<std::uint32_t>(t.shape.size()));
  for (auto d : t.shape) put_u64(buf, d);
  for (float f : t.data) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(buf, bits);
  }
  write_file(path, buf);
}

RealTensor read_hbna(const std::string& path) {
  const std::string buf = read_file(path);
  Cursor c{reinterpret_cast<const unsigned char*>(buf.data()), buf.size(), 0, path};
  c.need(4, "magic");
  if (std::memcmp(buf.data(), "HBNA", 4) != 0)
    throw ParseError("'" + path + "': bad magic at offset 0");
  c.off = 4;
  const std::uint32_t version = c.u32("version");
  if (version != 1)
    throw ParseError("'" + path + "': unsupported version " + std::to_string(version) +
                     " at offset 4");
  const std::uint32_t ndims = c.u32("ndims");
  if (ndims == 0 || ndims > 8)
    throw ParseError("'" + path + "': implausible ndims " + std::to_string(ndims) +
                     " at offset 8");
  std::vector<std::uint64_t> dims(ndims);
  std::uint64_t count = 1;
  for (auto& d : dims) {
    d = c.u64("dims");
    count *= d;
  }
  const std::size_t payload = buf.size() - c.off;
  if (payload != 4 * count)
    throw ParseError("'" + path + "': payload is " + std::to_string(payload) + " bytes at offset " +
                     std::to_string(c.off) + ", expected " + std::to_string(4 * count));
  std::vector<float> data(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t bits = c.u32("data");
    std::memcpy(&data[i], &bits, 4);
    if (!std::isfinite(data[i]))
      throw ParseError("'" + path + "': non-finite value at offset " +
                       std::to_string(c.off - 4));
  }
  return RealTensor(std::move(dims), std::move(data));
}

// --- Arch files ----------------------------------------------------------------

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw ParseError(where + ": unknown key '" + it.key() + "'");
  }
}

PoolSpec parse_pool(const json& p, const std::string& where) {
  reject_unknown_keys(p, {"kind", "kernel", "stride", "padding", "ceil"}, where + ".pool_after");
  PoolSpec pool;
  if (p.contains("kind")) {
    const std::string k = p["kind"].get<std::string>();
    if (k == "max")
      pool.kind = PoolKind::kMax;
    else if (k == "avg")
      pool.kind = PoolKind::kAvg;
    else
      throw ParseError(where + ": unknown pool kind '" + k + "'");
  }
  pool.kernel = p.at("kernel").get<std::uint32_t>();
  pool.stride = p.at("stride").get<std::uint32_t>();
  if (p.contains("padding")) pool.padding = p["padding"].get<std::uint32_t>();
  if (p.contains("ceil")) pool.ceil_mode = p["ceil"].get<bool>();
  return pool;
}

}  // namespace

NetworkArch arch_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("arch: invalid JSON: ") + e.what());
  }
  reject_unknown_keys(doc, {"model", "input_shape", "merge", "layers"}, "arch");

  NetworkArch arch;
  arch.model_name = doc.at("model").get<std::string>();
  const auto& shape = doc.at("input_shape");
  if (!shape.is_array() || shape.size() != 3)
    throw ParseError("arch: input_shape must be [channels, height, width]");
  arch.input_channels = shape[0].get<std::uint64_t>();
  arch.input_h = shape[1].get<std::uint64_t>();
  arch.input_w = shape[2].get<std::uint64_t>();
  if (doc.contains("merge")) {
    const std::string m = doc["merge"].get<std::string>();
    if (m == "add")
      arch.merge = ParallelMerge::kAdd;
    else if (m == "concat")
      arch.merge = ParallelMerge::kConcat;
    else
      throw ParseError("arch: unknown merge '" + m + "'");
  }

  for (const auto& l : doc.at("layers")) {
    const std::string where = "arch layer '" + l.value("name", std::string("?")) + "'";
    reject_unknown_keys(l,
                        {"name", "kind", "in_channels", "out_channels", "kernel", "stride",
                         "padding", "bias", "pool_after", "parallel_group", "branch",
                         "params_override", "repeat_fraction"},
                        where);
    LayerSpec spec;
    spec.name = l.at("name").get<std::string>();
    if (arch.find_layer(spec.name)) throw ParseError(where + ": duplicate layer name");
    const std::string kind = l.value("kind", std::string("conv"));
    if (kind == "conv")
      spec.kind = LayerKind::kConv;
    else if (kind == "linear")
      spec.kind = LayerKind::kLinear;
    else
      throw ParseError(where + ": unknown kind '" + kind + "'");
    spec.in_channels = l.at("in_channels").get<std::uint32_t>();
    spec.out_channels = l.at("out_channels").get<std::uint32_t>();
    if (l.contains("kernel")) {
      const auto& k = l["kernel"];
      if (k.is_array()) {
        if (k.size() != 2) throw ParseError(where + ": kernel must be an int or [kh, kw]");
        spec.kernel_h = k[0].get<std::uint32_t>();
        spec.kernel_w = k[1].get<std::uint32_t>();
      } else {
        spec.kernel_h = spec.kernel_w = k.get<std::uint32_t>();
      }
    }
    spec.stride = l.value("stride", 1u);
    spec.padding = l.value("padding", 0u);
    spec.bias = l.value("bias", false);
    if (spec.in_channels < 1 || spec.out_channels < 1 || spec.kernel_h < 1 || spec.kernel_w < 1 ||
        spec.stride < 1)
      throw ParseError(where + ": channel, kernel and stride counts must be >= 1");
    if (spec.kind == LayerKind::kLinear &&
        (spec.kernel_h != 1 || spec.kernel_w != 1 || spec.stride != 1 || spec.padding != 0))
      throw ParseError(where + ": linear layers must have kernel 1x1, stride 1, padding 0");
    if (l.contains("pool_after")) spec.pool_after = parse_pool(l["pool_after"], where);
    if (l.contains("parallel_group"))
      spec.parallel_group = l["parallel_group"].get<std::string>();
    spec.branch = l.value("branch", 0u);
    if (l.contains("params_override"))
      spec.params_override = l["params_override"].get<std::uint64_t>();
    if (l.contains("repeat_fraction")) {
      const double r = l["repeat_fraction"].get<double>();
      if (r < 0.0 || r > 1.0) throw ParseError(where + ": repeat_fraction outside [0,1]");
      spec.repeat_fraction = r;
    }
    arch.layers.push_back(std::move(spec));
  }
  if (arch.layers.empty()) throw ParseError("arch: no layers");
  return arch;
}

NetworkArch load_arch(const std::string& path) {
  try {
    return arch_from_json(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

// --- Errors files ---------------------------------------------------------------

std::string emit_errors(const std::string& model, const std::vector<LayerErrorStat>& stats,
                        bool scaled) {
  json doc;
  doc["model"] = model;
  doc["scaled"] = scaled;
  json rows = json::array();
  for (const auto& s : stats) {
    json r;
    r["layer"] = s.layer_name;
    r["error"] = s.error;
    r["samples"] = s.sample_count;
    rows.push_back(std::move(r));
  }
  doc["layers"] = std::move(rows);
  return doc.dump(2) + "\n";
}

std::vector<LayerErrorStat> parse_errors(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("errors file: invalid JSON: ") + e.what());
  }
  std::vector<LayerErrorStat> stats;
  for (const auto& r : doc.at("layers")) {
    LayerErrorStat s;
    s.layer_name = r.at("layer").get<std::string>();
    s.error = r.at("error").get<double>();
    s.sample_count = r.at("samples").get<std::uint64_t>();
    if (!std::isfinite(s.error) || s.error < 0)
      throw ParseError("errors file: error must be finite and >= 0 for '" + s.layer_name + "'");
    if (s.sample_count < 1)
      throw ParseError("errors file: sample count < 1 for '" + s.layer_name + "'");
    stats.push_back(std::move(s));
  }
  return stats;
}

// --- Plan files ------------------------------------------------------------------

std::string emit_plan(const PlanFile& p) {
  json doc;
  doc["model"] = p.model;
  doc["gamma"] = p.gamma;
  doc["ratio"] = p.ratio;
  doc["cluster_count"] = p.cluster_count;
  doc["top_cluster_size"] = p.top_cluster_size;
  doc["ratio_achieved"] = p.ratio_achieved;
  json rows = json::array();
  for (const auto& e : p.plan.entries) {
    json r;
    r["name"] = e.layer_name;
    r["mode"] = layer_mode_name(e.mode);
    r["provenance"] = e.provenance;
    r["metric"] = e.metric;
    r["error"] = e.error;
    r["flops"] = e.flops;
    rows.push_back(std::move(r));
  }
  doc["layers"] = std::move(rows);
  return doc.dump(2) + "\n";
}

PlanFile parse_plan(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("plan file: invalid JSON: ") + e.what());
  }
  PlanFile p;
  p.model = doc.at("model").get<std::string>();
  p.gamma = doc.value("gamma", 0.0);
  p.ratio = doc.value("ratio", 0.0);
  p.cluster_count = doc.value("cluster_count", 0u);
  p.top_cluster_size = doc.value("top_cluster_size", 0u);
  p.ratio_achieved = doc.value("ratio_achieved", 0.0);
  for (const auto& r : doc.at("layers")) {
    HybridPlan::Entry e;
    e.layer_name = r.at("name").get<std::string>();
    e.mode = layer_mode_from_name(r.at("mode").get<std::string>());
    e.provenance = r.value("provenance", std::string());
    e.metric = r.value("metric", 0.0);
    e.error = r.value("error", 0.0);
    e.flops = r.value("flops", std::uint64_t{0});
    p.plan.entries.push_back(std::move(e));
  }
  if (p.plan.entries.empty()) throw ParseError("plan file: no layers");
  return p;
}

PlanFile load_plan(const std::string& path) {
  try {
    return parse_plan(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

// --- Repeats files -----------------------------------------------------------------

std::map<std::string, double> parse_repeats(const std::string& text) {
  std::map<std::string, double> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    std::string name;
    double frac;
    if (!(row >> name)) continue;  // blank
    if (!(row >> frac))
      throw ParseError("repeats line " + std::to_string(lineno) + ": expected 'layer fraction'");
    if (frac < 0.0 || frac > 1.0)
      throw ParseError("repeats line " + std::to_string(lineno) + ": fraction outside [0,1]");
    out[name] = frac;
  }
  return out;
}

std::map<std::string, double> load_repeats(const std::string& path) {
  try {
    return parse_repeats(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

// --- Report rendering ----------------------------------------------------------------

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

long long millions(double flops) {
  return std::llround(flops / 1e6);
}

}  // namespace

std::string render_report_table(const CostReport& report) {
  std::ostringstream out;
  out << "model: " << report.model_name << "\n";
  out << "# parameters in 0.1M, flops in 10M\n";
  char head[160];
  std::snprintf(head, sizeof head, "%-14s %8s %8s %8s %7s %8s %8s %8s  %-9s %s\n", "layer",
                "params", "binpar", "fprec", "repeat", "wbin", "fbin", "hybrid", "mode", "warn");
  out << head;
  for (const auto& r : report.rows) {
    char row[240];
    std::snprintf(row, sizeof row, "%-14s %8.2f %8.3f %8.2f %7.2f %8.2f %8.2f %8.2f  %-9s %s\n",
                  r.layer_name.c_str(), static_cast<double>(r.params) / 1e5, r.bin_params / 1e5,
                  static_cast<double>(r.flops_fprec) / 1e7, r.repeat_fraction, r.flops_wbin / 1e7,
                  r.flops_fbin / 1e7, r.flops_assigned / 1e7, layer_mode_name(r.mode),
                  r.repeat_missing ? "no-repeat" : "-");
    out << row;
  }
  char total[240];
  std::snprintf(total, sizeof total, "%-14s %8.2f %8.3f %8.2f %7s %8.2f %8.2f %8.2f\n", "total",
                static_cast<double>(report.total_params) / 1e5, report.total_bin_params / 1e5,
                report.total_fprec / 1e7, "", report.total_wbin / 1e7, report.total_fbin / 1e7,
                report.total_hybrid / 1e7);
  out << total;

  const SpeedupSummary s = speedup_summary(report);
  out << "memory 0.1M words: fprec " << fmt("%.2f", report.memory_fprec / 1e5) << "  plan "
      << fmt("%.2f", report.memory_variant / 1e5) << "  compression "
      << fmt("%.1f", report.compression_ratio) << "x\n";
  out << "flops: fprec " << millions(report.total_fprec) << "M (" << fmt("%.1f", s.fprec_x)
      << "x)  wbin " << millions(report.total_wbin) << "M (" << fmt("%.1f", s.wbin_x)
      << "x)  fbin " << millions(report.total_fbin) << "M (" << fmt("%.1f", s.fbin_x)
      << "x)  hybrid " << millions(report.total_hybrid) << "M (" << fmt("%.1f", s.hybrid_x)
      << "x)\n";
  return out.str();
}

std::string render_report_tsv(const CostReport& report) {
  std::ostringstream out;
  out << "layer\tparams\tbin_params\tflops_fprec\trepeat\trepeat_missing\tflops_wbin\tflops_fbin"
         "\tmode\tflops_assigned\n";
  char buf[512];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%s\t%llu\t%.17g\t%llu\t%.17g\t%d\t%.17g\t%.17g\t%s\t%.17g\n",
                  r.layer_name.c_str(), static_cast<unsigned long long>(r.params), r.bin_params,
                  static_cast<unsigned long long>(r.flops_fprec), r.repeat_fraction,
                  r.repeat_missing ? 1 : 0, r.flops_wbin, r.flops_fbin, layer_mode_name(r.mode),
                  r.flops_assigned);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "TOTAL\t%llu\t%.17g\t%.17g\t\t\t%.17g\t%.17g\t\t%.17g\n",
                static_cast<unsigned long long>(report.total_params), report.total_bin_params,
                report.total_fprec, report.total_wbin, report.total_fbin, report.total_hybrid);
  out << buf;
  std::snprintf(buf, sizeof buf,
                "# memory_fprec=%.17g memory_variant=%.17g compression=%.17g\n",
                report.memory_fprec, report.memory_variant, report.compression_ratio);
  out << buf;
  return out.str();
}

}  // namespace hbn
