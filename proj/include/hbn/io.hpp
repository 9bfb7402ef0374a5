#ifndef HBN_IO_HPP_
#define HBN_IO_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hbn/arch.hpp"
#include "hbn/binarize.hpp"
#include "hbn/costmodel.hpp"
#include "hbn/partition.hpp"
#include "hbn/tensor.hpp"

namespace hbn {

// Process exit codes shared by the CLI.
enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 2,
  kExitUnsatisfiable = 3,
  kExitInternalError = 4,
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- HBNA tensor container -------------------------------------------------
// magic "HBNA" | u32 version=1 | u32 ndims | ndims x u64 dims | f32 data,
// all little-endian, row-major.

void write_hbna(const std::string& path, const RealTensor& t);
RealTensor read_hbna(const std::string& path);

// --- Architecture files ----------------------------------------------------

NetworkArch arch_from_json(const std::string& text);
NetworkArch load_arch(const std::string& path);

// --- Per-layer error statistics ---------------------------------------------

std::string emit_errors(const std::string& model, const std::vector<LayerErrorStat>& stats,
                        bool scaled);
std::vector<LayerErrorStat> parse_errors(const std::string& text);

// --- Plan files --------------------------------------------------------------

struct PlanFile {
  std::string model;
  double gamma = 0.0;
  double ratio = 0.0;
  std::uint32_t cluster_count = 0;
  std::uint32_t top_cluster_size = 0;
  double ratio_achieved = 0.0;
  HybridPlan plan;
};

std::string emit_plan(const PlanFile& p);
PlanFile parse_plan(const std::string& text);
PlanFile load_plan(const std::string& path);

// --- Repeat-fraction files ---------------------------------------------------
// One "layer<TAB>fraction" row per line; '#' starts a comment.

std::map<std::string, double> parse_repeats(const std::string& text);
std::map<std::string, double> load_repeats(const std::string& path);

// --- Cost report rendering ---------------------------------------------------

/// Aligned table in display units: parameters in 0.1M (two decimals, binary
/// column three), FLOPs in 10M (two decimals), plus total/memory/speedup
/// footer lines.
std::string render_report_table(const CostReport& report);

/// Full-precision machine-readable rows.
std::string render_report_tsv(const CostReport& report);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace hbn

#endif  // HBN_IO_HPP_
