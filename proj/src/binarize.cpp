#include "hbn/binarize.hpp"

#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hbn {

std::vector<std::uint64_t> pack_bits(const std::vector<int>& signs) {
  std::vector<std::uint64_t> packed((signs.size() + 63) / 64, 0);
  for (std::size_t i = 0; i < signs.size(); ++i)
    if (signs[i] >= 0) packed[i >> 6] |= std::uint64_t{1} << (i & 63);
  return packed;
}

std::vector<int> unpack_bits(const std::vector<std::uint64_t>& packed, std::uint64_t logical_len) {
  if (packed.size() != (logical_len + 63) / 64)
    throw std::invalid_argument("unpack_bits: packed length does not match logical_len");
  std::vector<int> signs(logical_len);
  for (std::uint64_t i = 0; i < logical_len; ++i)
    signs[i] = (packed[i >> 6] >> (i & 63)) & 1 ? +1 : -1;
  return signs;
}

BinaryTensor sign_binarize(const RealTensor& t) {
  BinaryTensor b;
  b.shape = t.shape;
  b.logical_len = t.size();
  b.packed.assign((b.logical_len + 63) / 64, 0);
  double abs_sum = 0.0;
  for (std::uint64_t i = 0; i < b.logical_len; ++i) {
    if (t.data[i] >= 0.0f) b.packed[i >> 6] |= std::uint64_t{1} << (i & 63);
    abs_sum += std::fabs(static_cast<double>(t.data[i]));
  }
  b.scale = b.logical_len ? abs_sum / static_cast<double>(b.logical_len) : 0.0;
  return b;
}

double binarization_error(const RealTensor& t) {
  if (t.size() == 0) throw std::invalid_argument("binarization_error: empty tensor");
  double sum = 0.0;
  for (std::uint64_t i = 0; i < t.size(); ++i) {
    const double d = std::fabs(static_cast<double>(t.data[i])) - 1.0;
    sum += d * d;
  }
  return sum / static_cast<double>(t.size());
}

double binarization_error_scaled(const RealTensor& t) {
  if (t.size() == 0) throw std::invalid_argument("binarization_error_scaled: empty tensor");
  double abs_sum = 0.0;
  for (std::uint64_t i = 0; i < t.size(); ++i)
    abs_sum += std::fabs(static_cast<double>(t.data[i]));
  const double alpha = abs_sum / static_cast<double>(t.size());
  double sum = 0.0;
  for (std::uint64_t i = 0; i < t.size(); ++i) {
    const double d = std::fabs(static_cast<double>(t.data[i])) - alpha;
    sum += d * d;
  }
  return sum / static_cast<double>(t.size());
}

LayerErrorStat layer_error_stats(const std::vector<RealTensor>& samples, const LayerSpec& layer,
                                 const ResolvedShape& resolved, bool scaled) {
  if (samples.empty())
    throw std::invalid_argument("layer_error_stats: layer '" + layer.name + "': no samples");

  const std::vector<std::uint64_t> want{resolved.in_channels, resolved.in_h, resolved.in_w};
  for (std::size_t s = 0; s < samples.size(); ++s) {
    if (samples[s].shape != want)
      throw std::invalid_argument("layer_error_stats: layer '" + layer.name + "' sample " +
                                  std::to_string(s) + ": shape " +
                                  shape_to_string(samples[s].shape) + " != expected " +
                                  shape_to_string(want));
  }

  std::vector<double> errors(samples.size(), 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t s = 0; s < static_cast<std::int64_t>(samples.size()); ++s)
    errors[s] = scaled ? binarization_error_scaled(samples[s]) : binarization_error(samples[s]);

  double sum = 0.0;
  for (double e : errors) sum += e;  // fixed order, single owner

  LayerErrorStat stat;
  stat.layer_name = layer.name;
  stat.error = sum / static_cast<double>(samples.size());
  stat.sample_count = samples.size();
  return stat;
}

}  // namespace hbn
