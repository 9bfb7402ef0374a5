// Compares the serial reference convolution against the OpenMP kernels on a
// few layer shapes and prints per-kernel timings. Wall-clock only; the
// correctness of every kernel against the reference is covered by the tests.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hbn/arch.hpp"
#include "hbn/binarize.hpp"
#include "hbn/kernels.hpp"

using namespace hbn;
using clk = std::chrono::steady_clock;

namespace {

double time_ms(int reps, const std::function<void()>& fn) {
  fn();  // warm up
  const auto t0 = clk::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = clk::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

}  // namespace

int main() {
  struct Case {
    const char* name;
    std::uint32_t cin, cout, k, s, p;
    std::uint64_t hw;
    int reps;
  };
  const Case cases[] = {
      {"c32x32_k3_28px", 32, 32, 3, 1, 1, 28, 10},
      {"c64x64_k3_14px", 64, 64, 3, 1, 1, 14, 10},
      {"c64x128_k1_14px", 64, 128, 1, 1, 0, 14, 10},
      {"c16x32_k5_32px", 16, 32, 5, 1, 2, 32, 5},
  };

#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#endif
  std::printf("%-18s %12s %12s %12s %9s %9s\n", "case", "reference", "weightbin", "fullbin",
              "wb_x", "fb_x");

  std::mt19937 rng(7);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  for (const auto& c : cases) {
    LayerSpec layer;
    layer.name = c.name;
    layer.in_channels = c.cin;
    layer.out_channels = c.cout;
    layer.kernel_h = layer.kernel_w = c.k;
    layer.stride = c.s;
    layer.padding = c.p;

    RealTensor input({c.cin, c.hw, c.hw});
    for (auto& v : input.data) v = dist(rng);
    RealTensor weights({c.cout, c.cin, c.k, c.k});
    for (auto& v : weights.data) v = dist(rng);

    const PackedFilterBank bank = pack_filters(weights);
    const BinaryTensor input_bits = sign_binarize(input);
    ResolvedShape shape;
    shape.in_channels = c.cin;
    shape.in_h = shape.in_w = c.hw;
    shape.out_channels = c.cout;
    shape.out_h = shape.out_w = (c.hw + 2ull * c.p - c.k) / c.s + 1;

    const double t_ref = time_ms(c.reps, [&] { conv2d_reference(input, weights, layer); });
    const double t_wb = time_ms(c.reps, [&] { weightbin_conv2d(input, bank, layer); });
    const double t_fb =
        time_ms(c.reps, [&] { fullbin_conv2d(input_bits, bank, layer, shape); });

    std::printf("%-18s %10.3fms %10.3fms %10.3fms %8.1fx %8.1fx\n", c.name, t_ref, t_wb, t_fb,
                t_ref / t_wb, t_ref / t_fb);
  }
  return 0;
}
