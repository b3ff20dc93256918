// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

// Parallel kernels against their serial reference counterparts.

#include <benchmark/benchmark.h>

#include <random>

#include "lfedit/kernels/conv.hpp"
#include "lfedit/kernels/sampling.hpp"
#include "lfedit/kernels/ssim.hpp"

namespace {

using lfedit::Tensor;

Tensor random_tensor(int n, int c, int h, int w, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  Tensor t(n, c, h, w);
  for (float& v : t.values()) v = dist(rng);
  return t;
}

struct ConvCase {
  Tensor input, weight, grad_out;
  std::vector<float> bias;
};

ConvCase make_case(const benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  const int ch = static_cast<int>(state.range(1));
  const int size = static_cast<int>(state.range(2));
  return {random_tensor(batch, ch, size, size, 1), random_tensor(ch, ch, 3, 3, 2),
          random_tensor(batch, ch, size, size, 3), std::vector<float>(ch, 0.1f)};
}

void set_flops(benchmark::State& state, double factor) {
  const double b = state.range(0), c = state.range(1), s = state.range(2);
  state.counters["GFLOP/s"] = benchmark::Counter(factor * 2.0 * b * c * c * 9 * s * s * state.iterations(),
                                                 benchmark::Counter::kIsRate, benchmark::Counter::kIs1000);
}

template <bool kParallel>
void BM_ConvForward(benchmark::State& state) {
  ConvCase cc = make_case(state);
  Tensor out;
  for (auto _ : state) {
    if constexpr (kParallel)
      lfedit::kernels::parallel::conv2d_forward(cc.input, cc.weight, cc.bias, out);
    else
      lfedit::kernels::reference::conv2d_forward(cc.input, cc.weight, cc.bias, out);
    benchmark::DoNotOptimize(out.data());
  }
  set_flops(state, 1.0);
}

template <bool kParallel>
void BM_ConvBackward(benchmark::State& state) {
  ConvCase cc = make_case(state);
  Tensor gin, gw(cc.weight.batch(), cc.weight.channels(), 3, 3);
  std::vector<float> gb(cc.bias.size());
  for (auto _ : state) {
    if constexpr (kParallel)
      lfedit::kernels::parallel::conv2d_backward(cc.input, cc.weight, cc.grad_out, &gin, &gw, gb);
    else
      lfedit::kernels::reference::conv2d_backward(cc.input, cc.weight, cc.grad_out, &gin, &gw, gb);
    benchmark::DoNotOptimize(gin.data());
  }
  set_flops(state, 2.0);
}

template <bool kParallel>
void BM_Bilinear(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  Tensor src = random_tensor(1, 3, size, size, 4);
  const int count = size * size;
  std::vector<float> cx(count), cy(count), out(3 * count);
  for (int p = 0; p < count; ++p) cx[p] = p % size + 0.37f, cy[p] = p / size - 0.61f;
  for (auto _ : state) {
    if constexpr (kParallel)
      lfedit::kernels::parallel::bilinear_forward(src.data(), 3, size, size, cx.data(), cy.data(), count,
                                                  out.data(), nullptr);
    else
      lfedit::kernels::reference::bilinear_forward(src.data(), 3, size, size, cx.data(), cy.data(), count,
                                                   out.data(), nullptr);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool kParallel>
void BM_Ssim(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  Tensor a = random_tensor(1, 1, size, size, 5), b = random_tensor(1, 1, size, size, 6);
  const auto taps = lfedit::kernels::gaussian_taps<float>(11, 1.5);
  std::vector<float> grad(a.size());
  for (auto _ : state) {
    float v;
    if constexpr (kParallel)
      v = lfedit::kernels::parallel::ssim_plane(a.data(), b.data(), size, size, taps, grad.data(), 1.0f);
    else
      v = lfedit::kernels::reference::ssim_plane(a.data(), b.data(), size, size, taps, grad.data(), 1.0f);
    benchmark::DoNotOptimize(v);
  }
}

}  // namespace

BENCHMARK(BM_ConvForward<true>)->Args({1, 16, 32})->Args({49, 16, 32})->Args({1, 32, 64});
BENCHMARK(BM_ConvForward<false>)->Args({1, 16, 32})->Args({1, 32, 64});
BENCHMARK(BM_ConvBackward<true>)->Args({1, 16, 32})->Args({49, 16, 32});
BENCHMARK(BM_ConvBackward<false>)->Args({1, 16, 32});
BENCHMARK(BM_Bilinear<true>)->Arg(64)->Arg(256);
BENCHMARK(BM_Bilinear<false>)->Arg(64)->Arg(256);
BENCHMARK(BM_Ssim<true>)->Arg(64);
BENCHMARK(BM_Ssim<false>)->Arg(64);

BENCHMARK_MAIN();
