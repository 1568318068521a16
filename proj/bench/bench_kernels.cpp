// Parallel kernels against their serial reference versions at the shapes the
// reconstruction net sees during training (32 histories, model width 64).

#include "mindface/kernels/kernels.hpp"
#include "mindface/rng.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace mindface;
namespace k = mindface::kernels;

namespace {

Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -1.0, 1.0);
  return m;
}

// Rows per batch: 32 sequences of 7 tokens (six ranked faces plus a class token).
constexpr int kSeqs = 32;
constexpr int kTokens = 7;
constexpr int kRows = kSeqs * kTokens;
constexpr int kWidth = 64;
constexpr int kHeads = 4;

std::vector<k::SeqSpan> spans(int seqs, int tokens) {
  std::vector<k::SeqSpan> s;
  for (int i = 0; i < seqs; ++i) s.push_back({i * tokens, tokens, tokens});
  return s;
}

template <auto Fn>
void bm_matmul(benchmark::State& state) {
  const int out_dim = static_cast<int>(state.range(0));
  const Matrix a = random_matrix(kRows, kWidth, 1);
  const Matrix b = random_matrix(kWidth, out_dim, 2);
  Matrix out;
  for (auto _ : state) {
    Fn(a, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * kRows * kWidth * out_dim);
}

template <auto Fn>
void bm_matmul_tn(benchmark::State& state) {
  const Matrix a = random_matrix(kRows, kWidth, 1);
  const Matrix b = random_matrix(kRows, 4 * kWidth, 2);
  Matrix out;
  for (auto _ : state) {
    Fn(a, b, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Fn>
void bm_layer_norm(benchmark::State& state) {
  const Matrix x = random_matrix(kRows, kWidth, 3);
  const Matrix gamma = random_matrix(1, kWidth, 4);
  const Matrix beta = random_matrix(1, kWidth, 5);
  Matrix y, xhat;
  Vector inv_std;
  for (auto _ : state) {
    Fn(x, gamma, beta, 1e-5, y, xhat, inv_std);
    benchmark::DoNotOptimize(y.data());
  }
}

template <auto Fn>
void bm_gelu(benchmark::State& state) {
  const Matrix x = random_matrix(kRows, 4 * kWidth, 6);
  Matrix y;
  for (auto _ : state) {
    Fn(x, y);
    benchmark::DoNotOptimize(y.data());
  }
}

template <auto Fwd>
void bm_attention_forward(benchmark::State& state) {
  const int tokens = static_cast<int>(state.range(0));
  const int rows = kSeqs * tokens;
  const Matrix q = random_matrix(rows, kWidth, 7);
  const Matrix kk = random_matrix(rows, kWidth, 8);
  const Matrix v = random_matrix(rows, kWidth, 9);
  const auto s = spans(kSeqs, tokens);
  Matrix ctx;
  k::ProbBuffer probs;
  for (auto _ : state) {
    Fwd(q, kk, v, s, kHeads, ctx, probs);
    benchmark::DoNotOptimize(ctx.data());
  }
}

template <auto Fwd, auto Bwd>
void bm_attention_backward(benchmark::State& state) {
  const int tokens = static_cast<int>(state.range(0));
  const int rows = kSeqs * tokens;
  const Matrix q = random_matrix(rows, kWidth, 7);
  const Matrix kk = random_matrix(rows, kWidth, 8);
  const Matrix v = random_matrix(rows, kWidth, 9);
  const Matrix dctx = random_matrix(rows, kWidth, 10);
  const auto s = spans(kSeqs, tokens);
  Matrix ctx, dq, dk, dv;
  k::ProbBuffer probs;
  Fwd(q, kk, v, s, kHeads, ctx, probs);
  for (auto _ : state) {
    Bwd(q, kk, v, probs, dctx, s, kHeads, dq, dk, dv);
    benchmark::DoNotOptimize(dq.data());
  }
}

}  // namespace

BENCHMARK(bm_matmul<k::matmul>)->Name("matmul/parallel")->Arg(64)->Arg(256);
BENCHMARK(bm_matmul<k::reference::matmul>)->Name("matmul/reference")->Arg(64)->Arg(256);
BENCHMARK(bm_matmul_tn<k::matmul_tn>)->Name("matmul_tn/parallel");
BENCHMARK(bm_matmul_tn<k::reference::matmul_tn>)->Name("matmul_tn/reference");
BENCHMARK(bm_layer_norm<k::layer_norm_forward>)->Name("layer_norm/parallel");
BENCHMARK(bm_layer_norm<k::reference::layer_norm_forward>)->Name("layer_norm/reference");
BENCHMARK(bm_gelu<k::gelu_forward>)->Name("gelu/parallel");
BENCHMARK(bm_gelu<k::reference::gelu_forward>)->Name("gelu/reference");
BENCHMARK(bm_attention_forward<k::attention_forward>)->Name("attention_forward/parallel")->Arg(kTokens)->Arg(21);
BENCHMARK(bm_attention_forward<k::reference::attention_forward>)
    ->Name("attention_forward/reference")
    ->Arg(kTokens)
    ->Arg(21);
BENCHMARK(bm_attention_backward<k::attention_forward, k::attention_backward>)
    ->Name("attention_backward/parallel")
    ->Arg(kTokens)
    ->Arg(21);
BENCHMARK(bm_attention_backward<k::reference::attention_forward, k::reference::attention_backward>)
    ->Name("attention_backward/reference")
    ->Arg(kTokens)
    ->Arg(21);

BENCHMARK_MAIN();
