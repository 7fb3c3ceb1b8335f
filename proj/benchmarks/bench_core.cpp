#include <benchmark/benchmark.h>

#include "dasein/channel_digital.hpp"
#include "dasein/datapipe.hpp"
#include "dasein/losses.hpp"
#include "dasein/trainer.hpp"

using namespace dasein;

namespace {

std::vector<Vec> random_vectors(int n, int dim, std::uint64_t seed) {
  RngStream rng = RngStream::derive(seed, "bench");
  std::vector<Vec> out;
  for (int i = 0; i < n; ++i) {
    Vec v(dim);
    for (int d = 0; d < dim; ++d) v[d] = rng.gaussian();
    out.push_back(v);
  }
  return out;
}

net::ModelConfig bench_model() {
  net::ModelConfig c;
  c.view_size = 16;
  c.conv_filters = 6;
  c.a_in = 64;
  c.compression_rate = 0.1;
  c.classes = 5;
  c.devices = 4;
  return c;
}

void BM_GaussianKernel(benchmark::State& state) {
  auto xs = random_vectors(2, 24, 1);
  for (auto _ : state) benchmark::DoNotOptimize(loss::gaussian_kernel(xs[0], xs[1], 1.0));
}
BENCHMARK(BM_GaussianKernel);

void BM_Lmmd(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto zs = random_vectors(n, 24, 2);
  auto zt = random_vectors(n, 24, 3);
  std::vector<int> ys(n);
  std::vector<net::PredictionDist> pt;
  RngStream rng = RngStream::derive(4, "labels");
  for (int i = 0; i < n; ++i) {
    ys[i] = static_cast<int>(rng.integer(5));
    Vec p = Vec::Constant(5, 0.025);
    p[rng.integer(5)] = 0.9;
    pt.push_back(net::PredictionDist::from_probs(p));
  }
  loss::KernelSpec k;
  k.mode = loss::BandwidthMode::fixed;
  for (auto _ : state) benchmark::DoNotOptimize(loss::lmmd(zs, ys, zt, pt, 5, k));
}
BENCHMARK(BM_Lmmd)->Arg(16)->Arg(64);

void BM_LmmdWithGrad(benchmark::State& state) {
  const int n = 16;
  auto zs = random_vectors(n, 24, 5);
  auto zt = random_vectors(n, 24, 6);
  std::vector<int> ys(n);
  std::vector<net::PredictionDist> pt;
  RngStream rng = RngStream::derive(7, "labels");
  for (int i = 0; i < n; ++i) {
    ys[i] = static_cast<int>(rng.integer(5));
    Vec p = Vec::Constant(5, 0.025);
    p[rng.integer(5)] = 0.9;
    pt.push_back(net::PredictionDist::from_probs(p));
  }
  loss::KernelSpec k;
  k.mode = loss::BandwidthMode::fixed;
  for (auto _ : state) benchmark::DoNotOptimize(loss::lmmd_with_grad(zs, ys, zt, pt, 5, k));
}
BENCHMARK(BM_LmmdWithGrad);

void BM_SampleForward(benchmark::State& state) {
  const net::ModelConfig cfg = bench_model();
  net::Model m = net::Model::init(cfg, 1);
  data::ShiftSpec shift;
  auto [src, tgt] = data::synth_shift_dataset(shift, 1, 5, 4, 16, 1);
  const auto& sample = src.samples.front();
  for (auto _ : state) {
    Vec f = m.sre_forward(sample.views[0]);
    benchmark::DoNotOptimize(m.cce_forward(f));
  }
}
BENCHMARK(BM_SampleForward);

void BM_TrainStep(benchmark::State& state) {
  const net::ModelConfig cfg = bench_model();
  net::Model m = net::Model::init(cfg, 1);
  data::ShiftSpec shift;
  auto [src, tgt] = data::synth_shift_dataset(shift, 8, 5, 4, 16, 2);
  train::TrainPlan plan;
  plan.kernel.mode = loss::BandwidthMode::fixed;
  train::Step1BatchInput in;
  for (int i = 0; i < 16; ++i) {
    in.source.push_back(&src.samples[i % src.size()]);
    in.source_labels.push_back(*in.source.back()->label);
    in.target.push_back(&tgt.samples[i % tgt.size()]);
  }
  const auto ch = channel::ChannelSpec::analog(5.0, 4);
  RngStream ns = RngStream::derive(3, "s");
  RngStream nt = RngStream::derive(3, "t");
  const auto bank_s = train::draw_noise_bank(16, 4, cfg.a_out(), ns);
  const auto bank_t = train::draw_noise_bank(16, 4, cfg.a_out(), nt);
  net::ModelGrads grads = net::ModelGrads::zeros_like(m);
  for (auto _ : state) {
    grads.set_zero();
    benchmark::DoNotOptimize(
        train::step1_loss_and_grads(m, in, ch, bank_s, bank_t, plan, 20, grads));
  }
}
BENCHMARK(BM_TrainStep);

void BM_DigitalChain(benchmark::State& state) {
  channel::QuantizerSpec spec;
  RngStream gen = RngStream::derive(9, "z");
  Vec z(204);
  for (int i = 0; i < 204; ++i) z[i] = std::tanh(gen.gaussian());
  RngStream rng = RngStream::derive(9, "chain");
  for (auto _ : state)
    benchmark::DoNotOptimize(channel::digital_infer_forward(z, spec, 0.56, rng));
}
BENCHMARK(BM_DigitalChain);

void BM_Awgn(benchmark::State& state) {
  Vec z = Vec::Ones(10000);
  RngStream rng = RngStream::derive(10, "awgn");
  for (auto _ : state) benchmark::DoNotOptimize(channel::awgn(z, 0.5, rng));
}
BENCHMARK(BM_Awgn);

}  // namespace

BENCHMARK_MAIN();
