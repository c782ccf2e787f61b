// OpenMP kernels against their serial references.

#include <benchmark/benchmark.h>

#include <random>

#include "vrag/grpo.hpp"
#include "vrag/image.hpp"
#include "vrag/reward.hpp"

using namespace vrag;

namespace {

Image noise_image(int w, int h) {
  Image img(w, h, 3);
  std::mt19937 rng(1);
  for (auto& p : img.pixels) p = std::uint8_t(rng());
  return img;
}

void BM_ResizeParallel(benchmark::State& s) {
  auto img = noise_image(2480, 3508);
  for (auto _ : s) benchmark::DoNotOptimize(resize_bilinear(img, int(s.range(0)), int(s.range(0) * 1414 / 1000)));
}
void BM_ResizeSerial(benchmark::State& s) {
  auto img = noise_image(2480, 3508);
  for (auto _ : s) benchmark::DoNotOptimize(resize_bilinear_serial(img, int(s.range(0)), int(s.range(0) * 1414 / 1000)));
}
BENCHMARK(BM_ResizeParallel)->Arg(840)->Arg(1680)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ResizeSerial)->Arg(840)->Arg(1680)->Unit(benchmark::kMillisecond);

struct LabelBatch {
  std::vector<std::vector<int>> labels;
  std::vector<std::size_t> n_rel;
};

LabelBatch label_batch(std::size_t n) {
  LabelBatch b;
  std::mt19937_64 rng(3);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> l(1 + rng() % 12);
    for (auto& v : l) v = int(rng() % 2);
    b.n_rel.push_back(1 + rng() % 4);
    b.labels.push_back(std::move(l));
  }
  return b;
}

void BM_RetrievalRewardsParallel(benchmark::State& s) {
  auto b = label_batch(std::size_t(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(batch_retrieval_rewards(b.labels, b.n_rel));
}
void BM_RetrievalRewardsSerial(benchmark::State& s) {
  auto b = label_batch(std::size_t(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(batch_retrieval_rewards_serial(b.labels, b.n_rel));
}
BENCHMARK(BM_RetrievalRewardsParallel)->Arg(1 << 14)->Arg(1 << 18);
BENCHMARK(BM_RetrievalRewardsSerial)->Arg(1 << 14)->Arg(1 << 18);

struct LossInputs {
  GrpoGroup group;
  ToyPolicy policy, reference;
  GrpoConfig config;
};

LossInputs loss_inputs(int group, int tokens) {
  LossInputs in;
  const int S = 64, A = 16;
  in.policy = ToyPolicy(S, A);
  in.reference = ToyPolicy(S, A);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 1);
  for (auto& v : in.policy.params()) v = n(rng);
  in.config.group_size = group;
  for (int i = 0; i < group; ++i) {
    TokenizedTrajectory t;
    for (int k = 0; k < tokens; ++k) {
      const int st = int(rng() % S), a = int(rng() % A);
      t.token_ids.push_back(a);
      t.state.push_back(st);
      t.source.push_back(TokenSource::Policy);
      t.mask.push_back(1);
      t.logp_old.push_back(in.policy.log_prob(st, a) + 0.05 * n(rng));
      t.logp_ref.push_back(in.reference.log_prob(st, a));
    }
    in.group.trajectories.push_back(std::move(t));
    in.group.rewards.push_back(double(rng() % 2));
  }
  in.group.rewards[0] = 1.0;
  in.group.rewards[1] = 0.0;
  in.group.advantages = compute_advantages(in.group.rewards, in.config);
  return in;
}

void BM_GrpoLossParallel(benchmark::State& s) {
  auto in = loss_inputs(int(s.range(0)), 512);
  for (auto _ : s) benchmark::DoNotOptimize(grpo_loss(in.group, in.policy, in.reference, in.config));
}
void BM_GrpoLossSerial(benchmark::State& s) {
  auto in = loss_inputs(int(s.range(0)), 512);
  for (auto _ : s) benchmark::DoNotOptimize(grpo_loss_serial(in.group, in.policy, in.reference, in.config));
}
BENCHMARK(BM_GrpoLossParallel)->Arg(5)->Arg(64);
BENCHMARK(BM_GrpoLossSerial)->Arg(5)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
