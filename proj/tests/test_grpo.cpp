#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "vrag/errors.hpp"
#include "vrag/grpo.hpp"

using namespace vrag;

TEST_CASE("advantages") {
  GrpoConfig c;
  auto a = compute_advantages(std::vector<double>{1, 0, 0, 0}, c);
  // population std of {1,0,0,0} is sqrt(3)/4
  CHECK(a[0] == doctest::Approx(0.75 / (std::sqrt(3.0) / 4)));
  CHECK(a[1] == doctest::Approx(-0.25 / (std::sqrt(3.0) / 4)));
  auto flat = compute_advantages(std::vector<double>{0.4, 0.4, 0.4}, c);
  for (double v : flat) CHECK(v == 0.0);
  CHECK_THROWS_AS(compute_advantages(std::vector<double>{1.0}, c), Error);
  CHECK(oracle::centering_error(2000, 3) < 1e-9);
}

TEST_CASE("config validation and JSON") {
  GrpoConfig c;
  c.group_size = 1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = GrpoConfig{};
  c.clip_epsilon = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = toy_grpo_config();
  CHECK(c.group_size == 5);
  CHECK(c.kl_coefficient == 0.01);
  auto back = GrpoConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
}

TEST_CASE("analytic gradient matches finite differences") {
  auto rep = oracle::gradient_check(60, 21);
  INFO(rep.first_failure);
  CHECK(rep.failures == 0);
  CHECK(rep.max_rel_error < 1e-4);
  CHECK(rep.max_loss_error < 1e-12);
}

TEST_CASE("masked and non-policy tokens contribute nothing") {
  auto rep = oracle::mask_exclusion(100, 5);
  CHECK(rep.max_loss_change <= 1e-8);
  CHECK(rep.max_grad_change <= 1e-8);
}

TEST_CASE("identity policies: ratio one, no KL") {
  std::mt19937_64 rng(1);
  auto pr = oracle::random_probe(rng);
  for (auto& tr : pr.group.trajectories) {
    for (std::size_t t = 0; t < tr.size(); ++t) tr.logp_old[t] = pr.policy.log_prob(tr.state[t], tr.token_ids[t]);
  }
  auto r = grpo_loss(pr.group, pr.policy, pr.policy, pr.config);
  double mean_adv = 0;
  for (double a : pr.group.advantages) mean_adv += a / double(pr.group.advantages.size());
  CHECK(r.kl == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(r.loss == doctest::Approx(-mean_adv).epsilon(1e-12));
}

TEST_CASE("clip removes the ratio gradient once past 1 + eps") {
  ToyPolicy policy(1, 2), ref(1, 2);
  policy.params()[0] = 2.0;  // p(0) ~ 0.88
  TokenizedTrajectory tr;
  tr.token_ids = {0};
  tr.source = {TokenSource::Policy};
  tr.mask = {1};
  tr.state = {0};
  tr.logp_old = {std::log(0.5)};  // ratio ~ 1.76
  tr.logp_ref = {std::log(0.5)};
  GrpoGroup g{{tr}, {1.0}, {1.0}};
  GrpoConfig c;
  c.kl_coefficient = 0;
  auto r = grpo_loss(g, policy, ref, c);
  CHECK(r.grad[0] == 0.0);
  CHECK(r.grad[1] == 0.0);
  // negative advantage keeps the unclipped branch
  g.advantages = {-1.0};
  CHECK(grpo_loss(g, policy, ref, c).grad[0] != 0.0);
}

TEST_CASE("without clipping and on-policy the gradient is REINFORCE") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 50; ++i) {
    auto pr = oracle::random_probe(rng);
    for (auto& tr : pr.group.trajectories) {
      for (std::size_t t = 0; t < tr.size(); ++t) tr.logp_old[t] = pr.policy.log_prob(tr.state[t], tr.token_ids[t]);
    }
    pr.config.clip_epsilon = 1e9;
    pr.config.kl_coefficient = 0;
    auto g = grpo_loss(pr.group, pr.policy, pr.reference, pr.config).grad;
    auto pg = reinforce_gradient(pr.group, pr.policy);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(std::abs(g[k] - pg[k]) <= 1e-8);
  }
}

TEST_CASE("parallel loss is bitwise equal to the serial reference") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 100; ++i) {
    auto pr = oracle::random_probe(rng);
    auto a = grpo_loss(pr.group, pr.policy, pr.reference, pr.config);
    auto b = grpo_loss_serial(pr.group, pr.policy, pr.reference, pr.config);
    CHECK(a.loss == b.loss);
    CHECK(a.grad == b.grad);
  }
}

TEST_CASE("empty mask is an error") {
  std::mt19937_64 rng(2);
  auto pr = oracle::random_probe(rng);
  auto& tr = pr.group.trajectories[0];
  std::fill(tr.mask.begin(), tr.mask.end(), std::uint8_t(0));
  CHECK_THROWS_AS(grpo_loss(pr.group, pr.policy, pr.reference, pr.config), Error);
  pr.group.trajectories[0].mask.pop_back();
  CHECK_THROWS_AS(grpo_loss(pr.group, pr.policy, pr.reference, pr.config), Error);
}

TEST_CASE("log-prob variant gradient against finite differences") {
  std::mt19937_64 rng(31);
  auto lp_loss = [](GrpoGroup g, const GrpoConfig& c) { return grpo_loss_logprob(g, c).loss; };
  long checked = 0;
  for (int i = 0; i < 40; ++i) {
    auto pr = oracle::random_probe(rng);
    for (auto& tr : pr.group.trajectories) {
      tr.logp_theta.clear();
      for (std::size_t t = 0; t < tr.size(); ++t) tr.logp_theta.push_back(pr.policy.log_prob(tr.state[t], tr.token_ids[t]));
    }
    auto r = grpo_loss_logprob(pr.group, pr.config);
    std::size_t k = 0;
    for (std::size_t j = 0; j < pr.group.trajectories.size(); ++j) {
      for (std::size_t t = 0; t < pr.group.trajectories[j].size(); ++t, ++k) {
        const double h = 1e-6;
        auto plus = pr.group, minus = pr.group;
        plus.trajectories[j].logp_theta[t] += h;
        minus.trajectories[j].logp_theta[t] -= h;
        const double fd = (lp_loss(plus, pr.config) - lp_loss(minus, pr.config)) / (2 * h);
        CHECK(std::abs(r.grad[k] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
        if (!pr.group.trajectories[j].counts(t)) CHECK(r.grad[k] == 0.0);
        ++checked;
      }
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("toy policy sampling") {
  ToyPolicy p(2, 3);
  p.params()[1] = 1.0;
  CHECK(p.greedy(0) == 1);
  CHECK(p.sample(0, 0.99, 0.0) == 1);
  auto pr = p.probs(0);
  CHECK(pr[0] + pr[1] + pr[2] == doctest::Approx(1.0));
  CHECK(p.sample(0, 0.0) == 0);
  CHECK(p.sample(0, pr[0] + 1e-9) == 1);
  CHECK(p.sample(0, 0.999999) == 2);
  CHECK(p.log_prob(0, 1) == doctest::Approx(std::log(pr[1])));
}

TEST_CASE("training is deterministic and lr = 0 leaves parameters alone") {
  auto env = ToyEnvironment::planted(5);
  auto cfg = toy_grpo_config();
  TrainOptions o;
  o.steps = 10;
  o.seed = 4;
  o.eval_every = 5;
  ToyPolicy a(toy_state_count(env.max_steps), kToyActionCount), b = a;
  auto ra = train_toy(env, a, cfg, o);
  auto rb = train_toy(env, b, cfg, o);
  CHECK(a == b);
  REQUIRE(ra.curve.size() == rb.curve.size());
  for (std::size_t i = 0; i < ra.curve.size(); ++i) CHECK(ra.curve[i].loss == rb.curve[i].loss);

  ToyPolicy z(toy_state_count(env.max_steps), kToyActionCount);
  const auto before = z;
  cfg.learning_rate = 0;
  train_toy(env, z, cfg, o);
  CHECK(z == before);

  o.steps = 0;
  ToyPolicy untouched = a;
  train_toy(env, untouched, toy_grpo_config(), o);
  CHECK(untouched == a);
}

TEST_CASE("toy training reaches the enumerated optimum") {
  auto env = ToyEnvironment::planted(1);
  double optimum = 0;
  for (const auto& t : env.corpus->tasks) optimum += enumerate_optimum(env, t).reward / double(env.corpus->tasks.size());
  CHECK(optimum == doctest::Approx(1.0));
  ToyPolicy p(toy_state_count(env.max_steps), kToyActionCount);
  TrainOptions o;
  o.steps = 500;
  o.seed = 1;
  auto r = train_toy(env, p, toy_grpo_config(), o);
  CHECK_FALSE(r.diverged);
  CHECK(r.final_greedy_reward >= 0.95 * optimum);
}

TEST_CASE("a huge KL coefficient pins the policy to the reference") {
  auto env = ToyEnvironment::planted(1);
  auto cfg = toy_grpo_config();
  cfg.kl_coefficient = 100;
  TrainOptions o;
  o.steps = 100;
  ToyPolicy p(toy_state_count(env.max_steps), kToyActionCount);
  auto r = train_toy(env, p, cfg, o);
  ToyPolicy fresh(toy_state_count(env.max_steps), kToyActionCount);
  CHECK(r.final_greedy_reward <= greedy_reward(env, fresh) + 1e-12);
}

TEST_CASE("non-finite loss flags divergence") {
  auto env = ToyEnvironment::planted(1);
  auto cfg = toy_grpo_config();
  cfg.learning_rate = 1e308;
  TrainOptions o;
  o.steps = 50;
  ToyPolicy p(toy_state_count(env.max_steps), kToyActionCount);
  CHECK(train_toy(env, p, cfg, o).diverged);
}

TEST_CASE("checkpoint and curve files round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "vrag_grpo_test";
  std::filesystem::create_directories(dir);
  Checkpoint ck{ToyPolicy(3, 4), toy_grpo_config(), 99};
  for (std::size_t k = 0; k < ck.policy.params().size(); ++k) ck.policy.params()[k] = 0.1 * double(k) - 0.3;
  save_checkpoint(dir / "c.bin", ck);
  auto back = load_checkpoint(dir / "c.bin");
  CHECK(back.policy == ck.policy);
  CHECK(back.seed == 99);
  CHECK(back.config.to_json() == ck.config.to_json());
  std::ofstream(dir / "bad.bin") << "NOTACKPT";
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.bin"), Error);

  std::vector<CurvePoint> curve{{0, 0.5, -0.1, 0.0, 0.3}, {1, 0.75, -0.2, 0.01, std::nan("")}};
  write_curve_csv(dir / "c.csv", curve);
  auto rc = read_curve_csv(dir / "c.csv");
  REQUIRE(rc.size() == 2);
  CHECK(rc[1].mean_reward == 0.75);
  CHECK(rc[0].greedy_reward == 0.3);
  CHECK(std::isnan(rc[1].greedy_reward));
  std::filesystem::remove_all(dir);
}
