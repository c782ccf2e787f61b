#pragma once

// Group-relative policy optimisation at desk scale: group-normalised
// advantages, policy-token masking, clipped ratio surrogate and a KL penalty
// toward a frozen reference policy. A small softmax policy over action
// templates stands in for the VLM so every gradient can be checked exactly.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vrag/chat.hpp"
#include "vrag/reward.hpp"
#include "vrag/rollout.hpp"

namespace vrag {

struct GrpoConfig {
  int group_size = 5;
  double clip_epsilon = 0.2;
  double kl_coefficient = 0.01;
  double learning_rate = 1e-6;
  double advantage_std_floor = 1e-6;

  void validate() const;
  nlohmann::json to_json() const;
  static GrpoConfig from_json(const nlohmann::json& j);
};

/// Population-std group normalisation; all-equal rewards give all-zero advantages.
std::vector<double> compute_advantages(std::span<const double> rewards, const GrpoConfig& config);

enum class TokenSource : std::uint8_t { Prompt, Observation, Policy };

struct TokenizedTrajectory {
  std::vector<int> token_ids;
  std::vector<TokenSource> source;
  /// I(y_t); only honoured on Policy tokens.
  std::vector<std::uint8_t> mask;
  std::vector<double> logp_old;
  std::vector<double> logp_ref;
  /// Current-policy log-probs for externally scored policies.
  std::vector<double> logp_theta;
  /// Toy policy: the state each token was generated in (-1 for non-policy tokens).
  std::vector<int> state;

  std::size_t size() const noexcept { return token_ids.size(); }
  bool counts(std::size_t t) const noexcept { return mask[t] != 0 && source[t] == TokenSource::Policy; }
  std::size_t policy_tokens() const noexcept;
  void validate() const;
};

struct GrpoGroup {
  std::vector<TokenizedTrajectory> trajectories;
  std::vector<double> rewards;
  std::vector<double> advantages;  // one per trajectory, broadcast over its tokens
};

/// Softmax head over action templates, one row of logits per discrete state.
class ToyPolicy {
 public:
  ToyPolicy() = default;
  ToyPolicy(int states, int actions);

  int states() const noexcept { return states_; }
  int actions() const noexcept { return actions_; }
  std::span<double> params() noexcept { return logits_; }
  std::span<const double> params() const noexcept { return logits_; }

  std::vector<double> probs(int state) const;
  double log_prob(int state, int action) const;
  int greedy(int state) const;
  /// Inverse-CDF draw with u in [0, 1).
  int sample(int state, double u, double temperature = 1.0) const;

  bool operator==(const ToyPolicy&) const = default;

 private:
  int states_ = 0;
  int actions_ = 0;
  std::vector<double> logits_;
};

struct LossResult {
  double loss = 0.0;
  double surrogate = 0.0;  // group-mean clipped surrogate
  double kl = 0.0;         // group-mean KL estimate
  std::vector<double> grad;
};

/// Loss and exact parameter gradient for the toy policy. Per-token KL is the
/// categorical KL(pi_theta(.|s) || pi_ref(.|s)); `reference` supplies pi_ref.
LossResult grpo_loss(const GrpoGroup& group, const ToyPolicy& policy, const ToyPolicy& reference,
                     const GrpoConfig& config);
LossResult grpo_loss_serial(const GrpoGroup& group, const ToyPolicy& policy, const ToyPolicy& reference,
                            const GrpoConfig& config);

/// Loss over externally supplied log-probs (remote policies): KL uses the k3
/// estimator exp(ref - theta) - (ref - theta) - 1. `grad` holds dLoss/dlogp_theta
/// per token, concatenated over trajectories.
LossResult grpo_loss_logprob(const GrpoGroup& group, const GrpoConfig& config);

/// Plain REINFORCE-with-baseline gradient, the unclipped on-policy limit.
std::vector<double> reinforce_gradient(const GrpoGroup& group, const ToyPolicy& policy);

// ---- toy task -------------------------------------------------------------

/// Action templates available to the toy policy.
enum ToyAction : int {
  kSearchQuestion = 0,  // search with the question text
  kSearchGeneric = 1,   // search with an unrelated query
  kRegionCorner = 2,    // crop the top-left corner of the latest image
  kAnswerFromContext = 3,
  kMalformed = 4,
  kToyActionCount = 5,
};

int toy_state_count(int max_steps);

/// Chat client that samples the toy policy; temperature 0 decodes greedily.
/// A non-empty `forced` sequence replays those templates instead.
class ToyPolicyClient final : public ChatClient {
 public:
  ToyPolicyClient(std::shared_ptr<const ToyPolicy> policy, int max_steps, std::vector<int> forced = {});
  std::string complete(const std::vector<ChatMessage>& messages, const DecodingParams& params) override;
  std::string identity() const override { return "toy"; }

  static int state_of(const std::vector<ChatMessage>& messages, int max_steps);
  static std::string render(int action, const std::vector<ChatMessage>& messages);

 private:
  std::shared_ptr<const ToyPolicy> policy_;
  int max_steps_;
  std::vector<int> forced_;
};

/// Judge speaking the chat protocol that says True iff the normalised answers match.
class ExactMatchJudge final : public ChatClient {
 public:
  std::string complete(const std::vector<ChatMessage>& messages, const DecodingParams& params) override;
  std::string identity() const override { return "exact-match"; }
};

/// Template id of an Assistant turn in a toy rollout.
int toy_action_of(const Turn& turn, const std::string& question);

/// Turns -> tokens, one token per turn; Assistant turns are policy tokens.
TokenizedTrajectory tokenize_toy(const Trajectory& t, const QueryTask& task, const ToyPolicy& old_policy,
                                 const ToyPolicy& reference, int max_steps);

struct ToyEnvironment {
  std::shared_ptr<Corpus> corpus;
  EnvironmentBundle env;
  RewardWeights weights = RewardWeights::post_sft();
  int max_steps = 4;

  /// Planted synthetic corpus where searching the question then answering is optimal.
  static ToyEnvironment planted(std::uint64_t seed, int tasks = 8, int documents = 40);
  double reward(const Trajectory& t, const QueryTask& task) const;
};

struct CurvePoint {
  int update = 0;
  double mean_reward = 0.0;
  double loss = 0.0;
  double kl = 0.0;
  double greedy_reward = 0.0;
};

struct TrainOptions {
  int steps = 500;
  std::uint64_t seed = 1;
  int eval_every = 25;
  int workers = 1;
};

struct TrainResult {
  std::vector<CurvePoint> curve;
  bool diverged = false;
  double final_greedy_reward = 0.0;
};

/// Greedy-decoded mean reward over all tasks.
double greedy_reward(ToyEnvironment& env, const ToyPolicy& policy);

struct OptimumResult {
  double reward = 0.0;
  std::vector<int> actions;
};

/// Exhaustive search over every template sequence of at most max_steps actions.
OptimumResult enumerate_optimum(ToyEnvironment& env, const QueryTask& task);

TrainResult train_toy(ToyEnvironment& env, ToyPolicy& policy, const GrpoConfig& config,
                      const TrainOptions& options);

/// Default config for the toy task: table defaults except a step size a
/// handful of tabular parameters can actually move with.
GrpoConfig toy_grpo_config();

void write_curve_csv(const std::filesystem::path& path, std::span<const CurvePoint> curve);
std::vector<CurvePoint> read_curve_csv(const std::filesystem::path& path);

struct Checkpoint {
  ToyPolicy policy;
  GrpoConfig config;
  std::uint64_t seed = 0;
};

/// "VRAGCKPT" | u32 version | u32 states | u32 actions | f64 params... |
/// u64 seed | u32 len | config JSON. Little-endian.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace vrag
