#pragma once

// Multi-expert trajectory synthesis: a guide model plans each thought/action,
// a grounding expert supplies the region coordinates, and only clean, correct
// trajectories are kept, balanced over step count and action mix.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vrag/errors.hpp"
#include "vrag/reward.hpp"
#include "vrag/rollout.hpp"

namespace vrag {

struct ExpertClients {
  ChatClient* guide = nullptr;
  ChatClient* grounding = nullptr;
};

struct GuideStep {
  std::string thought;
  Action action;
  int attempts = 1;
};

/// One planning step. A response that breaks the grammar, or a Region step
/// with no image in context yet, earns one corrective re-prompt.
GuideStep guide_step(const Trajectory& history, ChatClient& guide, const EnvironmentBundle& env,
                     const DecodingParams& decoding);

/// Replaces a Region action's box with the grounding expert's; other actions
/// pass through. Throws GroundingDegenerate when the expert's box is unusable.
Action reground_region(const Trajectory& history, const std::string& thought, const Action& action,
                       ChatClient& grounding, EnvironmentBundle& env, const DecodingParams& decoding);

enum class ActionMix { Search, Perception, Any };
std::string_view to_string(ActionMix m);
ActionMix action_mix_from_string(std::string_view s);

/// Search-only trajectories are Search, any Region step makes it Perception.
ActionMix action_mix_of(const Trajectory& t);

inline constexpr int kMinBucketSteps = 2;
inline constexpr int kMaxBucketSteps = 6;

struct BalanceTargets {
  /// (step_count, mix) -> wanted count. Any accepts either concrete mix.
  std::map<std::pair<int, ActionMix>, int> buckets;
  /// Requested dataset size; 0 means "whatever the buckets add up to".
  int total = 0;

  int sum() const;
  void validate() const;
  nlohmann::json to_json() const;
  static BalanceTargets from_json(const nlohmann::json& j);
};

struct SynthesisOptions {
  BalanceTargets targets;
  int max_attempts = 200;
  RolloutConfig config;
  DecodingParams decoding;
  RewardWeights weights = RewardWeights::post_sft();
  ChatClient* judge = nullptr;
  JudgeOptions judge_options;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct DatasetRecord {
  std::string task_id;
  int step_count = 0;
  ActionMix mix = ActionMix::Search;
  std::map<std::string, int> actions;  // action kind -> count
};

struct DatasetResult {
  std::vector<Trajectory> trajectories;
  std::vector<DatasetRecord> records;
  std::map<std::pair<int, ActionMix>, int> achieved;
  BalanceTargets targets;
  int attempts = 0;
  int discarded = 0;  // guide or grounding failures
  int rejected = 0;   // failed the quality gate
  int overflow = 0;   // good but no open bucket

  bool complete() const;
  nlohmann::json manifest() const;
};

/// Raised when the attempt budget runs out; carries whatever was accepted.
class SynthesisExhausted : public Error {
 public:
  explicit SynthesisExhausted(DatasetResult partial);
  const DatasetResult& partial() const noexcept { return partial_; }

 private:
  DatasetResult partial_;
};

/// One guided episode; nullopt when a step had to be discarded.
std::optional<Trajectory> synthesize_trajectory(const QueryTask& task, const ExpertClients& clients,
                                                EnvironmentBundle& env, const SynthesisOptions& options,
                                                std::uint64_t seed);

/// True when the trajectory passes the export gate (answered, r_pat = 1, r_ans = 1).
bool passes_quality_gate(const Trajectory& t, const QueryTask& task, const SynthesisOptions& options);

DatasetResult synthesize_dataset(const std::vector<QueryTask>& tasks, const ExpertClients& clients,
                                 EnvironmentBundle& env, const SynthesisOptions& options);

/// Offline stand-in guide for planted corpora: Search, a question-dependent
/// number of extra Search/Region steps (regions with a deliberately coarse
/// box), then the golden answer.
class SimulatedGuide final : public ChatClient {
 public:
  explicit SimulatedGuide(std::shared_ptr<const Corpus> corpus);
  std::string complete(const std::vector<ChatMessage>& messages, const DecodingParams& params) override;
  std::string identity() const override { return "simulated-guide"; }

 private:
  std::shared_ptr<const Corpus> corpus_;
};

/// Offline grounding expert: always answers with `box`.
class FixedGrounding final : public ChatClient {
 public:
  explicit FixedGrounding(std::array<std::int64_t, 4> box = {28, 28, 476, 364}) : box_(box) {}
  std::string complete(const std::vector<ChatMessage>& messages, const DecodingParams& params) override;
  std::string identity() const override { return "fixed-grounding"; }

 private:
  std::array<std::int64_t, 4> box_;
};

/// Chat-style fine-tuning record: system/user/assistant messages, images by reference.
nlohmann::json to_sft_record(const Trajectory& t, const EnvironmentBundle& env);

}  // namespace vrag
