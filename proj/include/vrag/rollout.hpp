#pragma once

// Multi-turn interaction loop: generate -> parse -> dispatch (search, region
// crop, answer) until an answer or the action budget is hit.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vrag/chat.hpp"
#include "vrag/perception.hpp"
#include "vrag/retrieval.hpp"
#include "vrag/trajectory.hpp"

namespace vrag {

/// Replays a fixed list of responses; response i answers the i-th Assistant
/// slot, the last one repeats once the script runs out.
class ScriptedPolicy final : public ChatClient {
 public:
  explicit ScriptedPolicy(std::vector<std::string> responses);
  static ScriptedPolicy from_actions(const std::vector<Action>& actions, std::string thought = "next step");
  /// Search(oracle query) then Answer(golden answer) for a planted task.
  static ScriptedPolicy oracle(const Corpus& corpus, const QueryTask& task);

  std::string complete(const std::vector<ChatMessage>& messages, const DecodingParams& params) override;
  std::string identity() const override { return "scripted"; }

 private:
  std::vector<std::string> responses_;
};

struct EnvironmentBundle {
  std::shared_ptr<Retriever> retriever;
  std::shared_ptr<PerceptionEngine> perception;
  std::string system_prompt;  // empty: the default agent prompt
  int top_k = 1;
  int env_attempts = 3;
  /// Simulated pages carry their surrogate caption as observation text.
  bool captions = true;
  std::shared_ptr<const Corpus> corpus;  // for captions; may be null

  std::string effective_system_prompt() const;
};

struct RolloutOptions {
  RolloutConfig config;
  DecodingParams decoding;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Observation-text prefixes; the toy policy keys its state on them.
namespace observation {
inline constexpr std::string_view kPage = "[page ";
inline constexpr std::string_view kCrop = "[crop ";
inline constexpr std::string_view kEnvError = "[environment error] ";
}  // namespace observation

/// Conversation as sent to the policy.
std::vector<ChatMessage> to_messages(const Trajectory& t, const EnvironmentBundle& env);

/// Fresh trajectory holding the system prompt and the query turn.
Trajectory start_trajectory(const QueryTask& task, const EnvironmentBundle& env);

struct DispatchResult {
  Turn observation;
  bool invalid = false;
  std::optional<nlohmann::json> provenance;
};

/// Executes one non-Answer action against the environment.
DispatchResult dispatch_action(const Action& action, const Trajectory& t, EnvironmentBundle& env);

Trajectory rollout(const QueryTask& task, ChatClient& policy, EnvironmentBundle& env,
                   const RolloutOptions& options, std::vector<nlohmann::json>* provenance = nullptr);

/// G independent rollouts with seeds derived from `options.seed`; slot order is stable.
/// A slot whose policy became unreachable is returned with finish_reason FatalError.
std::vector<Trajectory> rollout_group(const QueryTask& task, ChatClient& policy, EnvironmentBundle& env,
                                      const RolloutOptions& options, int group_size);

}  // namespace vrag
