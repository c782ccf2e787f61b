#pragma once

// Retrieval-efficiency (NDCG over the trajectory's retrieved pages), pattern
// and judge-based outcome rewards, and their weighted combination.

#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vrag/chat.hpp"
#include "vrag/trajectory.hpp"

namespace vrag {

struct RewardWeights {
  double alpha = 0.3;  // retrieval
  double beta = 0.7;   // outcome
  double gamma = 0.0;  // pattern

  void validate() const;

  /// Pattern learned during SFT: gamma = 0.
  static RewardWeights post_sft() { return {0.3, 0.7, 0.0}; }
  /// RL from a base model: gamma = 0.1.
  static RewardWeights cold_start() { return {0.45, 0.45, 0.1}; }
  static RewardWeights profile(std::string_view name);
};

enum RewardFlag : unsigned {
  kNoGolden = 1u << 0,
  kJudgeUnparseable = 1u << 1,
  kJudgeUnreachable = 1u << 2,
  kJudgeSkipped = 1u << 3,
  kNoAnswer = 1u << 4,
};

struct RewardBreakdown {
  double r_ret = 0.0;
  std::optional<double> r_ans;  // absent when the judge was skipped
  double r_pat = 0.0;
  std::optional<double> r_total;
  std::optional<std::string> judge_transcript;
  unsigned flags = 0;
};

double dcg(std::span<const int> labels);
double idcg(std::size_t n_rel);

struct RetrievalReward {
  double value = 0.0;
  bool no_golden = false;
};

RetrievalReward retrieval_reward(const std::vector<std::string>& retrieved_ids,
                                 const std::set<std::string>& golden_ids);

/// Valid-turn fraction times the terminal indicator (1 iff Answered).
double pattern_reward(const Trajectory& trajectory);

struct JudgeOptions {
  int attempts = 3;
  DecodingParams decoding{0.0, 1.0, 64, 0};
};

struct OutcomeReward {
  double value = 0.0;
  bool unparseable = false;
  bool skipped = false;  // no predicted answer, judge not called
  int calls = 0;
  std::string transcript;
};

/// Parses "<judge>True|False</judge>" case-insensitively.
std::optional<bool> parse_judge_verdict(std::string_view text);

/// Renders the judge prompt and maps the verdict to {0, 1}. Throws
/// ErrorCode::JudgeUnreachable when the endpoint is down.
OutcomeReward outcome_reward(const QueryTask& task, const std::optional<std::string>& predicted,
                             ChatClient& judge, const JudgeOptions& options = {});

RewardBreakdown combine(double r_ret, double r_ans, double r_pat, const RewardWeights& weights);

using TaskLookup = std::function<const QueryTask*(const std::string& task_id)>;

struct ScoreOptions {
  RewardWeights weights;
  ChatClient* judge = nullptr;  // nullptr: r_ans and r_total are left absent
  JudgeOptions judge_options;
  int max_parallel_judge_calls = 4;
};

/// Scores a finished trajectory end to end.
RewardBreakdown score_trajectory(const Trajectory& t, const QueryTask& task, const ScoreOptions& options);

/// Batch scoring with bounded parallel judge calls. Output order follows
/// input order; trajectories whose judge stayed unreachable after one batch-level
/// retry get r_ans = 0 and kJudgeUnreachable.
std::vector<RewardBreakdown> score_batch(std::span<const Trajectory> trajectories, const TaskLookup& tasks,
                                         const ScoreOptions& options);
std::vector<RewardBreakdown> score_batch_serial(std::span<const Trajectory> trajectories,
                                                const TaskLookup& tasks, const ScoreOptions& options);

/// Retrieval rewards for many (labels, |D_rel|) pairs: OpenMP kernel and serial reference.
std::vector<double> batch_retrieval_rewards(std::span<const std::vector<int>> labels,
                                            std::span<const std::size_t> n_rel);
std::vector<double> batch_retrieval_rewards_serial(std::span<const std::vector<int>> labels,
                                                   std::span<const std::size_t> n_rel);

nlohmann::json breakdown_to_json(const RewardBreakdown& b);

}  // namespace vrag
