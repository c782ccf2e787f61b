#include "vrag/reward.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <regex>

#include "vrag/errors.hpp"
#include "vrag/prompts.hpp"

namespace vrag {

void RewardWeights::validate() const {
  if (alpha < 0 || beta < 0 || gamma < 0) throw Error(ErrorCode::InvalidWeights, "weights must be >= 0");
  if (std::abs(alpha + beta + gamma - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidWeights,
                "alpha + beta + gamma = " + std::to_string(alpha + beta + gamma) + ", expected 1");
  }
}

RewardWeights RewardWeights::profile(std::string_view name) {
  if (name == "post-sft") return post_sft();
  if (name == "cold-start") return cold_start();
  throw Error(ErrorCode::Config, "unknown weights profile '" + std::string(name) + "'");
}

double dcg(std::span<const int> labels) {
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    sum += (std::exp2(double(labels[i])) - 1.0) / std::log2(double(i) + 2.0);
  }
  return sum;
}

double idcg(std::size_t n_rel) {
  double sum = 0.0;
  for (std::size_t i = 1; i <= n_rel; ++i) sum += 1.0 / std::log2(double(i) + 1.0);
  return sum;
}

RetrievalReward retrieval_reward(const std::vector<std::string>& retrieved_ids,
                                 const std::set<std::string>& golden_ids) {
  if (golden_ids.empty()) return {0.0, true};
  std::vector<int> labels;
  labels.reserve(retrieved_ids.size());
  for (const auto& id : retrieved_ids) labels.push_back(golden_ids.count(id) ? 1 : 0);
  return {dcg(labels) / idcg(golden_ids.size()), false};
}

double pattern_reward(const Trajectory& trajectory) {
  int total = 0, valid = 0;
  for (const auto& turn : trajectory.turns) {
    if (turn.role != Role::Assistant) continue;
    ++total;
    if (turn.text && parse_response(*turn.text).pattern_valid()) ++valid;
  }
  if (total == 0) return 0.0;
  const double terminal = trajectory.finish_reason == FinishReason::Answered ? 1.0 : 0.0;
  return terminal * double(valid) / double(total);
}

std::optional<bool> parse_judge_verdict(std::string_view text) {
  static const std::regex kVerdict(R"(<judge>\s*(true|false)\s*</judge>)", std::regex::icase);
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(text.begin(), text.end(), m, kVerdict)) return std::nullopt;
  auto word = m[1].str();
  return word[0] == 't' || word[0] == 'T';
}

OutcomeReward outcome_reward(const QueryTask& task, const std::optional<std::string>& predicted,
                             ChatClient& judge, const JudgeOptions& options) {
  OutcomeReward out;
  if (!predicted) {
    out.skipped = true;
    return out;
  }
  const std::vector<ChatMessage> messages = {
      {Role::System, std::string(prompts::kJudgeSystem), {}},
      {Role::User, prompts::judge_user(task.question, task.golden_answer, *predicted), {}}};
  for (int attempt = 0; attempt < std::max(1, options.attempts); ++attempt) {
    std::string reply;
    try {
      ++out.calls;
      reply = judge.complete(messages, options.decoding);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Timeout || e.code() == ErrorCode::PolicyUnreachable ||
          e.code() == ErrorCode::JudgeUnreachable) {
        throw Error(ErrorCode::JudgeUnreachable, e.what());
      }
      throw;
    }
    if (!out.transcript.empty()) out.transcript += "\n---\n";
    out.transcript += reply;
    if (auto verdict = parse_judge_verdict(reply)) {
      out.value = *verdict ? 1.0 : 0.0;
      return out;
    }
  }
  out.unparseable = true;
  out.value = 0.0;
  return out;
}

RewardBreakdown combine(double r_ret, double r_ans, double r_pat, const RewardWeights& w) {
  w.validate();
  RewardBreakdown b;
  b.r_ret = r_ret;
  b.r_ans = r_ans;
  b.r_pat = r_pat;
  b.r_total = w.alpha * r_ret + w.beta * r_ans + w.gamma * r_pat;
  return b;
}

namespace {

RewardBreakdown score_without_judge(const Trajectory& t, const QueryTask& task) {
  RewardBreakdown b;
  auto ret = retrieval_reward(t.retrieved_doc_ids, task.golden_doc_ids);
  b.r_ret = ret.value;
  if (ret.no_golden) b.flags |= kNoGolden;
  b.r_pat = pattern_reward(t);
  return b;
}

void apply_outcome(RewardBreakdown& b, const OutcomeReward& o, const RewardWeights& w) {
  auto flags = b.flags;
  auto full = combine(b.r_ret, o.value, b.r_pat, w);
  b = full;
  b.flags = flags;
  if (o.unparseable) b.flags |= kJudgeUnparseable;
  if (o.skipped) b.flags |= kNoAnswer;
  if (!o.transcript.empty()) b.judge_transcript = o.transcript;
}

const QueryTask& require_task(const TaskLookup& tasks, const std::string& id) {
  const QueryTask* task = tasks(id);
  if (!task) throw Error(ErrorCode::Config, "no task definition for " + id);
  return *task;
}

void mark_unreachable(RewardBreakdown& b, const RewardWeights& w) {
  auto flags = b.flags;
  b = combine(b.r_ret, 0.0, b.r_pat, w);
  b.flags = flags | kJudgeUnreachable;
}

}  // namespace

RewardBreakdown score_trajectory(const Trajectory& t, const QueryTask& task, const ScoreOptions& options) {
  auto b = score_without_judge(t, task);
  if (!options.judge) {
    b.flags |= kJudgeSkipped;
    return b;
  }
  apply_outcome(b, outcome_reward(task, t.final_answer(), *options.judge, options.judge_options),
                options.weights);
  return b;
}

std::vector<RewardBreakdown> score_batch_serial(std::span<const Trajectory> trajectories,
                                                const TaskLookup& tasks, const ScoreOptions& options) {
  options.weights.validate();
  std::vector<RewardBreakdown> out;
  out.reserve(trajectories.size());
  for (const auto& t : trajectories) {
    const auto& task = require_task(tasks, t.task_id);
    RewardBreakdown b;
    try {
      b = score_trajectory(t, task, options);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::JudgeUnreachable) throw;
      // One batch-level retry before giving up on this item.
      try {
        b = score_trajectory(t, task, options);
      } catch (const Error& e2) {
        if (e2.code() != ErrorCode::JudgeUnreachable) throw;
        b = score_without_judge(t, task);
        mark_unreachable(b, options.weights);
      }
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<RewardBreakdown> score_batch(std::span<const Trajectory> trajectories, const TaskLookup& tasks,
                                         const ScoreOptions& options) {
  options.weights.validate();
  const auto n = std::ptrdiff_t(trajectories.size());
  std::vector<RewardBreakdown> out(trajectories.size());
  std::vector<char> unreachable(trajectories.size(), 0);
  std::exception_ptr failure;

  auto run = [&](std::ptrdiff_t i) {
    const auto& t = trajectories[std::size_t(i)];
    try {
      const auto& task = require_task(tasks, t.task_id);
      out[std::size_t(i)] = score_trajectory(t, task, options);
      unreachable[std::size_t(i)] = 0;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::JudgeUnreachable) {
        unreachable[std::size_t(i)] = 1;
      } else {
#pragma omp critical(vrag_score_failure)
        if (!failure) failure = std::current_exception();
      }
    } catch (...) {
#pragma omp critical(vrag_score_failure)
      if (!failure) failure = std::current_exception();
    }
  };

  const int threads = std::max(1, options.max_parallel_judge_calls);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) run(i);
  if (failure) std::rethrow_exception(failure);

  // Batch-level retry of the unreachable slots, then give up on them.
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (unreachable[std::size_t(i)]) run(i);
  }
  if (failure) std::rethrow_exception(failure);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!unreachable[i]) continue;
    const auto& t = trajectories[i];
    out[i] = score_without_judge(t, require_task(tasks, t.task_id));
    mark_unreachable(out[i], options.weights);
  }
  return out;
}

std::vector<double> batch_retrieval_rewards_serial(std::span<const std::vector<int>> labels,
                                                   std::span<const std::size_t> n_rel) {
  if (labels.size() != n_rel.size()) throw Error(ErrorCode::ShapeMismatch, "labels vs n_rel");
  std::vector<double> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[i] = n_rel[i] == 0 ? 0.0 : dcg(labels[i]) / idcg(n_rel[i]);
  }
  return out;
}

std::vector<double> batch_retrieval_rewards(std::span<const std::vector<int>> labels,
                                            std::span<const std::size_t> n_rel) {
  if (labels.size() != n_rel.size()) throw Error(ErrorCode::ShapeMismatch, "labels vs n_rel");
  std::vector<double> out(labels.size());
  const auto n = std::ptrdiff_t(labels.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = std::size_t(i);
    out[k] = n_rel[k] == 0 ? 0.0 : dcg(labels[k]) / idcg(n_rel[k]);
  }
  return out;
}

nlohmann::json breakdown_to_json(const RewardBreakdown& b) {
  nlohmann::json j = {{"r_ret", b.r_ret}, {"r_pat", b.r_pat}};
  // Absent means "not computed", so the keys are left out rather than nulled.
  if (b.r_ans) j["r_ans"] = *b.r_ans;
  if (b.r_total) j["r_total"] = *b.r_total;
  auto flags = nlohmann::json::array();
  if (b.flags & kNoGolden) flags.push_back("NoGolden");
  if (b.flags & kJudgeUnparseable) flags.push_back("JudgeUnparseable");
  if (b.flags & kJudgeUnreachable) flags.push_back("JudgeUnreachable");
  if (b.flags & kJudgeSkipped) flags.push_back("JudgeSkipped");
  if (b.flags & kNoAnswer) flags.push_back("NoAnswer");
  j["flags"] = std::move(flags);
  if (b.judge_transcript) j["judge_transcript"] = *b.judge_transcript;
  return j;
}

}  // namespace vrag
