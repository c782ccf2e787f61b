#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vrag/action_grammar.hpp"
#include "vrag/perception.hpp"

namespace vrag {

struct QueryTask {
  std::string id;
  std::string question;
  std::string golden_answer;
  std::set<std::string> golden_doc_ids;
  std::string corpus_id;
  bool answer_only = false;

  void validate() const;
};

enum class Role { System, User, Assistant };
std::string_view to_string(Role r);
Role role_from_string(std::string_view s);

struct Turn {
  Role role = Role::User;
  std::optional<std::string> text;
  std::vector<ImageObservation> images;
  std::optional<std::string> thought;
  std::optional<Action> action;
  /// Who produced the action ("policy", "guide", "expert"); empty when unknown.
  std::string action_source;

  static Turn system(std::string text);
  static Turn user(std::string text, std::vector<ImageObservation> images = {});
  static Turn assistant(std::string raw_text);
};

enum class FinishReason { Answered, BudgetExhausted, FatalError };
std::string_view to_string(FinishReason r);
FinishReason finish_reason_from_string(std::string_view s);

struct Trajectory {
  std::string task_id;
  std::vector<Turn> turns;
  bool finished = false;
  std::optional<FinishReason> finish_reason;
  std::vector<std::string> retrieved_doc_ids;
  int invalid_action_count = 0;
  int step_count = 0;

  /// All image observations in context order (what a region target_index counts over).
  std::vector<ImageObservation> image_observations() const;
  /// Number of Assistant turns, i.e. attempted actions.
  int assistant_turns() const;
  const Turn* last_assistant() const;
  std::optional<std::string> final_answer() const;
};

struct RolloutConfig {
  int max_iterations = 10;
  int max_prompt_tokens = 8192;
  int max_response_tokens = 2048;

  void validate() const;
};

/// Appends a turn, tracking steps and first-occurrence retrieved ids.
void append_turn(Trajectory& trajectory, Turn turn);

/// Marks the trajectory finished; it is immutable afterwards.
void finish(Trajectory& trajectory, FinishReason reason);

struct Metrics {
  double finish_rate = 0.0;
  double invalid_action_rate = 0.0;
  double mean_steps = 0.0;
};

Metrics compute_metrics(std::span<const Trajectory> trajectories);

/// Structural checks: role rules, dedup, step bookkeeping, Answered <=> Answer.
/// Returns an empty string when all hold, else the first broken rule.
std::string check_invariants(const Trajectory& t);

nlohmann::json trajectory_to_json(const Trajectory& t);
Trajectory trajectory_from_json(const nlohmann::json& j);

/// Line-delimited JSON persistence; one trajectory per line.
void write_jsonl(std::ostream& out, std::span<const Trajectory> trajectories);
void write_jsonl(const std::filesystem::path& path, std::span<const Trajectory> trajectories);

struct JsonlReadResult {
  std::vector<Trajectory> trajectories;
  std::size_t total_lines = 0;
  std::vector<std::string> errors;  // one message per skipped line
};

JsonlReadResult read_jsonl(const std::filesystem::path& path);

/// Rough token estimate for budget checks (no tokenizer available locally).
inline int estimate_tokens(std::string_view text) { return int((text.size() + 3) / 4); }

}  // namespace vrag
