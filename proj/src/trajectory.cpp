#include "vrag/trajectory.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "vrag/errors.hpp"

namespace vrag {

void QueryTask::validate() const {
  if (question.empty()) throw Error(ErrorCode::Config, "task " + id + ": empty question");
  if (golden_doc_ids.empty() && !answer_only) {
    throw Error(ErrorCode::Config, "task " + id + ": no golden documents and not answer-only");
  }
}

std::string_view to_string(Role r) {
  switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

Role role_from_string(std::string_view s) {
  if (s == "system") return Role::System;
  if (s == "user") return Role::User;
  if (s == "assistant") return Role::Assistant;
  throw Error(ErrorCode::Parse, "unknown role '" + std::string(s) + "'");
}

std::string_view to_string(FinishReason r) {
  switch (r) {
    case FinishReason::Answered: return "answered";
    case FinishReason::BudgetExhausted: return "budget_exhausted";
    case FinishReason::FatalError: return "fatal_error";
  }
  return "fatal_error";
}

FinishReason finish_reason_from_string(std::string_view s) {
  if (s == "answered") return FinishReason::Answered;
  if (s == "budget_exhausted") return FinishReason::BudgetExhausted;
  if (s == "fatal_error") return FinishReason::FatalError;
  throw Error(ErrorCode::Parse, "unknown finish_reason '" + std::string(s) + "'");
}

Turn Turn::system(std::string text) {
  Turn t;
  t.role = Role::System;
  t.text = std::move(text);
  return t;
}

Turn Turn::user(std::string text, std::vector<ImageObservation> images) {
  Turn t;
  t.role = Role::User;
  t.text = std::move(text);
  t.images = std::move(images);
  return t;
}

Turn Turn::assistant(std::string raw_text) {
  Turn t;
  t.role = Role::Assistant;
  auto parsed = parse_response(raw_text);
  t.thought = std::move(parsed.thought);
  t.action = std::move(parsed.action);
  t.text = std::move(raw_text);
  return t;
}

std::vector<ImageObservation> Trajectory::image_observations() const {
  std::vector<ImageObservation> out;
  for (const auto& turn : turns) out.insert(out.end(), turn.images.begin(), turn.images.end());
  return out;
}

int Trajectory::assistant_turns() const {
  return int(std::count_if(turns.begin(), turns.end(),
                           [](const Turn& t) { return t.role == Role::Assistant; }));
}

const Turn* Trajectory::last_assistant() const {
  for (auto it = turns.rbegin(); it != turns.rend(); ++it) {
    if (it->role == Role::Assistant) return &*it;
  }
  return nullptr;
}

std::optional<std::string> Trajectory::final_answer() const {
  const Turn* last = last_assistant();
  if (!last || !last->action) return std::nullopt;
  if (auto* a = std::get_if<AnswerAction>(&*last->action)) return a->text;
  return std::nullopt;
}

void RolloutConfig::validate() const {
  if (max_iterations < 1) throw Error(ErrorCode::Config, "max_iterations must be >= 1");
  if (max_prompt_tokens < 1 || max_response_tokens < 1) {
    throw Error(ErrorCode::Config, "token budgets must be positive");
  }
}

void append_turn(Trajectory& trajectory, Turn turn) {
  if (trajectory.finished) {
    throw Error(ErrorCode::AppendToFinished, "trajectory " + trajectory.task_id + " is finished");
  }
  if (turn.action) ++trajectory.step_count;
  for (const auto& img : turn.images) {
    const auto& id = img.view.doc_id;
    auto& ids = trajectory.retrieved_doc_ids;
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  }
  trajectory.turns.push_back(std::move(turn));
}

void finish(Trajectory& trajectory, FinishReason reason) {
  trajectory.finished = true;
  trajectory.finish_reason = reason;
}

Metrics compute_metrics(std::span<const Trajectory> trajectories) {
  if (trajectories.empty()) throw Error(ErrorCode::EmptyBatch, "no trajectories");
  std::size_t answered = 0, actions = 0, invalid = 0, steps = 0;
  for (const auto& t : trajectories) {
    if (t.finish_reason == FinishReason::Answered) ++answered;
    actions += std::size_t(t.assistant_turns());
    invalid += std::size_t(t.invalid_action_count);
    steps += std::size_t(t.step_count);
  }
  const double n = double(trajectories.size());
  return {double(answered) / n, actions ? double(invalid) / double(actions) : 0.0, double(steps) / n};
}

std::string check_invariants(const Trajectory& t) {
  std::set<std::string> seen;
  for (const auto& id : t.retrieved_doc_ids) {
    if (!seen.insert(id).second) return "duplicate retrieved id " + id;
  }
  // Subsequence of the concatenated per-turn image ids.
  std::size_t k = 0;
  for (const auto& turn : t.turns) {
    for (const auto& img : turn.images) {
      if (k < t.retrieved_doc_ids.size() && img.view.doc_id == t.retrieved_doc_ids[k]) ++k;
    }
  }
  if (k != t.retrieved_doc_ids.size()) return "retrieved ids are not a subsequence of observations";

  int steps = 0;
  for (std::size_t i = 0; i < t.turns.size(); ++i) {
    const auto& turn = t.turns[i];
    if (turn.action) {
      if (turn.role != Role::Assistant) return "action on a non-assistant turn";
      ++steps;
    }
    if (!turn.images.empty() && turn.role == Role::Assistant) return "image on an assistant turn";
    if (i > 0 && turn.role == Role::Assistant && t.turns[i - 1].role == Role::Assistant) {
      return "consecutive assistant turns";
    }
  }
  if (steps != t.step_count) return "step_count mismatch";

  const bool answered = t.finished && t.finish_reason == FinishReason::Answered;
  const Turn* last = t.last_assistant();
  const bool ends_with_answer = last && last->action && kind_of(*last->action) == ActionKind::Answer &&
                                &t.turns.back() == last;
  if (answered != ends_with_answer && t.finished) return "Answered does not match final Answer action";
  return {};
}

nlohmann::json trajectory_to_json(const Trajectory& t) {
  nlohmann::json turns = nlohmann::json::array();
  for (const auto& turn : t.turns) {
    nlohmann::json j = {{"role", to_string(turn.role)}};
    if (turn.text) j["text"] = *turn.text;
    if (!turn.images.empty()) {
      auto imgs = nlohmann::json::array();
      for (const auto& img : turn.images) {
        auto v = view_to_json(img.view);
        v["hash"] = img.content_hash;
        imgs.push_back(std::move(v));
      }
      j["images"] = std::move(imgs);
    }
    if (turn.thought) j["thought"] = *turn.thought;
    if (turn.action) j["action"] = action_to_json(*turn.action);
    if (!turn.action_source.empty()) j["action_source"] = turn.action_source;
    turns.push_back(std::move(j));
  }
  nlohmann::json out = {{"task_id", t.task_id},
                        {"turns", std::move(turns)},
                        {"finished", t.finished},
                        {"retrieved_doc_ids", t.retrieved_doc_ids},
                        {"invalid_action_count", t.invalid_action_count},
                        {"step_count", t.step_count}};
  out["finish_reason"] = t.finish_reason ? nlohmann::json(to_string(*t.finish_reason)) : nlohmann::json();
  return out;
}

Trajectory trajectory_from_json(const nlohmann::json& j) {
  Trajectory t;
  t.task_id = j.at("task_id").get<std::string>();
  for (const auto& jt : j.at("turns")) {
    Turn turn;
    turn.role = role_from_string(jt.at("role").get<std::string>());
    if (jt.contains("text")) turn.text = jt["text"].get<std::string>();
    if (jt.contains("images")) {
      for (const auto& ji : jt["images"]) {
        turn.images.push_back({view_from_json(ji), ji.at("hash").get<std::string>()});
      }
    }
    if (jt.contains("thought")) turn.thought = jt["thought"].get<std::string>();
    if (jt.contains("action")) turn.action = action_from_json(jt["action"]);
    if (jt.contains("action_source")) turn.action_source = jt["action_source"].get<std::string>();
    t.turns.push_back(std::move(turn));
  }
  t.finished = j.at("finished").get<bool>();
  if (!j.at("finish_reason").is_null()) {
    t.finish_reason = finish_reason_from_string(j["finish_reason"].get<std::string>());
  }
  t.retrieved_doc_ids = j.at("retrieved_doc_ids").get<std::vector<std::string>>();
  t.invalid_action_count = j.at("invalid_action_count").get<int>();
  t.step_count = j.at("step_count").get<int>();
  return t;
}

void write_jsonl(std::ostream& out, std::span<const Trajectory> trajectories) {
  for (const auto& t : trajectories) out << trajectory_to_json(t).dump() << '\n';
}

void write_jsonl(const std::filesystem::path& path, std::span<const Trajectory> trajectories) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  write_jsonl(out, trajectories);
}

JsonlReadResult read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  JsonlReadResult result;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++result.total_lines;
    try {
      result.trajectories.push_back(trajectory_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      result.errors.push_back("line " + std::to_string(result.total_lines) + ": " + e.what());
    }
  }
  return result;
}

}  // namespace vrag
