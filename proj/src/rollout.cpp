#include "vrag/rollout.hpp"

#include <algorithm>
#include <exception>

#include "vrag/errors.hpp"
#include "vrag/hash.hpp"
#include "vrag/prompts.hpp"

namespace vrag {

ScriptedPolicy::ScriptedPolicy(std::vector<std::string> responses) : responses_(std::move(responses)) {
  if (responses_.empty()) throw Error(ErrorCode::Config, "scripted policy needs at least one response");
}

ScriptedPolicy ScriptedPolicy::from_actions(const std::vector<Action>& actions, std::string thought) {
  std::vector<std::string> out;
  out.reserve(actions.size());
  for (const auto& a : actions) out.push_back(render_response(thought, a));
  return ScriptedPolicy(std::move(out));
}

ScriptedPolicy ScriptedPolicy::oracle(const Corpus& corpus, const QueryTask& task) {
  auto it = corpus.oracle_queries.find(task.id);
  const std::string query = it != corpus.oracle_queries.end() ? it->second : task.question;
  return ScriptedPolicy({render_response("I need the page that lists this figure.", SearchAction{query}),
                         render_response("The retrieved page states the figure.", AnswerAction{task.golden_answer})});
}

std::string ScriptedPolicy::complete(const std::vector<ChatMessage>& messages, const DecodingParams&) {
  auto slot = std::size_t(std::count_if(messages.begin(), messages.end(),
                                        [](const ChatMessage& m) { return m.role == Role::Assistant; }));
  return responses_[std::min(slot, responses_.size() - 1)];
}

std::string EnvironmentBundle::effective_system_prompt() const {
  return system_prompt.empty() ? std::string(prompts::kAgentSystem) : system_prompt;
}

std::vector<ChatMessage> to_messages(const Trajectory& t, const EnvironmentBundle& env) {
  std::vector<ChatMessage> out;
  out.reserve(t.turns.size());
  for (const auto& turn : t.turns) {
    ChatMessage m{turn.role, turn.text.value_or(""), {}};
    for (const auto& img : turn.images) {
      ChatImage ci{img.content_hash, {}};
      if (env.perception) {
        if (auto f = env.perception->image_file(img)) ci.file = *f;
      }
      m.images.push_back(std::move(ci));
    }
    out.push_back(std::move(m));
  }
  return out;
}

Trajectory start_trajectory(const QueryTask& task, const EnvironmentBundle& env) {
  Trajectory t;
  t.task_id = task.id;
  append_turn(t, Turn::system(env.effective_system_prompt()));
  append_turn(t, Turn::user(prompts::agent_user(task.question)));
  return t;
}

namespace {

std::string caption_for(const EnvironmentBundle& env, const std::string& doc_id) {
  if (!env.captions || !env.corpus) return {};
  if (auto* d = env.corpus->find(doc_id)) return " " + d->surrogate;
  return {};
}

template <typename F>
auto with_env_retries(int attempts, F&& f) {
  for (int i = 1;; ++i) {
    try {
      return f();
    } catch (const Error& e) {
      if (!e.retriable() || i >= attempts) throw;
    }
  }
}

int estimate_prompt_tokens(const Trajectory& t) {
  int tokens = 0;
  for (const auto& turn : t.turns) {
    if (turn.text) tokens += estimate_tokens(*turn.text);
    for (const auto& img : turn.images) {
      tokens += int(img.view.enc_width * img.view.enc_height / (28 * 28));
    }
  }
  return tokens;
}

}  // namespace

DispatchResult dispatch_action(const Action& action, const Trajectory& t, EnvironmentBundle& env) {
  DispatchResult out;
  if (auto* s = std::get_if<SearchAction>(&action)) {
    try {
      auto result = with_env_retries(env.env_attempts, [&] { return env.retriever->search(s->query, env.top_k); });
      std::vector<ImageObservation> images;
      std::string text;
      for (const auto& hit : result.results) {
        auto doc = env.retriever->document(hit.doc_id);
        images.push_back(env.perception->observe_page(doc));
        if (!text.empty()) text += "\n";
        text += std::string(observation::kPage) + hit.doc_id + "]" + caption_for(env, hit.doc_id);
      }
      if (images.empty()) text = std::string(observation::kEnvError) + "search returned no results";
      out.observation = Turn::user(std::move(text), std::move(images));
    } catch (const Error& e) {
      if (!e.retriable()) throw;
      out.observation = Turn::user(std::string(observation::kEnvError) + e.what());
    }
    return out;
  }
  if (auto* r = std::get_if<RegionAction>(&action)) {
    try {
      auto observations = t.image_observations();
      DocumentLookup lookup = [&](const std::string& id) { return env.retriever->document(id); };
      auto outcome = apply_region_action(*r, observations, lookup, env.perception->profile());
      auto obs = env.perception->observe_region(outcome, lookup(outcome.source_doc_id));
      out.provenance = PerceptionEngine::provenance(outcome, obs);
      const auto& b = outcome.raw_box;
      std::string text = std::string(observation::kCrop) + outcome.source_doc_id + " " +
                         std::to_string(b.x_min) + "," + std::to_string(b.y_min) + "," +
                         std::to_string(b.x_max) + "," + std::to_string(b.y_max) + "]" +
                         caption_for(env, outcome.source_doc_id);
      out.observation = Turn::user(std::move(text), {std::move(obs)});
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::NoImageInContext:
        case ErrorCode::DegenerateRegion:
        case ErrorCode::OutOfBounds:
        case ErrorCode::OutOfRange:
          out.invalid = true;
          out.observation = Turn::user(std::string(prompts::kInvalidAction) + " (" + e.what() + ")");
          break;
        default:
          if (!e.retriable()) throw;
          out.observation = Turn::user(std::string(observation::kEnvError) + e.what());
      }
    }
    return out;
  }
  throw Error(ErrorCode::Config, "dispatch_action called with an Answer");
}

Trajectory rollout(const QueryTask& task, ChatClient& policy, EnvironmentBundle& env,
                   const RolloutOptions& options, std::vector<nlohmann::json>* provenance) {
  options.config.validate();
  Trajectory t = start_trajectory(task, env);
  for (int step = 0; step < options.config.max_iterations; ++step) {
    if (estimate_prompt_tokens(t) > options.config.max_prompt_tokens) break;

    DecodingParams params = options.decoding;
    params.max_tokens = options.config.max_response_tokens;
    params.seed = derive_seed(options.seed, std::uint64_t(step));
    std::string raw;
    try {
      raw = policy.complete(to_messages(t, env), params);
    } catch (const Error& e) {
      if (!e.retriable()) throw;
      finish(t, FinishReason::FatalError);
      return t;
    }

    Turn turn = Turn::assistant(std::move(raw));
    turn.action_source = "policy";
    const std::optional<Action> action = turn.action;
    append_turn(t, std::move(turn));

    if (!action) {
      ++t.invalid_action_count;
      append_turn(t, Turn::user(std::string(prompts::kInvalidAction)));
      continue;
    }
    if (kind_of(*action) == ActionKind::Answer) {
      finish(t, FinishReason::Answered);
      return t;
    }
    auto result = dispatch_action(*action, t, env);
    if (result.invalid) ++t.invalid_action_count;
    if (provenance && result.provenance) provenance->push_back(std::move(*result.provenance));
    append_turn(t, std::move(result.observation));
  }
  finish(t, FinishReason::BudgetExhausted);
  return t;
}

std::vector<Trajectory> rollout_group(const QueryTask& task, ChatClient& policy, EnvironmentBundle& env,
                                      const RolloutOptions& options, int group_size) {
  if (group_size < 1) throw Error(ErrorCode::Config, "group size must be >= 1");
  std::vector<Trajectory> out(static_cast<std::size_t>(group_size));
  std::exception_ptr failure;
  const int workers = std::max(1, options.workers);
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (int i = 0; i < group_size; ++i) {
    RolloutOptions slot = options;
    slot.seed = derive_seed(options.seed, std::uint64_t(i));
    try {
      out[std::size_t(i)] = rollout(task, policy, env, slot);
    } catch (...) {
#pragma omp critical(vrag_rollout_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace vrag
