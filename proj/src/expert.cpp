#include "vrag/expert.hpp"

#include <regex>

#include "vrag/hash.hpp"
#include "vrag/prompts.hpp"

namespace vrag {

namespace {

bool has_image(const Trajectory& t) {
  for (const auto& turn : t.turns) {
    if (!turn.images.empty()) return true;
  }
  return false;
}

std::optional<std::string> guide_problem(const ParsedResponse& parsed, const Trajectory& history) {
  if (!parsed.pattern_valid() || !parsed.action) {
    std::string msg = "grammar violations:";
    for (auto v : parsed.violations) msg += " " + std::string(to_string(v));
    return msg;
  }
  if (kind_of(*parsed.action) == ActionKind::Region && !has_image(history)) {
    return std::string("region requested before any image was retrieved");
  }
  return std::nullopt;
}

}  // namespace

GuideStep guide_step(const Trajectory& history, ChatClient& guide, const EnvironmentBundle& env,
                     const DecodingParams& decoding) {
  auto messages = to_messages(history, env);
  DecodingParams params = decoding;
  std::string last_problem;
  for (int attempt = 1; attempt <= 2; ++attempt) {
    const std::string raw = guide.complete(messages, params);
    const auto parsed = parse_response(raw);
    auto problem = guide_problem(parsed, history);
    if (!problem) return {parsed.thought.value_or(""), *parsed.action, attempt};
    last_problem = *problem;
    messages.push_back({Role::Assistant, raw, {}});
    messages.push_back({Role::User, std::string(prompts::kInvalidAction), {}});
    params.seed = derive_seed(decoding.seed, std::uint64_t(attempt));
  }
  throw Error(ErrorCode::GuideUnparseable, "guide response rejected twice: " + last_problem);
}

Action reground_region(const Trajectory& history, const std::string& thought, const Action& action,
                       ChatClient& grounding, EnvironmentBundle& env, const DecodingParams& decoding) {
  const auto* guide_region = std::get_if<RegionAction>(&action);
  if (!guide_region) return action;

  auto observations = history.image_observations();
  if (observations.empty()) throw Error(ErrorCode::GroundingDegenerate, "no image in context to ground on");
  const std::size_t index = guide_region->target_index.value_or(int(observations.size()));
  if (index < 1 || index > observations.size()) {
    throw Error(ErrorCode::GroundingDegenerate, "guide targets image " + std::to_string(index));
  }
  const auto& target = observations[index - 1];

  ChatImage image{target.content_hash, {}};
  if (env.perception) {
    if (auto f = env.perception->image_file(target)) image.file = *f;
  }
  std::vector<ChatMessage> messages{{Role::System, std::string(prompts::kGroundingSystem), {}},
                                    {Role::User, prompts::grounding_user(thought), {image}}};
  const std::string raw = grounding.complete(messages, decoding);

  static const std::regex tagged(R"(<(bbox|region)>([\s\S]*?)</\1>)", std::regex::icase);
  std::smatch m;
  const std::string payload = std::regex_search(raw, m, tagged) ? m[2].str() : raw;
  auto region = parse_region_payload(payload);
  if (!region) throw Error(ErrorCode::GroundingDegenerate, "grounding reply has no usable box: " + raw);
  region->target_index = guide_region->target_index;

  try {
    DocumentLookup lookup = [&](const std::string& id) { return env.retriever->document(id); };
    (void)apply_region_action(*region, observations, lookup, env.perception->profile());
  } catch (const Error& e) {
    if (e.retriable()) throw;
    throw Error(ErrorCode::GroundingDegenerate, std::string("grounding box rejected: ") + e.what());
  }
  return *region;
}

std::string_view to_string(ActionMix m) {
  switch (m) {
    case ActionMix::Search: return "search";
    case ActionMix::Perception: return "perception";
    case ActionMix::Any: return "any";
  }
  return "any";
}

ActionMix action_mix_from_string(std::string_view s) {
  if (s == "search") return ActionMix::Search;
  if (s == "perception") return ActionMix::Perception;
  if (s == "any") return ActionMix::Any;
  throw Error(ErrorCode::InvalidTarget, "unknown action mix '" + std::string(s) + "'");
}

ActionMix action_mix_of(const Trajectory& t) {
  for (const auto& turn : t.turns) {
    if (turn.role == Role::Assistant && turn.action && kind_of(*turn.action) == ActionKind::Region) {
      return ActionMix::Perception;
    }
  }
  return ActionMix::Search;
}

int BalanceTargets::sum() const {
  int s = 0;
  for (const auto& [k, v] : buckets) s += v;
  return s;
}

void BalanceTargets::validate() const {
  if (buckets.empty()) throw Error(ErrorCode::InvalidTarget, "no balancing buckets given");
  for (const auto& [key, count] : buckets) {
    if (key.first < kMinBucketSteps || key.first > kMaxBucketSteps) {
      throw Error(ErrorCode::InvalidTarget, "step bucket " + std::to_string(key.first) + " outside " +
                                                std::to_string(kMinBucketSteps) + "-" +
                                                std::to_string(kMaxBucketSteps));
    }
    if (count < 0) throw Error(ErrorCode::InvalidTarget, "negative bucket count");
  }
  if (total != 0 && sum() != total) {
    throw Error(ErrorCode::InvalidTarget, "bucket counts sum to " + std::to_string(sum()) + ", requested " +
                                              std::to_string(total));
  }
}

namespace {

std::string bucket_key(const std::pair<int, ActionMix>& k) {
  return std::to_string(k.first) + "/" + std::string(to_string(k.second));
}

nlohmann::json histogram_json(const std::map<std::pair<int, ActionMix>, int>& h) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : h) j[bucket_key(k)] = v;
  return j;
}

}  // namespace

nlohmann::json BalanceTargets::to_json() const { return {{"total", total}, {"buckets", histogram_json(buckets)}}; }

BalanceTargets BalanceTargets::from_json(const nlohmann::json& j) {
  BalanceTargets t;
  t.total = j.value("total", 0);
  for (const auto& [key, value] : j.at("buckets").items()) {
    auto slash = key.find('/');
    try {
      const int steps = std::stoi(key.substr(0, slash));
      const auto mix = slash == std::string::npos ? ActionMix::Any : action_mix_from_string(key.substr(slash + 1));
      t.buckets[{steps, mix}] = value.get<int>();
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::InvalidTarget, "bad bucket key '" + key + "'");
    }
  }
  return t;
}

bool DatasetResult::complete() const {
  for (const auto& [k, want] : targets.buckets) {
    auto it = achieved.find(k);
    if ((it == achieved.end() ? 0 : it->second) < want) return false;
  }
  return true;
}

nlohmann::json DatasetResult::manifest() const {
  nlohmann::json records_json = nlohmann::json::array();
  for (const auto& r : records) {
    records_json.push_back({{"task_id", r.task_id},
                            {"step_count", r.step_count},
                            {"mix", to_string(r.mix)},
                            {"actions", r.actions}});
  }
  return {{"complete", complete()},
          {"attempts", attempts},
          {"discarded", discarded},
          {"rejected", rejected},
          {"overflow", overflow},
          {"target", histogram_json(targets.buckets)},
          {"achieved", histogram_json(achieved)},
          {"records", records_json}};
}

SynthesisExhausted::SynthesisExhausted(DatasetResult partial)
    : Error(ErrorCode::BudgetExhausted, "synthesis budget exhausted after " + std::to_string(partial.attempts) +
                                            " attempts with " + std::to_string(partial.trajectories.size()) +
                                            " trajectories accepted"),
      partial_(std::move(partial)) {}

std::optional<Trajectory> synthesize_trajectory(const QueryTask& task, const ExpertClients& clients,
                                                EnvironmentBundle& env, const SynthesisOptions& options,
                                                std::uint64_t seed) {
  Trajectory t = start_trajectory(task, env);
  for (int step = 0; step < options.config.max_iterations; ++step) {
    DecodingParams params = options.decoding;
    params.max_tokens = options.config.max_response_tokens;
    params.seed = derive_seed(seed, std::uint64_t(step));
    GuideStep plan;
    Action action;
    try {
      plan = guide_step(t, *clients.guide, env, params);
      action = reground_region(t, plan.thought, plan.action, *clients.grounding, env, params);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::GuideUnparseable || e.code() == ErrorCode::GroundingDegenerate) {
        return std::nullopt;
      }
      throw;
    }
    const bool regrounded = kind_of(action) == ActionKind::Region;
    Turn turn = Turn::assistant(render_response(plan.thought, action));
    turn.action_source = regrounded ? "expert" : "guide";
    append_turn(t, std::move(turn));
    if (kind_of(action) == ActionKind::Answer) {
      finish(t, FinishReason::Answered);
      return t;
    }
    auto result = dispatch_action(action, t, env);
    if (result.invalid) return std::nullopt;
    append_turn(t, std::move(result.observation));
  }
  finish(t, FinishReason::BudgetExhausted);
  return t;
}

bool passes_quality_gate(const Trajectory& t, const QueryTask& task, const SynthesisOptions& options) {
  if (!options.judge) throw Error(ErrorCode::Config, "dataset synthesis needs a judge");
  if (t.finish_reason != FinishReason::Answered) return false;
  ScoreOptions score;
  score.weights = options.weights;
  score.judge = options.judge;
  score.judge_options = options.judge_options;
  const auto b = score_trajectory(t, task, score);
  return b.r_pat == 1.0 && b.r_ans.value_or(0.0) == 1.0;
}

DatasetResult synthesize_dataset(const std::vector<QueryTask>& tasks, const ExpertClients& clients,
                                 EnvironmentBundle& env, const SynthesisOptions& options) {
  options.targets.validate();
  if (tasks.empty()) throw Error(ErrorCode::Config, "no tasks to synthesize from");
  if (!clients.guide || !clients.grounding) throw Error(ErrorCode::Config, "guide and grounding clients required");
  if (!options.judge) throw Error(ErrorCode::Config, "dataset synthesis needs a judge");
  options.config.validate();

  DatasetResult result;
  result.targets = options.targets;
  const int width = std::max(1, options.workers);

  struct Outcome {
    std::optional<Trajectory> trajectory;
    bool good = false;
    std::exception_ptr failure;
  };

  int next = 0;
  while (!result.complete() && next < options.max_attempts) {
    const int round = std::min(width, options.max_attempts - next);
    std::vector<Outcome> outcomes(static_cast<std::size_t>(round));
#pragma omp parallel for schedule(dynamic) num_threads(width)
    for (int i = 0; i < round; ++i) {
      auto& out = outcomes[std::size_t(i)];
      const int attempt = next + i;
      const auto& task = tasks[std::size_t(attempt) % tasks.size()];
      try {
        out.trajectory = synthesize_trajectory(task, clients, env, options,
                                               derive_seed(options.seed, std::uint64_t(attempt)));
        out.good = out.trajectory && passes_quality_gate(*out.trajectory, task, options);
      } catch (...) {
        out.failure = std::current_exception();
      }
    }
    // Serial acceptance in attempt order keeps the dataset independent of width.
    for (auto& out : outcomes) {
      if (result.complete()) break;
      ++result.attempts;
      ++next;
      if (out.failure) std::rethrow_exception(out.failure);
      if (!out.trajectory) {
        ++result.discarded;
        continue;
      }
      if (!out.good) {
        ++result.rejected;
        continue;
      }
      Trajectory& t = *out.trajectory;
      const std::pair<int, ActionMix> exact{t.step_count, action_mix_of(t)};
      const std::pair<int, ActionMix> any{t.step_count, ActionMix::Any};
      auto open = [&](const std::pair<int, ActionMix>& k) {
        auto want = result.targets.buckets.find(k);
        return want != result.targets.buckets.end() && result.achieved[k] < want->second;
      };
      std::optional<std::pair<int, ActionMix>> bucket;
      if (open(exact)) {
        bucket = exact;
      } else if (open(any)) {
        bucket = any;
      }
      if (!bucket) {
        ++result.overflow;
        continue;
      }
      ++result.achieved[*bucket];
      DatasetRecord rec{t.task_id, t.step_count, exact.second, {}};
      for (const auto& turn : t.turns) {
        if (turn.role == Role::Assistant && turn.action) {
          ++rec.actions[std::string(action_to_json(*turn.action).at("type").get<std::string>())];
        }
      }
      result.records.push_back(std::move(rec));
      result.trajectories.push_back(std::move(t));
    }
  }
  // Drop zero entries created by lookups so the histogram only lists real buckets.
  std::erase_if(result.achieved, [](const auto& kv) { return kv.second == 0; });
  if (!result.complete()) throw SynthesisExhausted(std::move(result));
  return result;
}

SimulatedGuide::SimulatedGuide(std::shared_ptr<const Corpus> corpus) : corpus_(std::move(corpus)) {}

std::string SimulatedGuide::complete(const std::vector<ChatMessage>& messages, const DecodingParams&) {
  std::string question;
  int step = 0;
  for (const auto& m : messages) {
    if (m.role == Role::User && question.empty() && m.text.rfind("Query: ", 0) == 0) question = m.text.substr(7);
    if (m.role == Role::Assistant) ++step;
  }
  const QueryTask* task = nullptr;
  for (const auto& t : corpus_->tasks) {
    if (t.question == question) task = &t;
  }
  if (!task) return render_response("I do not know this question.", AnswerAction{"unknown"});
  auto q = corpus_->oracle_queries.find(task->id);
  const std::string query = q == corpus_->oracle_queries.end() ? task->question : q->second;

  const std::uint64_t h = fnv1a64(task->id);
  const int extra = int(h % 4);
  if (step == 0) return render_response("Search for the page first.", SearchAction{query});
  if (step <= extra) {
    if ((h >> (8 + step)) & 1) {
      return render_response("Zoom into the header of the page.", RegionAction{{0, 0, 5, 5}, std::nullopt});
    }
    return render_response("Confirm with another search.", SearchAction{query});
  }
  return render_response("The page states the figure.", AnswerAction{task->golden_answer});
}

std::string FixedGrounding::complete(const std::vector<ChatMessage>&, const DecodingParams&) {
  return render_action(RegionAction{box_, std::nullopt});
}

nlohmann::json to_sft_record(const Trajectory& t, const EnvironmentBundle& env) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& turn : t.turns) {
    nlohmann::json content = nlohmann::json::array();
    for (const auto& img : turn.images) {
      std::string ref = img.content_hash;
      if (env.perception) {
        if (auto f = env.perception->image_file(img)) ref = f->string();
      }
      content.push_back({{"type", "image"}, {"image", ref}});
    }
    content.push_back({{"type", "text"}, {"text", turn.text.value_or("")}});
    messages.push_back({{"role", to_string(turn.role)}, {"content", content}});
  }
  return {{"task_id", t.task_id}, {"messages", messages}};
}

}  // namespace vrag
