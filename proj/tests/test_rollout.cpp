#include <doctest.h>

#include "vrag/errors.hpp"
#include "vrag/grpo.hpp"
#include "vrag/prompts.hpp"
#include "vrag/rollout.hpp"

using namespace vrag;

namespace {

class ConstantJudge final : public ChatClient {
 public:
  std::string complete(const std::vector<ChatMessage>&, const DecodingParams&) override {
    return "<judge>True</judge>";
  }
  std::string identity() const override { return "constant"; }
};

class Unreachable final : public ChatClient {
 public:
  std::string complete(const std::vector<ChatMessage>&, const DecodingParams&) override {
    throw Error(ErrorCode::PolicyUnreachable, "connection refused");
  }
  std::string identity() const override { return "down"; }
};

class FlakyRetriever final : public Retriever {
 public:
  RetrievalResult search(const std::string&, int) override { throw Error(ErrorCode::Timeout, "slow"); }
  ImageDocument document(const std::string&) override { return {}; }
  std::string identity() const override { return "flaky"; }
  int calls = 0;
};

RolloutOptions options(int max_iterations = 6) {
  RolloutOptions o;
  o.config.max_iterations = max_iterations;
  return o;
}

}  // namespace

TEST_CASE("oracle scripted rollout is perfect under both weight profiles") {
  auto toy = ToyEnvironment::planted(11);
  ConstantJudge judge;
  for (const auto& task : toy.corpus->tasks) {
    auto policy = ScriptedPolicy::oracle(*toy.corpus, task);
    auto t = rollout(task, policy, toy.env, options());
    CHECK(t.finish_reason == FinishReason::Answered);
    CHECK(t.invalid_action_count == 0);
    CHECK(check_invariants(t).empty());
    for (auto w : {RewardWeights::post_sft(), RewardWeights::cold_start()}) {
      ScoreOptions so;
      so.weights = w;
      so.judge = &judge;
      auto b = score_trajectory(t, task, so);
      CHECK(b.r_ret == 1.0);
      CHECK(b.r_pat == 1.0);
      CHECK(*b.r_total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("conversation layout") {
  auto toy = ToyEnvironment::planted(11);
  const auto& task = toy.corpus->tasks[0];
  auto policy = ScriptedPolicy::oracle(*toy.corpus, task);
  auto t = rollout(task, policy, toy.env, options());
  REQUIRE(t.turns.size() == 5);
  CHECK(t.turns[0].role == Role::System);
  CHECK(t.turns[1].role == Role::User);
  CHECK(t.turns[2].action_source == "policy");
  CHECK(t.turns[3].images.size() == 1);
  CHECK(t.turns[3].text->starts_with(observation::kPage));
  CHECK(t.retrieved_doc_ids.size() == 1);
}

TEST_CASE("region before any image is invalid and the episode continues") {
  auto toy = ToyEnvironment::planted(11);
  const auto& task = toy.corpus->tasks[0];
  ScriptedPolicy p = ScriptedPolicy::from_actions(
      {RegionAction{{0, 0, 10, 10}, std::nullopt}, AnswerAction{"1"}});
  auto t = rollout(task, p, toy.env, options());
  CHECK(t.finish_reason == FinishReason::Answered);
  CHECK(t.invalid_action_count == 1);
  CHECK(t.turns[3].text->starts_with(prompts::kInvalidAction));
  // well-formed, so the pattern reward is unaffected
  CHECK(pattern_reward(t) == 1.0);
}

TEST_CASE("malformed response counts as invalid") {
  auto toy = ToyEnvironment::planted(11);
  ScriptedPolicy p({"I will just talk.", "<think>x</think><answer>1</answer>"});
  auto t = rollout(toy.corpus->tasks[0], p, toy.env, options());
  CHECK(t.invalid_action_count == 1);
  CHECK(t.step_count == 1);
  CHECK(t.finish_reason == FinishReason::Answered);
}

TEST_CASE("searching forever exhausts the budget") {
  auto toy = ToyEnvironment::planted(11);
  ScriptedPolicy p = ScriptedPolicy::from_actions({SearchAction{"annual report"}});
  auto t = rollout(toy.corpus->tasks[0], p, toy.env, options(3));
  CHECK(t.finish_reason == FinishReason::BudgetExhausted);
  CHECK(t.step_count == 3);
  CHECK(pattern_reward(t) == 0.0);
}

TEST_CASE("search, crop, answer records provenance") {
  auto toy = ToyEnvironment::planted(11);
  const auto& task = toy.corpus->tasks[0];
  ScriptedPolicy p = ScriptedPolicy::from_actions({SearchAction{toy.corpus->oracle_queries.at(task.id)},
                                                   RegionAction{{0, 0, 56, 56}, std::nullopt},
                                                   AnswerAction{task.golden_answer}});
  std::vector<nlohmann::json> prov;
  auto t = rollout(task, p, toy.env, options(), &prov);
  CHECK(t.finish_reason == FinishReason::Answered);
  CHECK(t.invalid_action_count == 0);
  REQUIRE(prov.size() == 1);
  CHECK(prov[0]["target_index"] == 1);
  CHECK(prov[0]["raw_box"][0] == 0);
  CHECK(t.turns[5].text->starts_with(observation::kCrop));
  auto crop = t.turns[5].images.at(0).view;
  CHECK(crop.density_x() > t.turns[3].images.at(0).view.density_x());
}

TEST_CASE("environment errors become observations, not invalid actions") {
  auto toy = ToyEnvironment::planted(11);
  auto flaky = std::make_shared<FlakyRetriever>();
  toy.env.retriever = flaky;
  ScriptedPolicy p = ScriptedPolicy::from_actions({SearchAction{"x"}, AnswerAction{"1"}});
  auto t = rollout(toy.corpus->tasks[0], p, toy.env, options());
  CHECK(t.invalid_action_count == 0);
  CHECK(t.turns[3].text->starts_with(observation::kEnvError));
}

TEST_CASE("unreachable policy ends the slot with FatalError") {
  auto toy = ToyEnvironment::planted(11);
  Unreachable down;
  auto group = rollout_group(toy.corpus->tasks[0], down, toy.env, options(), 3);
  REQUIRE(group.size() == 3);
  for (const auto& t : group) CHECK(t.finish_reason == FinishReason::FatalError);
  CHECK_THROWS_AS(rollout_group(toy.corpus->tasks[0], down, toy.env, options(), 0), Error);
}

TEST_CASE("prompt budget stops the loop") {
  auto toy = ToyEnvironment::planted(11);
  ScriptedPolicy p = ScriptedPolicy::from_actions({SearchAction{"x"}});
  auto o = options();
  o.config.max_prompt_tokens = 1;
  auto t = rollout(toy.corpus->tasks[0], p, toy.env, o);
  CHECK(t.finish_reason == FinishReason::BudgetExhausted);
  CHECK(t.step_count == 0);
}

TEST_CASE("group rollouts depend only on the seed") {
  auto toy = ToyEnvironment::planted(11);
  auto policy = std::make_shared<ToyPolicy>(toy_state_count(4), kToyActionCount);
  ToyPolicyClient client(policy, 4);
  const auto& task = toy.corpus->tasks[2];
  auto o = options(4);
  o.seed = 77;
  auto serial = rollout_group(task, client, toy.env, o, 8);
  o.workers = 4;
  auto parallel = rollout_group(task, client, toy.env, o, 8);
  bool varied = false;
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(trajectory_to_json(serial[i]) == trajectory_to_json(parallel[i]));
    varied |= trajectory_to_json(serial[i]) != trajectory_to_json(serial[0]);
  }
  CHECK(varied);
  o.seed = 78;
  auto other = rollout_group(task, client, toy.env, o, 8);
  bool differs = false;
  for (std::size_t i = 0; i < other.size(); ++i) differs |= trajectory_to_json(other[i]) != trajectory_to_json(serial[i]);
  CHECK(differs);
}
