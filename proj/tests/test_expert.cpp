#include <doctest.h>

#include "vrag/errors.hpp"
#include "vrag/expert.hpp"
#include "vrag/grpo.hpp"

using namespace vrag;

namespace {

class Counting final : public ChatClient {
 public:
  explicit Counting(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string complete(const std::vector<ChatMessage>& m, const DecodingParams&) override {
    last = m;
    return replies_[std::min<std::size_t>(std::size_t(calls++), replies_.size() - 1)];
  }
  std::string identity() const override { return "counting"; }
  int calls = 0;
  std::vector<ChatMessage> last;

 private:
  std::vector<std::string> replies_;
};

class Verdict final : public ChatClient {
 public:
  explicit Verdict(bool v) : v_(v) {}
  std::string complete(const std::vector<ChatMessage>&, const DecodingParams&) override {
    return v_ ? "<judge>True</judge>" : "<judge>False</judge>";
  }
  std::string identity() const override { return "verdict"; }

 private:
  bool v_;
};

/// One 800x600 page shown at native size.
struct PageFixture {
  std::shared_ptr<Corpus> corpus = std::make_shared<Corpus>();
  EnvironmentBundle env;
  Trajectory history;

  PageFixture() {
    corpus->corpus_id = "one";
    corpus->documents = {{{"page", 800, 600, {}}, "a chart"}};
    EncoderProfile p;
    p.patch_multiple = 1;
    env.retriever = std::make_shared<SimulatedRetriever>(corpus, 1);
    env.perception = std::make_shared<PerceptionEngine>(p);
    history.task_id = "t";
    append_turn(history, Turn::user("Query: q"));
    append_turn(history, Turn::assistant("<think>s</think><search>chart</search>"));
    append_turn(history, Turn::user("[page page]", {env.perception->observe_page(corpus->documents[0].image)}));
  }
};

SynthesisOptions planted_options(ChatClient& judge) {
  SynthesisOptions o;
  o.targets.buckets = {{{2, ActionMix::Any}, 2}, {{3, ActionMix::Any}, 2}};
  o.judge = &judge;
  o.seed = 3;
  return o;
}

}  // namespace

TEST_CASE("grounding expert replaces the guide's box") {
  PageFixture f;
  REQUIRE(f.history.turns[2].images[0].view.enc_width == 800);
  FixedGrounding expert({120, 80, 400, 300});
  Action a = reground_region(f.history, "zoom on the legend", RegionAction{{0, 0, 5, 5}, std::nullopt}, expert, f.env, {});
  auto* r = std::get_if<RegionAction>(&a);
  REQUIRE(r);
  CHECK(r->bbox == std::array<std::int64_t, 4>{120, 80, 400, 300});
}

TEST_CASE("grounding sees the thought and the target image") {
  PageFixture f;
  Counting expert({"<bbox>[1, 2, 30, 40]</bbox>"});
  reground_region(f.history, "find the legend", RegionAction{{0, 0, 5, 5}, std::nullopt}, expert, f.env, {});
  REQUIRE(expert.last.size() == 2);
  CHECK(expert.last[0].role == Role::System);
  CHECK(expert.last[1].text.find("find the legend") != std::string::npos);
  CHECK(expert.last[1].images.size() == 1);
}

TEST_CASE("unusable grounding boxes are degenerate") {
  PageFixture f;
  for (std::string reply : {"<bbox>[0, 0, 900, 700]</bbox>", "no idea", "<bbox>[10, 10, 10, 50]</bbox>"}) {
    Counting expert({reply});
    try {
      reground_region(f.history, "t", RegionAction{{0, 0, 5, 5}, std::nullopt}, expert, f.env, {});
      FAIL("expected GroundingDegenerate for " << reply);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::GroundingDegenerate);
    }
  }
}

TEST_CASE("non-region actions pass through untouched") {
  PageFixture f;
  Counting expert({"<bbox>[1, 1, 2, 2]</bbox>"});
  Action s = SearchAction{"x"};
  CHECK(reground_region(f.history, "t", s, expert, f.env, {}) == s);
  Action a = AnswerAction{"42"};
  CHECK(reground_region(f.history, "t", a, expert, f.env, {}) == a);
  CHECK(expert.calls == 0);
}

TEST_CASE("guide re-prompts once") {
  PageFixture f;
  Counting twice({"<think>a</think><search>x</search><answer>y</answer>"});
  try {
    guide_step(f.history, twice, f.env, {});
    FAIL("expected GuideUnparseable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GuideUnparseable);
  }
  CHECK(twice.calls == 2);

  Counting recovers({"garbage", "<think>a</think><search>x</search>"});
  auto step = guide_step(f.history, recovers, f.env, {});
  CHECK(step.attempts == 2);
  CHECK(step.thought == "a");
  CHECK(step.action == Action{SearchAction{"x"}});
}

TEST_CASE("a region with nothing to look at forces another plan") {
  PageFixture f;
  Trajectory empty;
  append_turn(empty, Turn::user("Query: q"));
  Counting guide({"<think>zoom</think><bbox>[0, 0, 5, 5]</bbox>", "<think>look first</think><search>q</search>"});
  auto step = guide_step(empty, guide, f.env, {});
  CHECK(kind_of(step.action) == ActionKind::Search);
  CHECK(step.attempts == 2);
}

TEST_CASE("balancing targets") {
  BalanceTargets t;
  t.buckets = {{{7, ActionMix::Any}, 1}};
  try {
    t.validate();
    FAIL("expected InvalidTarget");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidTarget);
  }
  t.buckets = {{{2, ActionMix::Search}, 1}, {{4, ActionMix::Perception}, 3}};
  t.total = 5;
  CHECK_THROWS_AS(t.validate(), Error);
  t.total = 4;
  t.validate();
  auto back = BalanceTargets::from_json(t.to_json());
  CHECK(back.buckets == t.buckets);
  CHECK(back.total == 4);
  CHECK_THROWS_AS(BalanceTargets::from_json({{"buckets", {{"x/any", 1}}}}), Error);
  CHECK_THROWS_AS(BalanceTargets::from_json({{"buckets", {{"3/sideways", 1}}}}), Error);
}

TEST_CASE("dataset meets its histogram exactly and every export is sound") {
  auto toy = ToyEnvironment::planted(21, 12, 48);
  SimulatedGuide guide(toy.corpus);
  FixedGrounding grounding;
  ExactMatchJudge judge;
  auto opts = planted_options(judge);
  auto result = synthesize_dataset(toy.corpus->tasks, {&guide, &grounding}, toy.env, opts);
  CHECK(result.complete());
  CHECK(result.trajectories.size() == 4);
  CHECK(result.achieved == std::map<std::pair<int, ActionMix>, int>{{{2, ActionMix::Any}, 2}, {{3, ActionMix::Any}, 2}});
  CHECK(result.attempts == result.discarded + result.rejected + result.overflow + 4);
  CHECK(result.manifest()["complete"] == true);

  for (std::size_t i = 0; i < result.trajectories.size(); ++i) {
    const auto& t = result.trajectories[i];
    const auto* task = toy.corpus->find_task(t.task_id);
    REQUIRE(task);
    // re-parse from the exported JSON, then score independently
    auto back = trajectory_from_json(trajectory_to_json(t));
    CHECK(check_invariants(back).empty());
    ScoreOptions so;
    so.judge = &judge;
    auto b = score_trajectory(back, *task, so);
    CHECK(b.r_pat == 1.0);
    CHECK(b.r_ans == 1.0);
    CHECK(result.records[i].step_count == t.step_count);
    for (const auto& turn : back.turns) {
      if (turn.role != Role::Assistant) continue;
      CHECK(turn.action_source == (kind_of(*turn.action) == ActionKind::Region ? "expert" : "guide"));
    }
    auto sft = to_sft_record(t, toy.env);
    CHECK(sft["messages"].size() == t.turns.size());
    CHECK(sft["messages"][0]["role"] == "system");
  }
}

TEST_CASE("perception buckets get region trajectories") {
  auto toy = ToyEnvironment::planted(21, 12, 48);
  SimulatedGuide guide(toy.corpus);
  FixedGrounding grounding;
  ExactMatchJudge judge;
  auto opts = planted_options(judge);
  opts.targets.buckets = {{{3, ActionMix::Perception}, 1}, {{2, ActionMix::Search}, 1}};
  auto result = synthesize_dataset(toy.corpus->tasks, {&guide, &grounding}, toy.env, opts);
  int regions = 0;
  for (const auto& r : result.records) regions += r.actions.count("region") ? r.actions.at("region") : 0;
  CHECK(regions >= 1);
}

TEST_CASE("synthesis is independent of the worker count") {
  auto toy = ToyEnvironment::planted(21, 12, 48);
  SimulatedGuide guide(toy.corpus);
  FixedGrounding grounding;
  ExactMatchJudge judge;
  auto opts = planted_options(judge);
  auto a = synthesize_dataset(toy.corpus->tasks, {&guide, &grounding}, toy.env, opts);
  opts.workers = 4;
  auto b = synthesize_dataset(toy.corpus->tasks, {&guide, &grounding}, toy.env, opts);
  CHECK(a.manifest() == b.manifest());
}

TEST_CASE("a judge that rejects everything exhausts the budget with a partial result") {
  auto toy = ToyEnvironment::planted(21, 12, 48);
  SimulatedGuide guide(toy.corpus);
  FixedGrounding grounding;
  Verdict no(false);
  auto opts = planted_options(no);
  opts.max_attempts = 15;
  try {
    synthesize_dataset(toy.corpus->tasks, {&guide, &grounding}, toy.env, opts);
    FAIL("expected SynthesisExhausted");
  } catch (const SynthesisExhausted& e) {
    CHECK(e.code() == ErrorCode::BudgetExhausted);
    CHECK(e.partial().attempts == 15);
    CHECK(e.partial().trajectories.empty());
    CHECK(e.partial().rejected + e.partial().discarded == 15);
    CHECK(e.partial().manifest()["complete"] == false);
  }
}
