#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "vrag/errors.hpp"
#include "vrag/trajectory.hpp"

using namespace vrag;

namespace {

ImageObservation page(const std::string& id) {
  return {{id, 28, 28, {0, 0, 100, 100, CoordSpace::Raw}}, "hash-" + id};
}

Trajectory answered(int invalid, int actions) {
  Trajectory t;
  t.task_id = "t";
  append_turn(t, Turn::user("Query: q"));
  for (int i = 0; i + 1 < actions; ++i) {
    append_turn(t, Turn::assistant("<think>s</think><search>q</search>"));
    append_turn(t, Turn::user("[page d]", {page("d" + std::to_string(i))}));
  }
  append_turn(t, Turn::assistant("<think>a</think><answer>x</answer>"));
  finish(t, FinishReason::Answered);
  t.invalid_action_count = invalid;
  return t;
}

}  // namespace

TEST_CASE("append_turn bookkeeping") {
  Trajectory t;
  append_turn(t, Turn::assistant("<think>a</think><search>q</search>"));
  CHECK(t.turns.size() == 1);
  CHECK(t.step_count == 1);

  append_turn(t, Turn::user("obs", {page("d1")}));
  append_turn(t, Turn::assistant("<think>a</think><search>q</search>"));
  append_turn(t, Turn::user("obs", {page("d1"), page("d2")}));
  CHECK(t.retrieved_doc_ids == std::vector<std::string>{"d1", "d2"});

  // a malformed response is still an attempted turn but not an action
  append_turn(t, Turn::assistant("no tags"));
  CHECK(t.step_count == 2);
  CHECK(t.assistant_turns() == 3);

  finish(t, FinishReason::BudgetExhausted);
  try {
    append_turn(t, Turn::user("late"));
    FAIL("expected AppendToFinished");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AppendToFinished);
  }
}

TEST_CASE("retrieved ids follow a first-occurrence set trace") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    Trajectory t;
    std::vector<std::string> trace;  // oracle: linear scan, keep unseen ids in order
    const int turns = 1 + int(rng() % 8);
    for (int k = 0; k < turns; ++k) {
      std::vector<ImageObservation> imgs;
      for (int j = int(rng() % 4); j > 0; --j) {
        auto id = "d" + std::to_string(rng() % 6);
        imgs.push_back(page(id));
        if (std::find(trace.begin(), trace.end(), id) == trace.end()) trace.push_back(id);
      }
      append_turn(t, Turn::assistant("<think>a</think><search>q</search>"));
      append_turn(t, Turn::user("obs", imgs));
    }
    CHECK(t.retrieved_doc_ids == trace);
    CHECK(check_invariants(t).empty());
  }
}

TEST_CASE("compute_metrics") {
  std::vector<Trajectory> both{answered(0, 2), answered(0, 2)};
  auto m = compute_metrics(both);
  CHECK(m.finish_rate == 1.0);
  CHECK(m.invalid_action_rate == 0.0);
  CHECK(m.mean_steps == 2.0);

  Trajectory budget;
  append_turn(budget, Turn::assistant("<think>a</think><search>q</search>"));
  finish(budget, FinishReason::BudgetExhausted);
  std::vector<Trajectory> mixed{answered(0, 2), budget};
  CHECK(compute_metrics(mixed).finish_rate == 0.5);

  std::vector<Trajectory> ten{answered(1, 10)};
  CHECK(compute_metrics(ten).invalid_action_rate == doctest::Approx(0.1));

  try {
    compute_metrics(std::vector<Trajectory>{});
    FAIL("expected EmptyBatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyBatch);
  }
}

TEST_CASE("invariant checker flags broken structure") {
  auto t = answered(0, 3);
  CHECK(check_invariants(t).empty());
  auto dup = t;
  dup.retrieved_doc_ids.push_back(dup.retrieved_doc_ids.front());
  CHECK_FALSE(check_invariants(dup).empty());
  auto steps = t;
  steps.step_count = 7;
  CHECK_FALSE(check_invariants(steps).empty());
  auto roles = t;
  roles.turns.insert(roles.turns.begin() + 1, Turn::assistant("<think>a</think><search>q</search>"));
  CHECK_FALSE(check_invariants(roles).empty());
}

TEST_CASE("JSON persistence round trip and corrupt lines") {
  auto t = answered(1, 3);
  t.turns[1].action_source = "policy";
  auto back = trajectory_from_json(trajectory_to_json(t));
  CHECK(trajectory_to_json(back) == trajectory_to_json(t));
  CHECK(back.retrieved_doc_ids == t.retrieved_doc_ids);
  CHECK(back.turns[1].action == t.turns[1].action);

  const auto path = std::filesystem::temp_directory_path() / "vrag_traj_test.jsonl";
  write_jsonl(path, std::vector<Trajectory>{t, t});
  {
    std::ofstream app(path, std::ios::app);
    app << "{not json\n" << R"({"task_id": 3})" << "\n";
  }
  auto r = read_jsonl(path);
  CHECK(r.total_lines == 4);
  CHECK(r.trajectories.size() == 2);
  CHECK(r.errors.size() == 2);
  std::filesystem::remove(path);
}

TEST_CASE("rollout config validation") {
  RolloutConfig c;
  CHECK(c.max_prompt_tokens == 8192);
  CHECK(c.max_response_tokens == 2048);
  c.max_iterations = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}
