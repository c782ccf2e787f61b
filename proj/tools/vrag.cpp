// vrag: command-line front end for rollouts, scoring, toy GRPO training,
// dataset synthesis and plotting.

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>

#include <CLI11.hpp>

#include "vrag/config.hpp"
#include "vrag/errors.hpp"
#include "vrag/expert.hpp"
#include "vrag/grpo.hpp"
#include "vrag/hash.hpp"
#include "vrag/plot.hpp"
#include "vrag/retrieval.hpp"
#include "vrag/reward.hpp"
#include "vrag/rollout.hpp"
#include "vrag/trajectory.hpp"

namespace fs = std::filesystem;
using namespace vrag;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitEndpoint = 3;
constexpr int kExitQuality = 4;

/// Nonzero exit that is not an error: the run completed but failed a gate.
struct QualityFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void log(const std::string& msg) { std::cerr << "[vrag] " << msg << "\n"; }

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::Config:
    case ErrorCode::InvalidWeights:
    case ErrorCode::InvalidTarget:
    case ErrorCode::GroupTooSmall:
      return kExitConfig;
    case ErrorCode::Timeout:
    case ErrorCode::MalformedResponse:
    case ErrorCode::JudgeUnreachable:
    case ErrorCode::PolicyUnreachable:
      return kExitEndpoint;
    case ErrorCode::BudgetExhausted:
      return kExitQuality;
    default:
      return 1;
  }
}

http::Options http_options(const RunConfig& c) {
  http::Options o;
  o.timeout = std::chrono::milliseconds(std::int64_t(c.http_timeout_s * 1000));
  o.api_key = c.api_key;
  return o;
}

std::unique_ptr<ChatClient> remote_client(const EndpointSpec& e, const RunConfig& c, ErrorCode unreachable) {
  RemoteChatOptions o;
  o.model = e.model;
  o.http = http_options(c);
  o.unreachable = unreachable;
  return std::make_unique<RemoteChatClient>(e.url, o);
}

std::unique_ptr<ChatClient> make_judge(const RunConfig& c) {
  const auto kind = c.effective_judge();
  if (kind == "none") return nullptr;
  if (kind == "remote") return remote_client(c.judge_endpoint, c, ErrorCode::JudgeUnreachable);
  return std::make_unique<ExactMatchJudge>();
}

std::shared_ptr<Corpus> require_corpus(const RunConfig& c) {
  if (c.corpus.empty()) throw Error(ErrorCode::Config, "config field 'corpus': required for this command");
  if (!fs::exists(c.corpus)) throw Error(ErrorCode::Config, "config field 'corpus': no such file " + c.corpus);
  return std::make_shared<Corpus>(load_corpus(c.corpus));
}

EnvironmentBundle make_env(const RunConfig& c, std::shared_ptr<Corpus> corpus, const fs::path& out) {
  EnvironmentBundle env;
  if (!c.search_endpoint.url.empty()) {
    RemoteSearchOptions o;
    o.http = http_options(c);
    o.image_cache_dir = out / "image_cache";
    env.retriever = std::make_shared<RemoteRetriever>(c.search_endpoint.url, o);
    env.captions = false;
  } else {
    env.retriever = std::make_shared<SimulatedRetriever>(corpus, c.seed);
    env.corpus = corpus;
  }
  env.perception = std::make_shared<PerceptionEngine>(c.encoder, out / "crops");
  env.top_k = c.top_k;
  return env;
}

TaskLookup task_lookup(const Corpus& corpus) {
  return [&corpus](const std::string& id) { return corpus.find_task(id); };
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

struct Summary {
  Metrics metrics;
  double r_ret = 0, r_pat = 0;
  std::optional<double> r_ans, r_total;
};

Summary summarise(const std::vector<Trajectory>& ts, const std::vector<RewardBreakdown>& rewards) {
  Summary s;
  s.metrics = compute_metrics(ts);
  double ans = 0, total = 0;
  bool have_ans = !rewards.empty();
  for (const auto& r : rewards) {
    s.r_ret += r.r_ret;
    s.r_pat += r.r_pat;
    if (r.r_ans && r.r_total) {
      ans += *r.r_ans;
      total += *r.r_total;
    } else {
      have_ans = false;
    }
  }
  const double n = double(std::max<std::size_t>(1, rewards.size()));
  s.r_ret /= n;
  s.r_pat /= n;
  if (have_ans) {
    s.r_ans = ans / n;
    s.r_total = total / n;
  }
  return s;
}

nlohmann::json summary_json(const Summary& s) {
  nlohmann::json j{{"finish_rate", s.metrics.finish_rate},
                   {"invalid_action_rate", s.metrics.invalid_action_rate},
                   {"mean_steps", s.metrics.mean_steps},
                   {"r_ret", s.r_ret},
                   {"r_pat", s.r_pat}};
  if (s.r_ans) j["r_ans"] = *s.r_ans;
  if (s.r_total) j["r_total"] = *s.r_total;
  return j;
}

void print_summary(const Summary& s) {
  auto cell = [](std::optional<double> v) { return v ? std::to_string(*v) : std::string("absent"); };
  std::cout << "metric               value\n"
            << "finish_rate          " << s.metrics.finish_rate << "\n"
            << "invalid_action_rate  " << s.metrics.invalid_action_rate << "\n"
            << "mean_steps           " << s.metrics.mean_steps << "\n"
            << "r_ret                " << s.r_ret << "\n"
            << "r_ans                " << cell(s.r_ans) << "\n"
            << "r_pat                " << s.r_pat << "\n"
            << "r_total              " << cell(s.r_total) << "\n";
}

void write_rewards(const fs::path& path, const std::vector<Trajectory>& ts,
                   const std::vector<RewardBreakdown>& rewards) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    auto j = breakdown_to_json(rewards[i]);
    j["task_id"] = ts[i].task_id;
    out << j.dump() << "\n";
  }
}

ScoreOptions score_options(const RunConfig& c, ChatClient* judge) {
  ScoreOptions o;
  o.weights = c.effective_weights();
  o.judge = judge;
  return o;
}

// ---- commands ---------------------------------------------------------------

struct Context {
  RunConfig config;
  std::vector<std::string> args;
  fs::path out;
};

void begin(const std::string& command, Context& ctx, std::map<std::string, std::string> endpoints) {
  RunManifest m;
  m.command = command;
  m.args = ctx.args;
  m.config = ctx.config;
  m.endpoints = std::move(endpoints);
  if (!ctx.config.corpus.empty() && fs::exists(ctx.config.corpus)) {
    m.inputs[ctx.config.corpus] = file_sha256(ctx.config.corpus);
  }
  for (const auto& a : ctx.args) {
    if (fs::exists(a) && fs::is_regular_file(a)) m.inputs[a] = file_sha256(a);
  }
  write_manifest(ctx.out, m);
  log(command + ": manifest written to " + (ctx.out / kManifestFile).string() + " (config " +
      ctx.config.hash().substr(0, 12) + ")");
}

int cmd_gen_corpus(Context& ctx) {
  begin("gen-corpus", ctx, {});
  auto corpus = generate_synthetic_corpus(ctx.config.synthetic);
  if (ctx.config.render_pages) materialize_images(corpus, ctx.out / "pages", ctx.config.synthetic.seed);
  save_corpus(corpus, ctx.out / "corpus.json");
  log("wrote " + std::to_string(corpus.documents.size()) + " documents and " + std::to_string(corpus.tasks.size()) +
      " tasks");
  return kExitOk;
}

int cmd_rollout(Context& ctx) {
  const auto& c = ctx.config;
  auto corpus = require_corpus(c);
  auto env = make_env(c, corpus, ctx.out);
  auto judge = make_judge(c);
  const auto policy_kind = c.effective_policy();

  std::unique_ptr<ChatClient> shared_policy;
  int toy_steps = c.rollout.max_iterations;
  if (policy_kind == "remote") {
    shared_policy = remote_client(c.policy_endpoint, c, ErrorCode::PolicyUnreachable);
  } else if (policy_kind == "toy") {
    auto ckpt = load_checkpoint(c.checkpoint);
    toy_steps = ckpt.policy.states() / 4;
    shared_policy = std::make_unique<ToyPolicyClient>(std::make_shared<const ToyPolicy>(ckpt.policy), toy_steps);
  }
  std::map<std::string, std::string> endpoints{{"policy", shared_policy ? shared_policy->identity() : "scripted"},
                                               {"search", env.retriever->identity()},
                                               {"judge", judge ? judge->identity() : "none"}};
  begin("rollout", ctx, endpoints);

  RolloutOptions ro;
  ro.config = c.rollout;
  ro.decoding.temperature = c.temperature;
  ro.workers = c.workers;
  std::vector<Trajectory> all;
  for (std::size_t i = 0; i < corpus->tasks.size(); ++i) {
    const auto& task = corpus->tasks[i];
    ro.seed = derive_seed(c.seed, i);
    std::vector<Trajectory> group;
    if (shared_policy) {
      group = rollout_group(task, *shared_policy, env, ro, c.grpo.group_size);
    } else {
      auto oracle = ScriptedPolicy::oracle(*corpus, task);
      group = rollout_group(task, oracle, env, ro, c.grpo.group_size);
    }
    for (auto& t : group) all.push_back(std::move(t));
    log("task " + task.id + " done");
  }
  write_jsonl(ctx.out / "trajectories.jsonl", all);

  auto rewards = score_batch(all, task_lookup(*corpus), score_options(c, judge.get()));
  write_rewards(ctx.out / "rewards.jsonl", all, rewards);
  auto s = summarise(all, rewards);
  write_json(ctx.out / "metrics.json", summary_json(s));
  write_bar_svg(ctx.out / "metrics.svg", "rollout metrics", {"finish", "invalid", "r_ret", "r_pat", "r_total"},
                {s.metrics.finish_rate, s.metrics.invalid_action_rate, s.r_ret, s.r_pat, s.r_total.value_or(NAN)});
  print_summary(s);

  const auto fatal = std::count_if(all.begin(), all.end(),
                                   [](const Trajectory& t) { return t.finish_reason == FinishReason::FatalError; });
  if (fatal > 0) {
    log(std::to_string(fatal) + " rollouts lost their policy endpoint");
    return kExitEndpoint;
  }
  return kExitOk;
}

int cmd_score(Context& ctx) {
  const auto& c = ctx.config;
  if (ctx.args.empty()) throw Error(ErrorCode::Config, "score: at least one trajectory file is required");
  auto corpus = require_corpus(c);
  auto judge = make_judge(c);
  begin("score", ctx, {{"judge", judge ? judge->identity() : "none"}});

  std::vector<Trajectory> all;
  std::size_t lines = 0, bad = 0;
  for (const auto& file : ctx.args) {
    auto r = read_jsonl(file);
    lines += r.total_lines;
    bad += r.errors.size();
    for (const auto& e : r.errors) log("warning: " + file + ": " + e);
    for (auto& t : r.trajectories) all.push_back(std::move(t));
  }
  std::vector<Trajectory> known;
  for (auto& t : all) {
    if (corpus->find_task(t.task_id)) {
      known.push_back(std::move(t));
    } else {
      log("warning: unknown task id '" + t.task_id + "', skipped");
      ++bad;
    }
  }
  auto rewards = known.empty() ? std::vector<RewardBreakdown>{}
                               : score_batch(known, task_lookup(*corpus), score_options(c, judge.get()));
  write_rewards(ctx.out / "rewards.jsonl", known, rewards);
  if (!known.empty()) {
    auto s = summarise(known, rewards);
    write_json(ctx.out / "summary.json", summary_json(s));
    print_summary(s);
  }
  if (lines == 0 || double(bad) > 0.1 * double(lines)) {
    throw QualityFailure(std::to_string(bad) + " of " + std::to_string(lines) + " records skipped (limit 10%)");
  }
  return kExitOk;
}

int cmd_train_toy(Context& ctx) {
  const auto& c = ctx.config;
  begin("train-toy", ctx, {{"policy", "toy"}, {"judge", "exact-match"}});
  auto env = ToyEnvironment::planted(c.synthetic.seed, c.toy_tasks, c.toy_documents);
  env.max_steps = c.toy_max_steps;
  env.weights = c.effective_weights();

  double optimum = 0.0;
  for (const auto& t : env.corpus->tasks) optimum += enumerate_optimum(env, t).reward;
  optimum /= double(env.corpus->tasks.size());

  ToyPolicy policy(toy_state_count(env.max_steps), kToyActionCount);
  TrainOptions to;
  to.steps = c.updates;
  to.seed = c.seed;
  to.eval_every = c.eval_every;
  to.workers = c.workers;
  auto result = train_toy(env, policy, c.grpo, to);

  write_curve_csv(ctx.out / "curve.csv", result.curve);
  Series mean{"group mean reward", {}, {}}, greedy{"greedy reward", {}, {}};
  for (const auto& p : result.curve) {
    mean.x.push_back(p.update);
    mean.y.push_back(p.mean_reward);
    greedy.x.push_back(p.update);
    greedy.y.push_back(p.greedy_reward);
  }
  write_line_svg(ctx.out / "curve.svg", "toy GRPO training", "update", {mean, greedy});
  save_checkpoint(ctx.out / "checkpoint.bin", {policy, c.grpo, c.seed});
  write_json(ctx.out / "summary.json", {{"optimum", optimum},
                                        {"final_greedy_reward", result.final_greedy_reward},
                                        {"updates", result.curve.size()},
                                        {"diverged", result.diverged}});
  std::cout << "optimum " << optimum << "\nfinal greedy reward " << result.final_greedy_reward << "\n";
  if (result.diverged) throw QualityFailure("training diverged (non-finite loss or gradient)");
  return kExitOk;
}

int cmd_synthesize(Context& ctx) {
  const auto& c = ctx.config;
  auto corpus = require_corpus(c);
  auto env = make_env(c, corpus, ctx.out);
  auto judge = make_judge(c);
  if (!judge) throw Error(ErrorCode::Config, "config field 'judge': synthesis needs a judge");
  std::unique_ptr<ChatClient> guide = c.guide_endpoint.url.empty()
                                          ? std::unique_ptr<ChatClient>(std::make_unique<SimulatedGuide>(corpus))
                                          : remote_client(c.guide_endpoint, c, ErrorCode::PolicyUnreachable);
  std::unique_ptr<ChatClient> grounding =
      c.grounding_endpoint.url.empty() ? std::unique_ptr<ChatClient>(std::make_unique<FixedGrounding>())
                                       : remote_client(c.grounding_endpoint, c, ErrorCode::PolicyUnreachable);
  begin("synthesize", ctx,
        {{"guide", guide->identity()},
         {"grounding", grounding->identity()},
         {"judge", judge->identity()},
         {"search", env.retriever->identity()}});

  SynthesisOptions so;
  so.targets = c.targets;
  so.max_attempts = c.max_attempts;
  so.config = c.rollout;
  so.decoding.temperature = c.temperature;
  so.weights = c.effective_weights();
  so.judge = judge.get();
  so.seed = c.seed;
  so.workers = c.workers;

  auto emit = [&](const DatasetResult& r) {
    write_jsonl(ctx.out / "dataset.jsonl", r.trajectories);
    write_json(ctx.out / "dataset_manifest.json", r.manifest());
    log("accepted " + std::to_string(r.trajectories.size()) + " trajectories in " + std::to_string(r.attempts) +
        " attempts");
  };
  try {
    emit(synthesize_dataset(corpus->tasks, {guide.get(), grounding.get()}, env, so));
  } catch (const SynthesisExhausted& e) {
    emit(e.partial());
    throw;
  }
  return kExitOk;
}

int cmd_convert_sft(Context& ctx) {
  if (ctx.args.empty()) throw Error(ErrorCode::Config, "convert-sft: at least one trajectory file is required");
  begin("convert-sft", ctx, {});
  std::ofstream out(ctx.out / "sft.jsonl");
  if (!out) throw Error(ErrorCode::Io, "cannot write sft.jsonl");
  EnvironmentBundle none;
  std::size_t n = 0;
  for (const auto& file : ctx.args) {
    auto r = read_jsonl(file);
    for (const auto& e : r.errors) log("warning: " + file + ": " + e);
    for (const auto& t : r.trajectories) {
      out << to_sft_record(t, none).dump() << "\n";
      ++n;
    }
  }
  log("wrote " + std::to_string(n) + " records");
  return kExitOk;
}

int cmd_plot(Context& ctx) {
  if (ctx.args.size() != 1) throw Error(ErrorCode::Config, "plot: exactly one input file is required");
  begin("plot", ctx, {});
  const fs::path input = ctx.args[0];
  const fs::path output = ctx.out / (input.stem().string() + ".svg");
  if (input.extension() == ".csv") {
    auto curve = read_curve_csv(input);
    Series mean{"group mean reward", {}, {}}, greedy{"greedy reward", {}, {}};
    for (const auto& p : curve) {
      mean.x.push_back(p.update);
      mean.y.push_back(p.mean_reward);
      greedy.x.push_back(p.update);
      greedy.y.push_back(p.greedy_reward);
    }
    write_line_svg(output, "reward vs update", "update", {mean, greedy});
  } else {
    std::ifstream in(input);
    if (!in) throw Error(ErrorCode::Config, "plot: cannot read " + input.string());
    auto j = nlohmann::json::parse(in);
    std::vector<std::string> labels;
    std::vector<double> values;
    for (const auto& [k, v] : j.items()) {
      if (!v.is_number()) continue;
      labels.push_back(k);
      values.push_back(v.get<double>());
    }
    write_bar_svg(output, input.filename().string(), labels, values);
  }
  log("wrote " + output.string());
  return kExitOk;
}

int dispatch(const std::string& command, Context& ctx);

int cmd_replay(const fs::path& manifest_path, const std::optional<std::string>& out_override) {
  auto manifest = read_manifest(manifest_path);
  Context ctx;
  ctx.config = manifest.config;
  ctx.args = manifest.args;
  if (auto key = process_env()("VRAG_API_KEY")) ctx.config.api_key = *key;
  ctx.out = out_override ? fs::path(*out_override) : manifest_path.parent_path() / "replay";
  ctx.config.out = ctx.out.string();
  for (const auto& [path, digest] : manifest.inputs) {
    if (!fs::exists(path) || file_sha256(path) != digest) {
      throw Error(ErrorCode::Config, "replay input changed or missing: " + path);
    }
  }
  const int code = dispatch(manifest.command, ctx);

  const auto digest_path = manifest_path.parent_path() / kDigestFile;
  if (!fs::exists(digest_path)) {
    log("no output digest next to the manifest; nothing to compare");
    return code;
  }
  std::ifstream in(digest_path);
  const auto expected = nlohmann::json::parse(in).get<std::map<std::string, std::string>>();
  const auto actual = hash_outputs(ctx.out);
  if (expected != actual) {
    for (const auto& [k, v] : expected) {
      auto it = actual.find(k);
      if (it == actual.end() || it->second != v) log("differs: " + k);
    }
    throw QualityFailure("replay outputs differ from the original run");
  }
  std::cout << "replay identical (" << actual.size() << " files)\n";
  return code;
}

int dispatch(const std::string& command, Context& ctx) {
  ctx.config.validate();
  fs::create_directories(ctx.out);
  int code = kExitOk;
  try {
    if (command == "gen-corpus") {
      code = cmd_gen_corpus(ctx);
    } else if (command == "rollout") {
      code = cmd_rollout(ctx);
    } else if (command == "score") {
      code = cmd_score(ctx);
    } else if (command == "train-toy") {
      code = cmd_train_toy(ctx);
    } else if (command == "synthesize") {
      code = cmd_synthesize(ctx);
    } else if (command == "convert-sft") {
      code = cmd_convert_sft(ctx);
    } else if (command == "plot") {
      code = cmd_plot(ctx);
    } else {
      throw Error(ErrorCode::Config, "unknown command '" + command + "'");
    }
  } catch (...) {
    if (fs::exists(ctx.out / kManifestFile)) write_output_digest(ctx.out);
    throw;
  }
  write_output_digest(ctx.out);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vrag: visual-perception RAG agent toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> config_file, corpus, policy_endpoint, judge_endpoint, weights_profile, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> group_size, max_steps;
  bool no_judge = false;
  app.add_option("--config", config_file, "JSON config file");
  app.add_option("--seed", seed, "run seed");
  app.add_option("--corpus", corpus, "corpus manifest (corpus.json)");
  app.add_option("--policy-endpoint", policy_endpoint, "chat endpoint of the policy model");
  app.add_option("--judge-endpoint", judge_endpoint, "chat endpoint of the judge model");
  app.add_option("--weights-profile", weights_profile, "reward weights")
      ->check(CLI::IsMember({"post-sft", "cold-start", "custom"}));
  app.add_option("--group-size", group_size, "trajectories per task (G)");
  app.add_option("--max-steps", max_steps, "action budget per episode");
  app.add_flag("--no-judge", no_judge, "skip the judge; r_ans and r_total are left absent");
  app.add_option("--out", out, "output directory");

  bool images = false;
  auto* gen = app.add_subcommand("gen-corpus", "generate a planted synthetic corpus");
  std::optional<int> documents, tasks;
  gen->add_option("--documents", documents, "number of pages");
  gen->add_option("--tasks", tasks, "number of questions");
  gen->add_flag("--images", images, "render page images as PNG");

  app.add_subcommand("rollout", "roll out the policy on every task of a corpus");

  std::vector<std::string> inputs;
  auto* score = app.add_subcommand("score", "score trajectory files");
  score->add_option("files", inputs, "trajectory JSONL files")->required();

  auto* train = app.add_subcommand("train-toy", "train the toy policy with GRPO on a planted task");
  std::optional<int> updates;
  std::optional<double> lr;
  train->add_option("--updates", updates, "number of policy updates");
  train->add_option("--lr", lr, "learning rate");

  auto* synth = app.add_subcommand("synthesize", "multi-expert dataset synthesis");
  std::optional<std::string> guide_endpoint, grounding_endpoint;
  synth->add_option("--guide-endpoint", guide_endpoint, "chat endpoint of the guide model");
  synth->add_option("--grounding-endpoint", grounding_endpoint, "chat endpoint of the grounding expert");

  auto* sft = app.add_subcommand("convert-sft", "render trajectories as chat fine-tuning records");
  sft->add_option("files", inputs, "trajectory JSONL files")->required();

  auto* plot = app.add_subcommand("plot", "plot a curve CSV or a metrics JSON as SVG");
  plot->add_option("file", inputs, "curve.csv or metrics JSON")->required();

  auto* replay = app.add_subcommand("replay", "re-run a command from its manifest and compare outputs");
  std::string manifest_path;
  replay->add_option("manifest", manifest_path, "manifest.json of an earlier run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    if (command == "replay") return cmd_replay(manifest_path, out);

    nlohmann::json flags = nlohmann::json::object();
    if (seed) flags["seed"] = *seed;
    if (corpus) flags["corpus"] = *corpus;
    if (policy_endpoint) flags["policy_endpoint"]["url"] = *policy_endpoint;
    if (judge_endpoint) flags["judge_endpoint"]["url"] = *judge_endpoint;
    if (guide_endpoint) flags["guide_endpoint"]["url"] = *guide_endpoint;
    if (grounding_endpoint) flags["grounding_endpoint"]["url"] = *grounding_endpoint;
    if (weights_profile) flags["weights_profile"] = *weights_profile;
    if (group_size) flags["grpo"]["group_size"] = *group_size;
    if (max_steps) {
      flags["rollout"]["max_iterations"] = *max_steps;
      if (command == "train-toy") flags["toy_max_steps"] = *max_steps;
    }
    if (no_judge) flags["judge"] = "none";
    if (out) flags["out"] = *out;
    if (documents) flags["synthetic"]["documents"] = *documents;
    if (tasks) flags["synthetic"]["tasks"] = *tasks;
    if (images) flags["render_pages"] = true;
    if (updates) flags["updates"] = *updates;
    if (lr) flags["grpo"]["learning_rate"] = *lr;

    Context ctx;
    ctx.config = resolve_config(config_file ? std::optional<fs::path>(*config_file) : std::nullopt, process_env(),
                                flags);
    ctx.args = inputs;
    ctx.out = ctx.config.out;
    return dispatch(command, ctx);
  } catch (const QualityFailure& e) {
    log(std::string("quality check failed: ") + e.what());
    return kExitQuality;
  } catch (const Error& e) {
    log(e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    log(std::string("error: ") + e.what());
    return 1;
  }
}
