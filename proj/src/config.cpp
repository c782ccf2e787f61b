#include "vrag/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "vrag/errors.hpp"
#include "vrag/hash.hpp"
#include "vrag/prompts.hpp"

namespace vrag {

BalanceTargets default_targets() {
  BalanceTargets t;
  t.buckets[{2, ActionMix::Any}] = 2;
  t.buckets[{3, ActionMix::Any}] = 2;
  t.total = 4;
  return t;
}

RewardWeights RunConfig::effective_weights() const {
  if (weights_profile == "custom") return weights;
  return RewardWeights::profile(weights_profile);
}

std::string RunConfig::effective_policy() const {
  if (policy != "auto") return policy;
  return policy_endpoint.url.empty() ? "oracle" : "remote";
}

std::string RunConfig::effective_judge() const {
  if (judge != "auto") return judge;
  return judge_endpoint.url.empty() ? "exact-match" : "remote";
}

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::Config, "config field '" + field + "': " + what);
}

template <typename F>
void check(const std::string& field, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    field_error(field, e.what());
  }
}

nlohmann::json endpoint_json(const EndpointSpec& e) { return {{"url", e.url}, {"model", e.model}}; }

}  // namespace

void RunConfig::validate() const {
  const auto known = [](const std::string& v, std::initializer_list<const char*> options) {
    for (const char* o : options) {
      if (v == o) return true;
    }
    return false;
  };
  if (!known(policy, {"auto", "oracle", "toy", "remote"})) field_error("policy", "unknown policy '" + policy + "'");
  if (!known(judge, {"auto", "exact-match", "remote", "none"})) field_error("judge", "unknown judge '" + judge + "'");
  if (!known(weights_profile, {"post-sft", "cold-start", "custom"})) {
    field_error("weights_profile", "expected post-sft, cold-start or custom, got '" + weights_profile + "'");
  }
  if (effective_policy() == "remote" && policy_endpoint.url.empty()) field_error("policy_endpoint.url", "required");
  if (effective_judge() == "remote" && judge_endpoint.url.empty()) field_error("judge_endpoint.url", "required");
  if (effective_policy() == "toy" && checkpoint.empty()) field_error("checkpoint", "required for the toy policy");
  check("weights", [&] { effective_weights().validate(); });
  check("rollout", [&] { rollout.validate(); });
  check("grpo", [&] { grpo.validate(); });
  check("encoder", [&] { encoder.validate(); });
  check("targets", [&] { targets.validate(); });
  if (temperature < 0) field_error("temperature", "must be >= 0");
  if (top_k < 1) field_error("top_k", "must be >= 1");
  if (toy_max_steps < 1 || toy_max_steps > 8) field_error("toy_max_steps", "must be in 1..8");
  if (updates < 0) field_error("updates", "must be >= 0");
  if (toy_tasks < 1) field_error("toy_tasks", "must be >= 1");
  if (toy_documents < toy_tasks) field_error("toy_documents", "must be >= toy_tasks");
  if (synthetic.documents < synthetic.tasks * synthetic.golden_per_task) {
    field_error("synthetic.documents", "too few documents for the golden pages");
  }
  if (max_attempts < 1) field_error("max_attempts", "must be >= 1");
  if (workers < 1) field_error("workers", "must be >= 1");
  if (!(http_timeout_s > 0)) field_error("http_timeout_s", "must be > 0");
  if (out.empty()) field_error("out", "required");
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["corpus"] = corpus;
  j["synthetic"] = {{"documents", synthetic.documents},
                    {"tasks", synthetic.tasks},
                    {"golden_per_task", synthetic.golden_per_task},
                    {"seed", synthetic.seed},
                    {"min_side", synthetic.min_side},
                    {"max_side", synthetic.max_side}};
  j["render_pages"] = render_pages;
  j["policy"] = policy;
  j["checkpoint"] = checkpoint;
  j["judge"] = judge;
  j["policy_endpoint"] = endpoint_json(policy_endpoint);
  j["judge_endpoint"] = endpoint_json(judge_endpoint);
  j["search_endpoint"] = endpoint_json(search_endpoint);
  j["guide_endpoint"] = endpoint_json(guide_endpoint);
  j["grounding_endpoint"] = endpoint_json(grounding_endpoint);
  j["http_timeout_s"] = http_timeout_s;
  j["weights_profile"] = weights_profile;
  j["weights"] = {{"alpha", weights.alpha}, {"beta", weights.beta}, {"gamma", weights.gamma}};
  j["rollout"] = {{"max_iterations", rollout.max_iterations},
                  {"max_prompt_tokens", rollout.max_prompt_tokens},
                  {"max_response_tokens", rollout.max_response_tokens}};
  j["temperature"] = temperature;
  j["top_k"] = top_k;
  j["grpo"] = grpo.to_json();
  j["updates"] = updates;
  j["eval_every"] = eval_every;
  j["toy_tasks"] = toy_tasks;
  j["toy_documents"] = toy_documents;
  j["toy_max_steps"] = toy_max_steps;
  j["encoder"] = {{"max_pixels", encoder.max_pixels},
                  {"patch_multiple", encoder.patch_multiple},
                  {"normalization_scale", encoder.normalization_scale ? nlohmann::json(*encoder.normalization_scale)
                                                                      : nlohmann::json(nullptr)},
                  {"zoom_crops", encoder.zoom_crops}};
  j["targets"] = targets.to_json();
  j["max_attempts"] = max_attempts;
  j["workers"] = workers;
  j["out"] = out;
  return j;
}

namespace {

class Merger {
 public:
  Merger(const nlohmann::json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) field_error(prefix_.empty() ? "<root>" : prefix_, "expected an object");
  }

  template <typename T>
  void take(const char* key, T& target) {
    seen_.push_back(key);
    if (!j_.contains(key)) return;
    try {
      target = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      field_error(path(key), "wrong type (" + std::string(j_.at(key).type_name()) + ")");
    }
  }

  template <typename F>
  void nested(const char* key, F&& f) {
    seen_.push_back(key);
    if (!j_.contains(key)) return;
    Merger m(j_.at(key), path(key));
    f(m);
    m.finish();
  }

  void raw(const char* key, const std::function<void(const nlohmann::json&)>& f) {
    seen_.push_back(key);
    if (!j_.contains(key)) return;
    try {
      f(j_.at(key));
    } catch (const Error& e) {
      field_error(path(key), e.what());
    } catch (const nlohmann::json::exception& e) {
      field_error(path(key), e.what());
    }
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (std::find(seen_.begin(), seen_.end(), k) == seen_.end()) field_error(path(k), "unknown field");
    }
  }

 private:
  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  const nlohmann::json& j_;
  std::string prefix_;
  std::vector<std::string> seen_;
};

void merge_endpoint(Merger& m, const char* key, EndpointSpec& e) {
  m.nested(key, [&](Merger& n) {
    n.take("url", e.url);
    n.take("model", e.model);
  });
}

}  // namespace

void RunConfig::merge(const nlohmann::json& j) {
  Merger m(j, "");
  m.take("seed", seed);
  m.take("corpus", corpus);
  m.nested("synthetic", [&](Merger& n) {
    n.take("documents", synthetic.documents);
    n.take("tasks", synthetic.tasks);
    n.take("golden_per_task", synthetic.golden_per_task);
    n.take("seed", synthetic.seed);
    n.take("min_side", synthetic.min_side);
    n.take("max_side", synthetic.max_side);
  });
  m.take("render_pages", render_pages);
  m.take("policy", policy);
  m.take("checkpoint", checkpoint);
  m.take("judge", judge);
  merge_endpoint(m, "policy_endpoint", policy_endpoint);
  merge_endpoint(m, "judge_endpoint", judge_endpoint);
  merge_endpoint(m, "search_endpoint", search_endpoint);
  merge_endpoint(m, "guide_endpoint", guide_endpoint);
  merge_endpoint(m, "grounding_endpoint", grounding_endpoint);
  m.take("http_timeout_s", http_timeout_s);
  m.take("weights_profile", weights_profile);
  m.nested("weights", [&](Merger& n) {
    n.take("alpha", weights.alpha);
    n.take("beta", weights.beta);
    n.take("gamma", weights.gamma);
  });
  m.nested("rollout", [&](Merger& n) {
    n.take("max_iterations", rollout.max_iterations);
    n.take("max_prompt_tokens", rollout.max_prompt_tokens);
    n.take("max_response_tokens", rollout.max_response_tokens);
  });
  m.take("temperature", temperature);
  m.take("top_k", top_k);
  m.nested("grpo", [&](Merger& n) {
    n.take("group_size", grpo.group_size);
    n.take("clip_epsilon", grpo.clip_epsilon);
    n.take("kl_coefficient", grpo.kl_coefficient);
    n.take("learning_rate", grpo.learning_rate);
    n.take("advantage_std_floor", grpo.advantage_std_floor);
  });
  m.take("updates", updates);
  m.take("eval_every", eval_every);
  m.take("toy_tasks", toy_tasks);
  m.take("toy_documents", toy_documents);
  m.take("toy_max_steps", toy_max_steps);
  m.nested("encoder", [&](Merger& n) {
    n.take("max_pixels", encoder.max_pixels);
    n.take("patch_multiple", encoder.patch_multiple);
    n.raw("normalization_scale", [&](const nlohmann::json& v) {
      encoder.normalization_scale = v.is_null() ? std::nullopt : std::optional<std::int64_t>(v.get<std::int64_t>());
    });
    n.take("zoom_crops", encoder.zoom_crops);
  });
  m.raw("targets", [&](const nlohmann::json& v) { check("targets", [&] { targets = BalanceTargets::from_json(v); }); });
  m.take("max_attempts", max_attempts);
  m.take("workers", workers);
  m.take("out", out);
  m.finish();
}

std::string RunConfig::hash() const {
  // Where results are written does not change what is computed.
  auto j = to_json();
  j.erase("out");
  return sha256_hex(j.dump());
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str()); v && *v) return std::string(v);
    return std::nullopt;
  };
}

RunConfig resolve_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env,
                         const nlohmann::json& flag_overrides) {
  RunConfig c;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw Error(ErrorCode::Config, "cannot read config file " + file->string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::Config, "config file " + file->string() + " is not valid JSON: " + e.what());
    }
    c.merge(j);
  }
  if (env) {
    if (auto v = env("VRAG_POLICY_URL")) c.policy_endpoint.url = *v;
    if (auto v = env("VRAG_JUDGE_URL")) c.judge_endpoint.url = *v;
    if (auto v = env("VRAG_SEARCH_URL")) c.search_endpoint.url = *v;
    if (auto v = env("VRAG_API_KEY")) c.api_key = *v;
  }
  if (!flag_overrides.is_null()) c.merge(flag_overrides);
  return c;
}

std::string prompt_template_hash() {
  std::string all;
  for (std::string_view p : {prompts::kAgentSystem, prompts::kJudgeSystem, prompts::kInvalidAction,
                             prompts::kGroundingSystem}) {
    all += p;
    all += '\0';
  }
  all += prompts::agent_user("{query}");
  all += '\0';
  all += prompts::judge_user("{query}", "{reference}", "{generated}");
  return sha256_hex(all);
}

nlohmann::json RunManifest::to_json() const {
  return {{"command", command},
          {"args", args},
          {"config", config.to_json()},
          {"config_hash", config.hash()},
          {"seeds", {{"run", config.seed}, {"synthetic_corpus", config.synthetic.seed}}},
          {"prompt_template_hash", prompt_template_hash()},
          {"endpoints", endpoints},
          {"inputs", inputs}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.args = j.value("args", std::vector<std::string>{});
  m.config.merge(j.at("config"));
  m.endpoints = j.value("endpoints", std::map<std::string, std::string>{});
  m.inputs = j.value("inputs", std::map<std::string, std::string>{});
  return m;
}

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / kManifestFile);
  if (!out) throw Error(ErrorCode::Io, "cannot write manifest in " + dir.string());
  out << manifest.to_json().dump(2) << "\n";
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot read manifest " + path.string());
  try {
    return RunManifest::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, "manifest " + path.string() + ": " + e.what());
  }
}

std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

std::map<std::string, std::string> hash_outputs(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), dir).generic_string();
    if (rel == kManifestFile || rel == kDigestFile) continue;
    out[rel] = file_sha256(entry.path());
  }
  return out;
}

void write_output_digest(const std::filesystem::path& dir) {
  std::ofstream out(dir / kDigestFile);
  if (!out) throw Error(ErrorCode::Io, "cannot write output digest in " + dir.string());
  out << nlohmann::json(hash_outputs(dir)).dump(2) << "\n";
}

}  // namespace vrag
