#pragma once

// Run configuration, its layered resolution (flags > environment > file >
// defaults) and the run manifest written before any command does work.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vrag/expert.hpp"
#include "vrag/grpo.hpp"
#include "vrag/perception.hpp"
#include "vrag/retrieval.hpp"
#include "vrag/reward.hpp"
#include "vrag/trajectory.hpp"

namespace vrag {

struct EndpointSpec {
  std::string url;
  std::string model = "default";
};

/// Small default dataset: two 2-step and two 3-step trajectories of any mix.
BalanceTargets default_targets();

struct RunConfig {
  std::uint64_t seed = 1;
  std::string corpus;  // corpus manifest path
  SyntheticCorpusSpec synthetic;
  bool render_pages = false;  // gen-corpus writes page PNGs

  /// auto | oracle | toy | remote. auto means remote when a policy endpoint is set.
  std::string policy = "auto";
  std::string checkpoint;  // toy policy weights
  /// auto | exact-match | remote | none. auto means remote when a judge endpoint is set.
  std::string judge = "auto";
  EndpointSpec policy_endpoint;
  EndpointSpec judge_endpoint;
  EndpointSpec search_endpoint;
  EndpointSpec guide_endpoint;
  EndpointSpec grounding_endpoint;
  std::string api_key;  // never serialised
  double http_timeout_s = 30.0;

  std::string weights_profile = "post-sft";  // post-sft | cold-start | custom
  RewardWeights weights;                     // used when the profile is custom

  RolloutConfig rollout;
  double temperature = 1.0;
  int top_k = 1;

  GrpoConfig grpo = toy_grpo_config();
  int updates = 500;
  int eval_every = 25;
  int toy_tasks = 8;
  int toy_documents = 40;
  int toy_max_steps = 4;

  EncoderProfile encoder;
  BalanceTargets targets = default_targets();
  int max_attempts = 200;

  int workers = 1;
  std::string out = "out";

  /// Effective reward weights after applying the profile.
  RewardWeights effective_weights() const;
  std::string effective_policy() const;
  std::string effective_judge() const;

  /// Field-level checks; throws ErrorCode::Config naming the field.
  void validate() const;

  nlohmann::json to_json() const;
  /// Overlays the keys present in `j`; unknown keys and type errors are
  /// reported with their field path.
  void merge(const nlohmann::json& j);

  /// SHA-256 of the canonical JSON form.
  std::string hash() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string& name)>;
EnvLookup process_env();

/// defaults -> file (if given) -> environment -> explicit overrides (flags).
RunConfig resolve_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env,
                         const nlohmann::json& flag_overrides);

/// Hash of every prompt template the run may send.
std::string prompt_template_hash();

struct RunManifest {
  std::string command;
  std::vector<std::string> args;  // positional inputs
  RunConfig config;
  std::map<std::string, std::string> endpoints;  // role -> identity
  std::map<std::string, std::string> inputs;     // path -> sha256

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

/// sha256 of every regular file under `dir` except the manifest and the
/// digest file itself, keyed by relative path.
std::map<std::string, std::string> hash_outputs(const std::filesystem::path& dir);
void write_output_digest(const std::filesystem::path& dir);
std::string file_sha256(const std::filesystem::path& path);

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kDigestFile = "outputs.sha256.json";

}  // namespace vrag
