#include "vrag/grpo.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "vrag/errors.hpp"
#include "vrag/hash.hpp"

namespace vrag {

void GrpoConfig::validate() const {
  if (group_size < 2) throw Error(ErrorCode::GroupTooSmall, "group_size must be >= 2");
  if (!(clip_epsilon > 0.0)) throw Error(ErrorCode::Config, "clip_epsilon must be > 0");
  if (kl_coefficient < 0.0) throw Error(ErrorCode::Config, "kl_coefficient must be >= 0");
  if (learning_rate < 0.0) throw Error(ErrorCode::Config, "learning_rate must be >= 0");
  if (!(advantage_std_floor > 0.0)) throw Error(ErrorCode::Config, "advantage_std_floor must be > 0");
}

nlohmann::json GrpoConfig::to_json() const {
  return {{"group_size", group_size},
          {"clip_epsilon", clip_epsilon},
          {"kl_coefficient", kl_coefficient},
          {"learning_rate", learning_rate},
          {"advantage_std_floor", advantage_std_floor}};
}

GrpoConfig GrpoConfig::from_json(const nlohmann::json& j) {
  GrpoConfig c;
  c.group_size = j.value("group_size", c.group_size);
  c.clip_epsilon = j.value("clip_epsilon", c.clip_epsilon);
  c.kl_coefficient = j.value("kl_coefficient", c.kl_coefficient);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.advantage_std_floor = j.value("advantage_std_floor", c.advantage_std_floor);
  return c;
}

std::vector<double> compute_advantages(std::span<const double> rewards, const GrpoConfig& config) {
  if (rewards.size() < 2) throw Error(ErrorCode::GroupTooSmall, "need at least two rewards per group");
  // Identical rewards carry no signal; the rounded mean would leak noise
  // through the std floor.
  if (std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; })) {
    return std::vector<double>(rewards.size(), 0.0);
  }
  const double n = double(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std_pop = std::sqrt(var / n);
  const double denom = std::max(std_pop, config.advantage_std_floor);
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back((r - mean) / denom);
  return out;
}

std::size_t TokenizedTrajectory::policy_tokens() const noexcept {
  std::size_t n = 0;
  for (std::size_t t = 0; t < size(); ++t) n += counts(t) ? 1 : 0;
  return n;
}

void TokenizedTrajectory::validate() const {
  const auto n = token_ids.size();
  if (source.size() != n || mask.size() != n || logp_old.size() != n || logp_ref.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "token arrays differ in length");
  }
  if (!logp_theta.empty() && logp_theta.size() != n) throw Error(ErrorCode::ShapeMismatch, "logp_theta length");
  if (!state.empty() && state.size() != n) throw Error(ErrorCode::ShapeMismatch, "state length");
}

// ---- toy policy -----------------------------------------------------------

ToyPolicy::ToyPolicy(int states, int actions)
    : states_(states), actions_(actions), logits_(std::size_t(states) * std::size_t(actions), 0.0) {
  if (states < 1 || actions < 2) throw Error(ErrorCode::Config, "toy policy needs >= 1 state and >= 2 actions");
}

std::vector<double> ToyPolicy::probs(int state) const {
  const double* row = logits_.data() + std::size_t(state) * std::size_t(actions_);
  const double mx = *std::max_element(row, row + actions_);
  std::vector<double> p(static_cast<std::size_t>(actions_));
  double z = 0.0;
  for (int a = 0; a < actions_; ++a) z += (p[std::size_t(a)] = std::exp(row[a] - mx));
  for (auto& v : p) v /= z;
  return p;
}

double ToyPolicy::log_prob(int state, int action) const {
  const double* row = logits_.data() + std::size_t(state) * std::size_t(actions_);
  const double mx = *std::max_element(row, row + actions_);
  double z = 0.0;
  for (int a = 0; a < actions_; ++a) z += std::exp(row[a] - mx);
  return row[action] - mx - std::log(z);
}

int ToyPolicy::greedy(int state) const {
  const double* row = logits_.data() + std::size_t(state) * std::size_t(actions_);
  return int(std::max_element(row, row + actions_) - row);
}

int ToyPolicy::sample(int state, double u, double temperature) const {
  if (temperature <= 0.0) return greedy(state);
  const double* row = logits_.data() + std::size_t(state) * std::size_t(actions_);
  const double mx = *std::max_element(row, row + actions_);
  std::vector<double> w(static_cast<std::size_t>(actions_));
  double z = 0.0;
  for (int a = 0; a < actions_; ++a) z += (w[std::size_t(a)] = std::exp((row[a] - mx) / temperature));
  double acc = 0.0;
  for (int a = 0; a < actions_; ++a) {
    acc += w[std::size_t(a)] / z;
    if (u < acc) return a;
  }
  return actions_ - 1;
}

// ---- loss -----------------------------------------------------------------

namespace {

struct Term {
  double objective = 0.0;  // per-trajectory token mean of (surrogate - beta * kl)
  double surrogate = 0.0;
  double kl = 0.0;
  std::vector<double> grad;
};

void check_group(const GrpoGroup& group) {
  if (group.trajectories.empty()) throw Error(ErrorCode::GroupTooSmall, "empty group");
  if (group.advantages.size() != group.trajectories.size()) {
    throw Error(ErrorCode::ShapeMismatch, "one advantage per trajectory required");
  }
  for (const auto& t : group.trajectories) {
    t.validate();
    if (t.policy_tokens() == 0) throw Error(ErrorCode::EmptyMask, "trajectory without policy tokens");
  }
}

/// d(surrogate)/d(log pi_theta) for one token: ratio * A when the unclipped
/// branch is the minimum, zero when clipping is active.
inline double surrogate_and_slope(double ratio, double adv, double eps, double& value) {
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  const double unclipped_obj = ratio * adv;
  const double clipped_obj = clipped * adv;
  if (unclipped_obj <= clipped_obj) {
    value = unclipped_obj;
    return ratio * adv;
  }
  value = clipped_obj;
  return 0.0;
}

Term toy_term(const TokenizedTrajectory& traj, double adv, const ToyPolicy& policy, const ToyPolicy& ref,
              const GrpoConfig& config) {
  Term term;
  term.grad.assign(policy.params().size(), 0.0);
  const double m = double(traj.policy_tokens());
  const int A = policy.actions();
  for (std::size_t t = 0; t < traj.size(); ++t) {
    if (!traj.counts(t)) continue;
    const int s = traj.state[t];
    const int a = traj.token_ids[t];
    const auto p = policy.probs(s);
    const auto q = ref.probs(s);
    const double logp = std::log(p[std::size_t(a)]);
    const double ratio = std::exp(logp - traj.logp_old[t]);
    double surr = 0.0;
    const double slope = surrogate_and_slope(ratio, adv, config.clip_epsilon, surr);

    double kl = 0.0;
    std::vector<double> logdiff(static_cast<std::size_t>(A));
    for (int b = 0; b < A; ++b) {
      logdiff[std::size_t(b)] = std::log(p[std::size_t(b)]) - std::log(q[std::size_t(b)]);
      kl += p[std::size_t(b)] * logdiff[std::size_t(b)];
    }
    term.surrogate += surr / m;
    term.kl += kl / m;
    term.objective += (surr - config.kl_coefficient * kl) / m;

    double* g = term.grad.data() + std::size_t(s) * std::size_t(A);
    for (int b = 0; b < A; ++b) {
      const double pb = p[std::size_t(b)];
      const double dlogp = (b == a ? 1.0 : 0.0) - pb;
      const double dkl = pb * (logdiff[std::size_t(b)] - kl);
      g[b] += (slope * dlogp - config.kl_coefficient * dkl) / m;
    }
  }
  return term;
}

LossResult reduce_terms(std::vector<Term>& terms, std::size_t params) {
  LossResult r;
  r.grad.assign(params, 0.0);
  const double G = double(terms.size());
  for (const auto& term : terms) {
    r.loss -= term.objective / G;
    r.surrogate += term.surrogate / G;
    r.kl += term.kl / G;
    for (std::size_t k = 0; k < params; ++k) r.grad[k] -= term.grad[k] / G;
  }
  return r;
}

}  // namespace

LossResult grpo_loss_serial(const GrpoGroup& group, const ToyPolicy& policy, const ToyPolicy& reference,
                            const GrpoConfig& config) {
  check_group(group);
  std::vector<Term> terms;
  terms.reserve(group.trajectories.size());
  for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
    terms.push_back(toy_term(group.trajectories[i], group.advantages[i], policy, reference, config));
  }
  return reduce_terms(terms, policy.params().size());
}

LossResult grpo_loss(const GrpoGroup& group, const ToyPolicy& policy, const ToyPolicy& reference,
                     const GrpoConfig& config) {
  check_group(group);
  const auto n = std::ptrdiff_t(group.trajectories.size());
  std::vector<Term> terms(group.trajectories.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = std::size_t(i);
    terms[k] = toy_term(group.trajectories[k], group.advantages[k], policy, reference, config);
  }
  // Ordered reduction keeps the result bit-identical to the serial path.
  return reduce_terms(terms, policy.params().size());
}

LossResult grpo_loss_logprob(const GrpoGroup& group, const GrpoConfig& config) {
  check_group(group);
  LossResult r;
  const double G = double(group.trajectories.size());
  for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
    const auto& traj = group.trajectories[i];
    if (traj.logp_theta.size() != traj.size()) throw Error(ErrorCode::ShapeMismatch, "logp_theta missing");
    const double m = double(traj.policy_tokens());
    const double adv = group.advantages[i];
    for (std::size_t t = 0; t < traj.size(); ++t) {
      if (!traj.counts(t)) {
        r.grad.push_back(0.0);
        continue;
      }
      const double ratio = std::exp(traj.logp_theta[t] - traj.logp_old[t]);
      double surr = 0.0;
      const double slope = surrogate_and_slope(ratio, adv, config.clip_epsilon, surr);
      const double d = traj.logp_ref[t] - traj.logp_theta[t];
      const double kl = std::exp(d) - d - 1.0;
      r.loss -= (surr - config.kl_coefficient * kl) / (m * G);
      r.surrogate += surr / (m * G);
      r.kl += kl / (m * G);
      r.grad.push_back(-(slope - config.kl_coefficient * (1.0 - std::exp(d))) / (m * G));
    }
  }
  return r;
}

std::vector<double> reinforce_gradient(const GrpoGroup& group, const ToyPolicy& policy) {
  check_group(group);
  std::vector<double> grad(policy.params().size(), 0.0);
  const double G = double(group.trajectories.size());
  const int A = policy.actions();
  for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
    const auto& traj = group.trajectories[i];
    const double m = double(traj.policy_tokens());
    for (std::size_t t = 0; t < traj.size(); ++t) {
      if (!traj.counts(t)) continue;
      const int s = traj.state[t];
      const auto p = policy.probs(s);
      for (int b = 0; b < A; ++b) {
        const double dlogp = (b == traj.token_ids[t] ? 1.0 : 0.0) - p[std::size_t(b)];
        grad[std::size_t(s) * std::size_t(A) + std::size_t(b)] -= group.advantages[i] * dlogp / (m * G);
      }
    }
  }
  return grad;
}

// ---- toy task -------------------------------------------------------------

namespace {

constexpr int kObsKinds = 4;  // start, page, crop, invalid/error
constexpr std::string_view kGenericQuery = "unrelated lookup";

std::string question_of(const std::vector<ChatMessage>& messages) {
  for (const auto& m : messages) {
    if (m.role == Role::User && m.text.rfind("Query: ", 0) == 0) return m.text.substr(7);
  }
  return {};
}

std::string answer_from(const std::string& observation) {
  auto tokens = tokenize(observation);
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (tokens[i] == "figure") return tokens[i + 1];
  }
  return "unknown";
}

}  // namespace

int toy_state_count(int max_steps) { return std::max(1, max_steps) * kObsKinds; }

ToyPolicyClient::ToyPolicyClient(std::shared_ptr<const ToyPolicy> policy, int max_steps, std::vector<int> forced)
    : policy_(std::move(policy)), max_steps_(max_steps), forced_(std::move(forced)) {}

int ToyPolicyClient::state_of(const std::vector<ChatMessage>& messages, int max_steps) {
  int steps = 0;
  for (const auto& m : messages) steps += m.role == Role::Assistant ? 1 : 0;
  int kind = 0;
  if (steps > 0 && !messages.empty() && messages.back().role == Role::User) {
    const auto& text = messages.back().text;
    if (text.rfind(observation::kPage, 0) == 0) {
      kind = 1;
    } else if (text.rfind(observation::kCrop, 0) == 0) {
      kind = 2;
    } else {
      kind = 3;
    }
  }
  return std::min(steps, std::max(1, max_steps) - 1) * kObsKinds + kind;
}

std::string ToyPolicyClient::render(int action, const std::vector<ChatMessage>& messages) {
  switch (action) {
    case kSearchQuestion:
      return render_response("search the question", SearchAction{question_of(messages)});
    case kSearchGeneric:
      return render_response("search something", SearchAction{std::string(kGenericQuery)});
    case kRegionCorner:
      return render_response("zoom in", RegionAction{{0, 0, 56, 56}, std::nullopt});
    case kAnswerFromContext: {
      std::string last;
      if (messages.size() > 2 && messages.back().role == Role::User) last = messages.back().text;
      return render_response("answer", AnswerAction{answer_from(last)});
    }
    default:
      return "I am not sure what to do.";
  }
}

std::string ToyPolicyClient::complete(const std::vector<ChatMessage>& messages, const DecodingParams& params) {
  int action = 0;
  if (!forced_.empty()) {
    const auto step = std::size_t(std::count_if(messages.begin(), messages.end(),
                                                [](const ChatMessage& m) { return m.role == Role::Assistant; }));
    action = forced_[std::min(step, forced_.size() - 1)];
  } else {
    const double u = double(splitmix64(params.seed) >> 11) * 0x1.0p-53;
    action = policy_->sample(state_of(messages, max_steps_), u, params.temperature);
  }
  return render(action, messages);
}

std::string ExactMatchJudge::complete(const std::vector<ChatMessage>& messages, const DecodingParams&) {
  auto field = [](const std::string& text, std::string_view label) {
    auto p = text.find(label);
    if (p == std::string::npos) return std::string();
    auto e = text.find('\n', p);
    return text.substr(p + label.size(), e == std::string::npos ? std::string::npos : e - p - label.size());
  };
  const std::string& text = messages.empty() ? std::string() : messages.back().text;
  auto norm = [](const std::string& s) {
    auto tokens = tokenize(s);
    std::string out;
    for (const auto& t : tokens) out += t + " ";
    return out;
  };
  const bool ok = norm(field(text, "Reference Answer: ")) == norm(field(text, "Generated Answer: "));
  return ok ? "<judge>True</judge>" : "<judge>False</judge>";
}

int toy_action_of(const Turn& turn, const std::string& question) {
  if (!turn.action) return kMalformed;
  switch (kind_of(*turn.action)) {
    case ActionKind::Search:
      return std::get<SearchAction>(*turn.action).query == question ? kSearchQuestion : kSearchGeneric;
    case ActionKind::Region: return kRegionCorner;
    case ActionKind::Answer: return kAnswerFromContext;
  }
  return kMalformed;
}

TokenizedTrajectory tokenize_toy(const Trajectory& t, const QueryTask& task, const ToyPolicy& old_policy,
                                 const ToyPolicy& reference, int max_steps) {
  TokenizedTrajectory out;
  std::vector<ChatMessage> prefix;
  for (const auto& turn : t.turns) {
    if (turn.role == Role::Assistant) {
      const int s = ToyPolicyClient::state_of(prefix, max_steps);
      const int a = toy_action_of(turn, task.question);
      out.token_ids.push_back(a);
      out.source.push_back(TokenSource::Policy);
      out.mask.push_back(1);
      out.state.push_back(s);
      out.logp_old.push_back(old_policy.log_prob(s, a));
      out.logp_ref.push_back(reference.log_prob(s, a));
    } else {
      out.token_ids.push_back(-1);
      out.source.push_back(turn.role == Role::User && prefix.size() >= 2 ? TokenSource::Observation
                                                                          : TokenSource::Prompt);
      out.mask.push_back(0);
      out.state.push_back(-1);
      out.logp_old.push_back(0.0);
      out.logp_ref.push_back(0.0);
    }
    prefix.push_back({turn.role, turn.text.value_or(""), {}});
  }
  return out;
}

ToyEnvironment ToyEnvironment::planted(std::uint64_t seed, int tasks, int documents) {
  ToyEnvironment e;
  SyntheticCorpusSpec spec;
  spec.documents = documents;
  spec.tasks = tasks;
  spec.seed = seed;
  e.corpus = std::make_shared<Corpus>(generate_synthetic_corpus(spec));
  e.env.retriever = std::make_shared<SimulatedRetriever>(e.corpus, seed);
  e.env.perception = std::make_shared<PerceptionEngine>(EncoderProfile{});
  e.env.corpus = e.corpus;
  e.env.captions = true;
  return e;
}

double ToyEnvironment::reward(const Trajectory& t, const QueryTask& task) const {
  ExactMatchJudge judge;
  ScoreOptions options;
  options.weights = weights;
  options.judge = &judge;
  return score_trajectory(t, task, options).r_total.value_or(0.0);
}

double greedy_reward(ToyEnvironment& env, const ToyPolicy& policy) {
  auto snapshot = std::make_shared<const ToyPolicy>(policy);
  ToyPolicyClient client(snapshot, env.max_steps);
  RolloutOptions ro;
  ro.config.max_iterations = env.max_steps;
  ro.decoding.temperature = 0.0;
  double total = 0.0;
  for (const auto& task : env.corpus->tasks) {
    total += env.reward(rollout(task, client, env.env, ro), task);
  }
  return total / double(env.corpus->tasks.size());
}

OptimumResult enumerate_optimum(ToyEnvironment& env, const QueryTask& task) {
  OptimumResult best{-1.0, {}};
  RolloutOptions ro;
  ro.config.max_iterations = env.max_steps;
  std::vector<int> seq;
  // Depth-first over template sequences; Answer terminates a branch.
  auto visit = [&](auto&& self) -> void {
    if (!seq.empty()) {
      const bool terminal = seq.back() == kAnswerFromContext || int(seq.size()) == env.max_steps;
      if (terminal) {
        ToyPolicyClient client(nullptr, env.max_steps, seq);
        auto r = env.reward(rollout(task, client, env.env, ro), task);
        if (r > best.reward + 1e-12) best = {r, seq};
        return;
      }
    }
    for (int a = 0; a < kToyActionCount; ++a) {
      seq.push_back(a);
      self(self);
      seq.pop_back();
    }
  };
  visit(visit);
  return best;
}

GrpoConfig toy_grpo_config() {
  GrpoConfig c;
  c.learning_rate = 0.5;
  return c;
}

TrainResult train_toy(ToyEnvironment& env, ToyPolicy& policy, const GrpoConfig& config,
                      const TrainOptions& options) {
  config.validate();
  if (env.corpus->tasks.empty()) throw Error(ErrorCode::Config, "toy environment has no tasks");
  TrainResult result;
  const ToyPolicy reference = policy;

  for (int u = 0; u < options.steps; ++u) {
    const auto& task = env.corpus->tasks[std::size_t(u) % env.corpus->tasks.size()];
    auto old = std::make_shared<const ToyPolicy>(policy);
    ToyPolicyClient client(old, env.max_steps);
    RolloutOptions ro;
    ro.config.max_iterations = env.max_steps;
    ro.seed = derive_seed(options.seed, std::uint64_t(u));
    ro.workers = options.workers;
    auto trajectories = rollout_group(task, client, env.env, ro, config.group_size);

    GrpoGroup group;
    for (const auto& t : trajectories) {
      group.rewards.push_back(env.reward(t, task));
      group.trajectories.push_back(tokenize_toy(t, task, *old, reference, env.max_steps));
    }
    group.advantages = compute_advantages(group.rewards, config);
    auto loss = grpo_loss(group, policy, reference, config);

    CurvePoint point;
    point.update = u;
    point.mean_reward = std::accumulate(group.rewards.begin(), group.rewards.end(), 0.0) /
                        double(group.rewards.size());
    point.loss = loss.loss;
    point.kl = loss.kl;
    if (!std::isfinite(loss.loss) ||
        std::any_of(loss.grad.begin(), loss.grad.end(), [](double g) { return !std::isfinite(g); })) {
      result.diverged = true;
      point.greedy_reward = std::numeric_limits<double>::quiet_NaN();
      result.curve.push_back(point);
      break;
    }
    auto params = policy.params();
    for (std::size_t k = 0; k < params.size(); ++k) params[k] -= config.learning_rate * loss.grad[k];

    const bool eval = options.eval_every > 0 && ((u + 1) % options.eval_every == 0 || u + 1 == options.steps);
    point.greedy_reward = eval ? greedy_reward(env, policy) : std::numeric_limits<double>::quiet_NaN();
    result.curve.push_back(point);
  }
  result.final_greedy_reward = greedy_reward(env, policy);
  return result;
}

void write_curve_csv(const std::filesystem::path& path, std::span<const CurvePoint> curve) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "update,mean_reward,loss,kl,greedy_reward\n";
  out.precision(17);
  for (const auto& p : curve) {
    out << p.update << ',' << p.mean_reward << ',' << p.loss << ',' << p.kl << ',';
    if (std::isfinite(p.greedy_reward)) out << p.greedy_reward;
    out << '\n';
  }
}

std::vector<CurvePoint> read_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::vector<CurvePoint> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 4) throw Error(ErrorCode::Parse, "curve row has too few columns: " + line);
    CurvePoint p;
    p.update = std::stoi(cells[0]);
    p.mean_reward = std::stod(cells[1]);
    p.loss = std::stod(cells[2]);
    p.kl = std::stod(cells[3]);
    p.greedy_reward = cells.size() > 4 && !cells[4].empty() ? std::stod(cells[4])
                                                            : std::numeric_limits<double>::quiet_NaN();
    out.push_back(p);
  }
  return out;
}

namespace {

constexpr char kMagic[8] = {'V', 'R', 'A', 'G', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw Error(ErrorCode::Checkpoint, "truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put(out, kCheckpointVersion);
  put(out, std::uint32_t(ckpt.policy.states()));
  put(out, std::uint32_t(ckpt.policy.actions()));
  for (double v : ckpt.policy.params()) put(out, v);
  put(out, ckpt.seed);
  const auto cfg = ckpt.config.to_json().dump();
  put(out, std::uint32_t(cfg.size()));
  out.write(cfg.data(), std::streamsize(cfg.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || !std::equal(magic, magic + 8, kMagic)) {
    throw Error(ErrorCode::Checkpoint, "bad magic in " + path.string());
  }
  const auto version = take<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::Checkpoint, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto states = take<std::uint32_t>(in);
  const auto actions = take<std::uint32_t>(in);
  Checkpoint c;
  c.policy = ToyPolicy(int(states), int(actions));
  for (auto& v : c.policy.params()) v = take<double>(in);
  c.seed = take<std::uint64_t>(in);
  const auto len = take<std::uint32_t>(in);
  std::string cfg(len, '\0');
  if (!in.read(cfg.data(), len)) throw Error(ErrorCode::Checkpoint, "truncated config");
  c.config = GrpoConfig::from_json(nlohmann::json::parse(cfg));
  return c;
}

}  // namespace vrag
