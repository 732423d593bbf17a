#include "pablo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "pablo/composite.hpp"
#include "pablo/environments.hpp"
#include "pablo/olo.hpp"

namespace pablo {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- names

const std::map<std::string, EnvKind> kEnvNames = {
    {"zero", EnvKind::Zero},
    {"fixed", EnvKind::Fixed},
    {"stochastic", EnvKind::Stochastic},
    {"hypercube", EnvKind::Hypercube},
    {"clipped_hypercube", EnvKind::ClippedHypercube},
    {"piecewise_hypercube", EnvKind::PiecewiseHypercube},
    {"adaptive_sign", EnvKind::AdaptiveSign},
    {"random_bounded", EnvKind::RandomBounded},
};

const std::map<std::string, LearnerKind> kLearnerNames = {
    {"dynamic_base", LearnerKind::DynamicBase},
    {"dynamic_meta", LearnerKind::DynamicMeta},
    {"highprob_meta", LearnerKind::HighProbMeta},
};

const std::map<std::string, ComparatorKind> kComparatorNames = {
    {"zero", ComparatorKind::Zero},
    {"static", ComparatorKind::Static},
    {"switching", ComparatorKind::Switching},
    {"aligned", ComparatorKind::Aligned},
    {"fenchel", ComparatorKind::Fenchel},
};

template <class E>
std::string name_of(const std::map<std::string, E>& table, E value) {
  for (const auto& [k, v] : table)
    if (v == value) return k;
  return "unknown";
}

// ---------------------------------------------------------------- config errors

// Maps a key path to the line of its first match in the raw text, walking
// the keys in order so nested names resolve inside their parent.
class Locator {
 public:
  explicit Locator(const std::string& text) : text_(text) {}

  std::size_t line_of(const std::vector<std::string>& path) const {
    std::size_t pos = 0;
    std::size_t found = std::string::npos;
    for (const auto& key : path) {
      const auto hit = text_.find("\"" + key + "\"", pos);
      if (hit == std::string::npos) break;
      found = hit;
      pos = hit + key.size() + 2;
    }
    return found == std::string::npos ? 1 : line_at(found);
  }

  std::size_t line_at(std::size_t offset) const {
    offset = std::min(offset, text_.size());
    return 1 + static_cast<std::size_t>(std::count(text_.begin(), text_.begin() + static_cast<long>(offset), '\n'));
  }

 private:
  const std::string& text_;
};

struct Parser {
  const Locator& loc;

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& msg) const {
    std::string joined;
    for (const auto& k : path) joined += (joined.empty() ? "" : ".") + k;
    throw Error("harness", "line " + std::to_string(loc.line_of(path)) + ": " + joined + ": " + msg);
  }

  void only_keys(const json& obj, const std::vector<std::string>& path, std::initializer_list<const char*> keys) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [k, v] : obj.items()) {
      bool ok = false;
      for (const char* allowed : keys) ok = ok || k == allowed;
      if (!ok) {
        auto p = path;
        p.push_back(k);
        fail(p, "unknown key");
      }
    }
  }

  double number(const json& v, const std::vector<std::string>& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "expected a finite number");
    return x;
  }

  std::size_t count(const json& v, const std::vector<std::string>& path) const {
    if (!v.is_number_integer() && !v.is_number_unsigned()) fail(path, "expected a nonnegative integer");
    if (v.is_number_integer() && v.get<long long>() < 0) fail(path, "expected a nonnegative integer");
    return v.get<std::size_t>();
  }

  std::string string(const json& v, const std::vector<std::string>& path) const {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }

  Vector vector(const json& v, const std::vector<std::string>& path) const {
    if (!v.is_array() || v.empty()) fail(path, "expected a nonempty array of numbers");
    std::vector<double> xs;
    for (const auto& e : v) xs.push_back(number(e, path));
    return Vector(std::move(xs));
  }

  template <class E>
  E lookup(const std::map<std::string, E>& table, const json& v, const std::vector<std::string>& path) const {
    const std::string s = string(v, path);
    const auto it = table.find(s);
    if (it == table.end()) {
      std::string options;
      for (const auto& [k, _] : table) options += (options.empty() ? "" : ", ") + k;
      fail(path, "unknown value '" + s + "' (expected one of " + options + ")");
    }
    return it->second;
  }
};

EnvConfig parse_env(const json& j, const Parser& p) {
  const std::vector<std::string> base{"env"};
  p.only_keys(j, base, {"type", "d", "losses", "theta", "sigma", "clip", "segments", "G"});
  auto at = [&](const char* k) { return std::vector<std::string>{"env", k}; };
  EnvConfig e;
  if (!j.contains("type")) p.fail(base, "missing key 'type'");
  e.kind = p.lookup(kEnvNames, j["type"], at("type"));
  if (j.contains("d")) e.d = p.count(j["d"], at("d"));
  if (j.contains("losses")) {
    if (!j["losses"].is_array() || j["losses"].empty()) p.fail(at("losses"), "expected a nonempty array of vectors");
    for (const auto& l : j["losses"]) e.losses.push_back(p.vector(l, at("losses")));
  }
  if (j.contains("theta")) e.theta = p.vector(j["theta"], at("theta"));
  if (j.contains("sigma")) e.sigma = p.number(j["sigma"], at("sigma"));
  if (j.contains("clip")) e.clip = p.number(j["clip"], at("clip"));
  if (j.contains("segments")) e.segments = p.count(j["segments"], at("segments"));
  if (j.contains("G")) e.G = p.number(j["G"], at("G"));
  if (!j.contains("d")) {
    if (!e.losses.empty()) e.d = e.losses.front().dim();
    else if (e.theta) e.d = e.theta->dim();
  }
  return e;
}

LearnerConfig parse_learner(const json& j, const Parser& p) {
  const std::vector<std::string> base{"learner"};
  p.only_keys(j, base, {"type", "feedback", "eps_budget", "G", "delta", "omega", "eps_floor", "eta"});
  auto at = [&](const char* k) { return std::vector<std::string>{"learner", k}; };
  LearnerConfig l;
  if (!j.contains("type")) p.fail(base, "missing key 'type'");
  l.kind = p.lookup(kLearnerNames, j["type"], at("type"));
  if (j.contains("feedback")) {
    const auto s = p.string(j["feedback"], at("feedback"));
    if (s == "bandit") l.feedback = FeedbackMode::Bandit;
    else if (s == "full") l.feedback = FeedbackMode::Full;
    else p.fail(at("feedback"), "expected 'bandit' or 'full'");
  }
  if (j.contains("eps_budget")) l.eps_budget = p.number(j["eps_budget"], at("eps_budget"));
  if (j.contains("G")) l.G = p.number(j["G"], at("G"));
  if (j.contains("delta")) l.delta = p.number(j["delta"], at("delta"));
  if (j.contains("omega")) l.omega = p.number(j["omega"], at("omega"));
  if (j.contains("eps_floor")) l.eps_floor = p.number(j["eps_floor"], at("eps_floor"));
  if (j.contains("eta")) l.eta = p.number(j["eta"], at("eta"));
  return l;
}

ComparatorConfig parse_comparator(const json& j, const Parser& p) {
  const std::vector<std::string> base{"comparator"};
  p.only_keys(j, base, {"type", "u", "segments", "norm"});
  auto at = [&](const char* k) { return std::vector<std::string>{"comparator", k}; };
  ComparatorConfig c;
  if (!j.contains("type")) p.fail(base, "missing key 'type'");
  c.kind = p.lookup(kComparatorNames, j["type"], at("type"));
  if (j.contains("u")) c.u = p.vector(j["u"], at("u"));
  if (j.contains("norm")) c.norm = p.number(j["norm"], at("norm"));
  if (j.contains("segments")) {
    if (!j["segments"].is_array()) p.fail(at("segments"), "expected an array");
    for (const auto& s : j["segments"]) {
      p.only_keys(s, at("segments"), {"start", "u"});
      if (!s.contains("start") || !s.contains("u")) p.fail(at("segments"), "each segment needs 'start' and 'u'");
      c.segments.push_back({p.count(s["start"], at("segments")), p.vector(s["u"], at("segments"))});
    }
  }
  return c;
}

json vec_json(const Vector& v) { return json(v.raw()); }

// Validation failures reuse the parser's line lookup when text is at hand.
void validate_with(const ExperimentConfig& c, const Parser* p) {
  auto fail = [&](std::vector<std::string> path, const std::string& msg) {
    if (p) p->fail(path, msg);
    std::string joined;
    for (const auto& k : path) joined += (joined.empty() ? "" : ".") + k;
    throw Error("harness", joined + ": " + msg);
  };
  const auto& e = c.env;
  const auto& l = c.learner;
  const auto& cmp = c.comparator;
  if (c.horizons.empty()) fail({"T_grid"}, "needs at least one horizon");
  for (auto T : c.horizons)
    if (T == 0) fail({"T_grid"}, "horizons must be positive");
  if (c.seed_count == 0) fail({"seeds", "count"}, "must be positive");
  if (e.d == 0) fail({"env", "d"}, "must be positive");
  for (const auto& v : e.losses)
    if (v.dim() != e.d) fail({"env", "losses"}, "every loss needs dimension d");
  if (e.theta && e.theta->dim() != e.d) fail({"env", "theta"}, "needs dimension d");
  if (e.sigma && !(*e.sigma >= 0.0)) fail({"env", "sigma"}, "must be nonnegative");
  if (e.clip && !(*e.clip > 0.0)) fail({"env", "clip"}, "must be positive");
  if (!(e.G > 0.0)) fail({"env", "G"}, "must be positive");
  switch (e.kind) {
    case EnvKind::Fixed:
      if (e.losses.empty()) fail({"env", "losses"}, "required for a fixed environment");
      break;
    case EnvKind::Stochastic:
      if (!e.theta) fail({"env", "theta"}, "required for a stochastic environment");
      break;
    case EnvKind::Hypercube:
    case EnvKind::ClippedHypercube:
      for (auto T : c.horizons)
        if (T < 4 * e.d) fail({"T_grid"}, "hypercube instances need T >= 4d");
      break;
    case EnvKind::PiecewiseHypercube:
      if (e.segments == 0) fail({"env", "segments"}, "must be positive");
      for (auto T : c.horizons)
        if (T < 4 * e.d * e.segments) fail({"T_grid"}, "each segment needs at least 4d rounds");
      break;
    default:
      break;
  }
  if (!(l.eps_budget > 0.0)) fail({"learner", "eps_budget"}, "must be positive");
  if (!(l.G > 0.0)) fail({"learner", "G"}, "must be positive");
  if (l.kind == LearnerKind::HighProbMeta) {
    if (!(l.delta > 0.0 && l.delta <= 0.25)) fail({"learner", "delta"}, "must lie in (0, 1/4]");
    if (l.feedback == FeedbackMode::Full) fail({"learner", "feedback"}, "highprob_meta runs in bandit mode");
  }
  if (l.omega && !(*l.omega > 0.0)) fail({"learner", "omega"}, "must be positive");
  if (l.eps_floor && !(*l.eps_floor > 0.0)) fail({"learner", "eps_floor"}, "must be positive");
  if (l.eta) {
    if (l.kind != LearnerKind::DynamicBase) fail({"learner", "eta"}, "only dynamic_base takes a fixed eta");
    const double G_olo = l.feedback == FeedbackMode::Bandit ? 2.0 * static_cast<double>(e.d) * l.G : l.G;
    if (!(*l.eta > 0.0) || *l.eta * G_olo > 1.0 + 1e-12) fail({"learner", "eta"}, "must lie in (0, 1/G]");
  }
  switch (cmp.kind) {
    case ComparatorKind::Static:
      if (cmp.u.dim() != e.d) fail({"comparator", "u"}, "needs dimension d");
      break;
    case ComparatorKind::Switching:
      if (cmp.segments.empty() || cmp.segments.front().start != 0)
        fail({"comparator", "segments"}, "needs segments starting at round 0");
      for (std::size_t i = 0; i < cmp.segments.size(); ++i) {
        if (cmp.segments[i].u.dim() != e.d) fail({"comparator", "segments"}, "every u needs dimension d");
        if (i > 0 && cmp.segments[i].start <= cmp.segments[i - 1].start)
          fail({"comparator", "segments"}, "starts must be strictly increasing");
      }
      break;
    case ComparatorKind::Aligned:
      if (e.kind != EnvKind::Stochastic && e.kind != EnvKind::Hypercube && e.kind != EnvKind::ClippedHypercube &&
          e.kind != EnvKind::PiecewiseHypercube)
        fail({"comparator", "type"}, "aligned comparators need a stochastic or hypercube environment");
      if (!(cmp.norm >= 0.0)) fail({"comparator", "norm"}, "must be nonnegative");
      break;
    default:
      break;
  }
}

// ---------------------------------------------------------------- trial plumbing

std::unique_ptr<Environment> make_env(const EnvConfig& e, std::size_t T, const RngStream& rng) {
  switch (e.kind) {
    case EnvKind::Zero:
      return zero_env(e.d);
    case EnvKind::Fixed:
      return std::make_unique<FixedSequenceEnv>(e.losses);
    case EnvKind::Stochastic:
      return std::make_unique<StochasticEnv>(*e.theta, e.sigma.value_or(0.0), e.clip, rng.child("noise"));
    case EnvKind::Hypercube:
      return std::move(hypercube_env(e.d, T, rng).env);
    case EnvKind::ClippedHypercube:
      return std::move(clipped_hypercube_env(e.d, T, rng).env);
    case EnvKind::PiecewiseHypercube: {
      const std::size_t seg_len = T / e.segments;
      Vector theta(e.d);
      if (e.theta) {
        theta = *e.theta;
      } else {
        RngStream theta_rng = rng.child("theta");
        theta = draw_hypercube_theta(e.d, hypercube_delta(seg_len), theta_rng);
      }
      const double sigma = e.sigma.value_or(std::sqrt(clipped_sigma_sq(e.d, seg_len)));
      return std::make_unique<PiecewiseHypercubeEnv>(theta, T, e.segments, sigma, e.clip.value_or(1.0),
                                                     rng.child("noise"));
    }
    case EnvKind::AdaptiveSign:
      return std::make_unique<AdaptiveSignEnv>(e.d, e.G);
    case EnvKind::RandomBounded:
      return std::make_unique<RandomBoundedEnv>(e.d, e.G, rng.child("losses"));
  }
  throw Error("harness", "unsupported environment");
}

struct LearnerStack {
  std::unique_ptr<OnlineLearner> learner;
  HighProbMeta* highprob = nullptr;
  double eps_floor = 0.5;
};

LearnerStack make_learner(const ExperimentConfig& cfg, std::size_t T) {
  const auto& l = cfg.learner;
  const std::size_t d = cfg.env.d;
  // With the floored isotropic scaling, estimates satisfy ||l~|| <= 2 d ||l||.
  const double G_olo = l.feedback == FeedbackMode::Bandit ? 2.0 * static_cast<double>(d) * l.G : l.G;
  LearnerStack s;
  s.eps_floor = l.eps_floor.value_or(0.5);
  switch (l.kind) {
    case LearnerKind::DynamicBase:
      s.learner = std::make_unique<DynamicBase>(tuned_base_params(d, l.eps_budget, G_olo, T, l.eta.value_or(1.0 / G_olo)));
      break;
    case LearnerKind::DynamicMeta:
      s.learner = std::make_unique<DynamicMeta>(MetaParams{d, l.eps_budget, G_olo, T});
      break;
    case LearnerKind::HighProbMeta: {
      const double omega = l.omega.value_or(default_omega(l.eps_budget, l.delta));
      const std::size_t grid_size = step_size_grid(1.0, T).size();
      const auto k = highprob_constants(l.G, l.delta, T, d, l.eps_budget, omega, grid_size);
      auto meta = std::make_unique<HighProbMeta>(k, G_olo, T, d);
      s.highprob = meta.get();
      s.learner = std::move(meta);
      s.eps_floor = l.eps_floor.value_or(k.eps_floor);
      break;
    }
  }
  return s;
}

std::vector<Vector> build_comparator(const ExperimentConfig& cfg, std::size_t T, const Environment& env,
                                     const std::vector<Vector>& losses) {
  const auto& c = cfg.comparator;
  const std::size_t d = cfg.env.d;
  std::vector<Vector> u;
  u.reserve(T);
  switch (c.kind) {
    case ComparatorKind::Zero:
      u.assign(T, Vector(d));
      break;
    case ComparatorKind::Static:
      u.assign(T, c.u);
      break;
    case ComparatorKind::Switching: {
      std::size_t seg = 0;
      for (std::size_t t = 0; t < T; ++t) {
        while (seg + 1 < c.segments.size() && c.segments[seg + 1].start <= t) ++seg;
        u.push_back(c.segments[seg].u);
      }
      break;
    }
    case ComparatorKind::Aligned:
      for (std::size_t t = 0; t < T; ++t) {
        auto a = env.aligned_comparator(t);
        if (!a) throw Error("harness", "environment has no aligned comparator");
        u.push_back(c.norm * *a);
      }
      break;
    case ComparatorKind::Fenchel:
      u.assign(T, fenchel_comparator(losses, cfg.learner.eps_budget, cfg.learner.G, T));
      break;
  }
  return u;
}

// ---------------------------------------------------------------- csv helpers

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw Error("harness", "bad number in csv: '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') throw Error("harness", "bad integer in csv: '" + s + "'");
  return v;
}

std::string join_vector(const Vector& v) {
  std::string out;
  for (std::size_t i = 0; i < v.dim(); ++i) out += (i ? ";" : "") + format_double(v[i]);
  return out;
}

}  // namespace

// ---------------------------------------------------------------- config api

ExperimentConfig parse_config(const std::string& text) {
  const Locator loc(text);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error("harness", "line " + std::to_string(loc.line_at(e.byte == 0 ? 0 : e.byte - 1)) +
                               ": invalid JSON: " + e.what());
  }
  const Parser p{loc};
  p.only_keys(j, {}, {"name", "env", "learner", "comparator", "T_grid", "seeds", "output"});
  ExperimentConfig c;
  if (j.contains("name")) c.name = p.string(j["name"], {"name"});
  if (!j.contains("env")) p.fail({"env"}, "missing section");
  if (!j.contains("learner")) p.fail({"learner"}, "missing section");
  c.env = parse_env(j["env"], p);
  c.learner = parse_learner(j["learner"], p);
  if (j.contains("comparator")) c.comparator = parse_comparator(j["comparator"], p);
  if (j.contains("T_grid")) {
    if (!j["T_grid"].is_array()) p.fail({"T_grid"}, "expected an array of horizons");
    c.horizons.clear();
    for (const auto& T : j["T_grid"]) c.horizons.push_back(p.count(T, {"T_grid"}));
  }
  if (j.contains("seeds")) {
    const auto& s = j["seeds"];
    p.only_keys(s, {"seeds"}, {"count", "base"});
    if (s.contains("count")) c.seed_count = p.count(s["count"], {"seeds", "count"});
    if (s.contains("base")) c.base_seed = p.count(s["base"], {"seeds", "base"});
  }
  if (j.contains("output")) c.output = p.string(j["output"], {"output"});
  validate_with(c, &p);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("harness", "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const Error& e) {
    throw Error("harness", path + ": " + std::string(e.what()).substr(std::string("harness: ").size()));
  }
}

void validate(const ExperimentConfig& cfg) { validate_with(cfg, nullptr); }

std::string config_to_json(const ExperimentConfig& c, int indent) {
  json env{{"type", name_of(kEnvNames, c.env.kind)}, {"d", c.env.d}, {"G", c.env.G}, {"segments", c.env.segments}};
  if (!c.env.losses.empty()) {
    json ls = json::array();
    for (const auto& l : c.env.losses) ls.push_back(vec_json(l));
    env["losses"] = ls;
  }
  if (c.env.theta) env["theta"] = vec_json(*c.env.theta);
  if (c.env.sigma) env["sigma"] = *c.env.sigma;
  if (c.env.clip) env["clip"] = *c.env.clip;

  json learner{{"type", name_of(kLearnerNames, c.learner.kind)},
               {"feedback", c.learner.feedback == FeedbackMode::Bandit ? "bandit" : "full"},
               {"eps_budget", c.learner.eps_budget},
               {"G", c.learner.G},
               {"delta", c.learner.delta}};
  if (c.learner.omega) learner["omega"] = *c.learner.omega;
  if (c.learner.eps_floor) learner["eps_floor"] = *c.learner.eps_floor;
  if (c.learner.eta) learner["eta"] = *c.learner.eta;

  json comparator{{"type", name_of(kComparatorNames, c.comparator.kind)}, {"norm", c.comparator.norm}};
  if (!c.comparator.u.empty()) comparator["u"] = vec_json(c.comparator.u);
  if (!c.comparator.segments.empty()) {
    json segs = json::array();
    for (const auto& s : c.comparator.segments) segs.push_back({{"start", s.start}, {"u", vec_json(s.u)}});
    comparator["segments"] = segs;
  }
  json j{{"name", c.name},
         {"env", env},
         {"learner", learner},
         {"comparator", comparator},
         {"T_grid", c.horizons},
         {"seeds", {{"count", c.seed_count}, {"base", c.base_seed}}}};
  if (!c.output.empty()) j["output"] = c.output;
  return j.dump(indent);
}

std::string env_name(EnvKind kind) { return name_of(kEnvNames, kind); }

std::string learner_name(LearnerKind kind, FeedbackMode mode) {
  std::string n = name_of(kLearnerNames, kind);
  return mode == FeedbackMode::Full ? n + "_full" : n;
}

// ---------------------------------------------------------------- trials

std::uint64_t trial_seed(const ExperimentConfig& cfg, std::size_t index) { return cfg.base_seed + index; }

TrialRecord run_trial(const ExperimentConfig& cfg, std::size_t T, std::uint64_t seed, bool keep_rows) {
  validate(cfg);
  if (T == 0) throw Error("harness", "horizon must be positive");
  const RngStream root(seed);
  auto env = make_env(cfg.env, T, root.child("env"));
  auto stack = make_learner(cfg, T);
  RngStream pablo_rng = root.child("pablo");
  const std::size_t d = cfg.env.d;
  const PerturbationConfig pcfg{d, stack.eps_floor, cfg.learner.G};

  std::vector<Vector> losses;
  std::vector<Vector> played;
  losses.reserve(T);
  played.reserve(T);
  TrialRecord rec;
  TrialSummary& s = rec.summary;

  for (std::size_t t = 0; t < T; ++t) {
    TrialRow row;
    row.t = t + 1;
    if (cfg.learner.feedback == FeedbackMode::Bandit) {
      Vector loss;
      const FeedbackFn feedback = [&](const Vector& x) {
        loss = env->loss(t, x);
        return dot(loss, x);
      };
      RoundRecord r = pablo_round(*stack.learner, feedback, pcfg, pablo_rng);
      row.w = std::move(r.w);
      row.played = std::move(r.played);
      row.draw = r.draw;
      row.observed = r.observed;
      row.estimate = std::move(r.estimate);
      row.loss = std::move(loss);
    } else {
      row.w = stack.learner->predict();
      row.played = row.w;
      row.loss = env->loss(t, row.played);
      row.observed = dot(row.loss, row.played);
      row.estimate = row.loss;
      stack.learner->update(row.loss);
    }
    s.max_iterate_norm = std::max(s.max_iterate_norm, row.w.norm());
    losses.push_back(row.loss);
    played.push_back(row.played);
    if (keep_rows) rec.rows.push_back(std::move(row));
  }

  const ComparatorSequence u(build_comparator(cfg, T, *env, losses));
  double learner_loss = 0.0;
  double dyn_loss = 0.0;
  double static_loss = 0.0;
  const Vector& u_last = u.back();
  for (std::size_t t = 0; t < T; ++t) {
    learner_loss += dot(losses[t], played[t]);
    dyn_loss += dot(losses[t], u[t]);
    static_loss += dot(losses[t], u_last);
    s.sum_l2u += losses[t].squared_norm() * u[t].norm();
  }
  if (keep_rows)
    for (std::size_t t = 0; t < T; ++t) rec.rows[t].u = u[t];

  const auto m = linearithmic_metrics(u, cfg.learner.eps_budget, T);
  s.env = env_name(cfg.env.kind);
  s.learner = learner_name(cfg.learner.kind, cfg.learner.feedback);
  s.d = d;
  s.T = T;
  s.seed = seed;
  s.regret_dynamic = learner_loss - dyn_loss;
  s.regret_static = learner_loss - static_loss;
  s.P_T = path_length(u);
  s.S_T = switch_count(u);
  s.Phi_T = m.phi_T;
  s.P_T_Phi = m.path_phi;
  s.max_u = max_norm(u);
  s.clip_count = env->clip_count();
  if (stack.highprob) {
    s.max_penalty_gradient = stack.highprob->max_penalty_gradient_norm();
    s.penalty_bound_H = stack.highprob->H();
    s.max_fixed_point_residual = stack.highprob->max_fixed_point_residual();
  }
  return rec;
}

std::size_t default_thread_count() {
  if (const char* env = std::getenv("PABLO_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t k = 0; k < threads; ++k) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<TrialSummary> run_all(const ExperimentConfig& cfg, std::size_t threads) {
  validate(cfg);
  const std::size_t per = cfg.seed_count;
  std::vector<TrialSummary> out(cfg.horizons.size() * per);
  parallel_for(out.size(), threads, [&](std::size_t i) {
    out[i] = run_trial(cfg, cfg.horizons[i / per], trial_seed(cfg, i % per)).summary;
  });
  return out;
}

// ---------------------------------------------------------------- statistics

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw Error("harness", "quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw Error("harness", "quantile level must lie in [0, 1]");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<HorizonAggregate> aggregate(const std::vector<TrialSummary>& trials) {
  std::map<std::size_t, std::vector<double>> by_T;
  for (const auto& t : trials) by_T[t.T].push_back(t.regret_dynamic);
  std::vector<HorizonAggregate> out;
  for (const auto& [T, xs] : by_T) {
    HorizonAggregate a;
    a.T = T;
    a.n = xs.size();
    a.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(a.n);
    double ss = 0.0;
    for (double x : xs) ss += (x - a.mean) * (x - a.mean);
    a.std = a.n > 1 ? std::sqrt(ss / static_cast<double>(a.n - 1)) : 0.0;
    a.stderr_ = a.std / std::sqrt(static_cast<double>(a.n));
    a.q50 = quantile(xs, 0.5);
    a.q90 = quantile(xs, 0.9);
    a.q95 = quantile(xs, 0.95);
    out.push_back(a);
  }
  return out;
}

ScalingFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
  ScalingFit f;
  if (xs.size() != ys.size()) throw Error("harness", "fit inputs differ in length");
  if (xs.size() < 4) {
    f.reason = "fewer than 4 points";
    return f;
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
      f.reason = "non-positive value";
      return f;
    }
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) {
    f.reason = "constant abscissa";
    return f;
  }
  f.degenerate = false;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

SweepResult sweep(const ExperimentConfig& cfg, std::size_t threads) {
  SweepResult r;
  r.trials = run_all(cfg, threads);
  r.aggregates = aggregate(r.trials);
  std::vector<double> xs, ys;
  for (const auto& a : r.aggregates) {
    xs.push_back(static_cast<double>(a.T));
    ys.push_back(a.mean);
  }
  r.fit = fit_loglog(xs, ys);
  return r;
}

// ---------------------------------------------------------------- certificates

CertificateReport certify(const ExperimentConfig& cfg, std::size_t threads) {
  validate(cfg);
  if (cfg.learner.feedback != FeedbackMode::Full) throw Error("harness", "certify needs full-information mode");
  if (cfg.learner.kind == LearnerKind::HighProbMeta) throw Error("harness", "certify covers dynamic_base and dynamic_meta");

  const std::size_t per = cfg.seed_count;
  const std::size_t n = cfg.horizons.size() * per;
  std::vector<std::vector<CertificateViolation>> found(n);

  parallel_for(n, threads, [&](std::size_t i) {
    const std::size_t T = cfg.horizons[i / per];
    const std::uint64_t seed = trial_seed(cfg, i % per);
    const auto rec = run_trial(cfg, T, seed, true);
    std::vector<Vector> grads;
    std::vector<Vector> iterates;
    std::vector<Vector> us;
    for (const auto& row : rec.rows) {
      grads.push_back(row.loss);
      iterates.push_back(row.w);
      us.push_back(row.u);
    }
    const ComparatorSequence u(us);
    auto report = [&](std::size_t round, double regret, double bound) {
      if (regret > bound + 1e-9 * std::max(1.0, std::fabs(bound)))
        found[i].push_back({seed, round, regret, bound});
    };

    if (cfg.learner.kind == LearnerKind::DynamicBase) {
      const double G = cfg.learner.G;
      const auto p = tuned_base_params(cfg.env.d, cfg.learner.eps_budget, G, T, cfg.learner.eta.value_or(1.0 / G));
      // Untuned form at every prefix, assembled incrementally.
      const double lambda = p.k / (p.eta * p.alpha * p.gamma);
      double regret = 0.0, variance = 0.0, drift = 0.0, grad_sq = 0.0, path_phi = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        const double r = u[t].norm();
        const double g_sq = grads[t].squared_norm();
        regret += dot(grads[t], iterates[t]) - dot(grads[t], u[t]);
        variance += g_sq * r;
        drift += r;
        grad_sq += g_sq;
        if (t > 0) path_phi += phi_weight(distance(u[t], u[t - 1]), lambda);
        const double bound = p.k * (phi_weight(r, 1.0 / p.alpha) + path_phi) / p.eta + 0.5 * p.eta * variance +
                             p.gamma * drift + p.eta * p.alpha * grad_sq;
        report(t + 1, regret, bound);
      }
      if (p.eta >= 1.0 / (G * static_cast<double>(T)))
        report(T, linear_regret(grads, iterates, u), base_regret_bound(u, grads, p));
    } else {
      const std::size_t grid = step_size_grid(cfg.learner.G, T).size();
      report(T, linear_regret(grads, iterates, u), meta_regret_bound(u, grads, cfg.learner.eps_budget, cfg.learner.G, grid));
    }
  });

  CertificateReport out;
  out.trials = n;
  for (auto& v : found) out.violations.insert(out.violations.end(), v.begin(), v.end());
  return out;
}

// ---------------------------------------------------------------- output

const char* const kTrialCsvHeader =
    "env,learner,d,T,seed,regret_static,regret_dynamic,P_T,S_T,Phi_T,P_T_Phi,max_u,sum_l2u";

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trials_csv(std::ostream& os, const std::vector<TrialSummary>& trials) {
  os << kTrialCsvHeader << '\n';
  for (const auto& t : trials) {
    os << t.env << ',' << t.learner << ',' << t.d << ',' << t.T << ',' << t.seed << ',' << format_double(t.regret_static)
       << ',' << format_double(t.regret_dynamic) << ',' << format_double(t.P_T) << ',' << t.S_T << ','
       << format_double(t.Phi_T) << ',' << format_double(t.P_T_Phi) << ',' << format_double(t.max_u) << ','
       << format_double(t.sum_l2u) << '\n';
  }
}

std::vector<TrialSummary> read_trials_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kTrialCsvHeader) throw Error("harness", "unexpected csv header");
  std::vector<TrialSummary> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 13) throw Error("harness", "csv row has " + std::to_string(f.size()) + " fields");
    TrialSummary t;
    t.env = f[0];
    t.learner = f[1];
    t.d = parse_u64(f[2]);
    t.T = parse_u64(f[3]);
    t.seed = parse_u64(f[4]);
    t.regret_static = parse_double(f[5]);
    t.regret_dynamic = parse_double(f[6]);
    t.P_T = parse_double(f[7]);
    t.S_T = parse_u64(f[8]);
    t.Phi_T = parse_double(f[9]);
    t.P_T_Phi = parse_double(f[10]);
    t.max_u = parse_double(f[11]);
    t.sum_l2u = parse_double(f[12]);
    out.push_back(t);
  }
  return out;
}

void write_rounds_csv(std::ostream& os, const TrialRecord& rec) {
  os << "t,w,played,axis,sign,lambda,observed,estimate,loss,u\n";
  for (const auto& r : rec.rows) {
    os << r.t << ',' << join_vector(r.w) << ',' << join_vector(r.played) << ',';
    if (r.draw)
      os << r.draw->axis << ',' << format_double(r.draw->sign) << ',' << format_double(r.draw->lambda);
    else
      os << ",,";
    os << ',' << format_double(r.observed) << ',' << join_vector(r.estimate) << ',' << join_vector(r.loss) << ','
       << join_vector(r.u) << '\n';
  }
}

void write_aggregate_csv(std::ostream& os, const std::vector<HorizonAggregate>& aggs) {
  os << "T,n,mean,std,stderr,q50,q90,q95\n";
  for (const auto& a : aggs)
    os << a.T << ',' << a.n << ',' << format_double(a.mean) << ',' << format_double(a.std) << ','
       << format_double(a.stderr_) << ',' << format_double(a.q50) << ',' << format_double(a.q90) << ','
       << format_double(a.q95) << '\n';
}

std::string sidecar_json(const ExperimentConfig& cfg, const std::string& command, const ScalingFit* fit) {
  json j{{"version", kVersion}, {"command", command}, {"config", json::parse(config_to_json(cfg))}};
  if (fit) {
    j["fit"] = fit->degenerate ? json{{"degenerate", true}, {"reason", fit->reason}}
                               : json{{"degenerate", false},
                                      {"slope", fit->slope},
                                      {"intercept", fit->intercept},
                                      {"r2", fit->r2}};
  }
  return j.dump(2) + "\n";
}

}  // namespace pablo
