// polsyn command-line front end.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_set>

#include "CLI11.hpp"
#include "envs.hpp"
#include "polsyn/pctl.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace polsyn;
using namespace polsyn::app;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string subcommand;
  std::vector<std::string> argv;

  std::string env = "frozen-lake";
  std::vector<std::string> layouts;
  std::uint64_t layout_seed = 0;
  int lake_width = 10, lake_height = 10;
  double wall_probability = 0.1, hole_probability = 0.1;

  std::uint64_t seed = 0;
  std::string out;
  std::string manifest;

  // policies
  std::string policy = "uniform";
  std::optional<std::size_t> horizon;
  std::size_t n = 100;
  double delta = 0.05;
  bool random_start = false;

  // mcts + advice
  std::optional<std::size_t> mcts_horizon, iterations, rollouts;
  std::optional<double> exploration;
  std::string advice = "none";
  std::string advice_scope = "root";
  double threshold = 0.9;
  std::size_t safety_horizon = 8;
  std::string weights;
  bool simulation_advice = false;
  std::string mode = "argmax";

  // play
  std::string trace;
  bool no_latency = false;

  // check / eta
  std::string formula;
  std::optional<std::size_t> vi_horizon;
  std::size_t max_states = 5'000'000;
  std::optional<std::size_t> max_depth;
  bool safety_model = false;
  std::string state;
  std::size_t eta_horizon = 8;

  // layout-gen
  std::size_t count = 1;

  // mcts-bench
  std::size_t games = 10;
  std::size_t bench_states = 200;

  // dagger
  std::string initial;
  std::size_t initial_size = 1000;
  std::string trainer;
  std::string train_config;
  std::string metric = "linf";
  double epsilon = 0.2;
  std::size_t paths = 50;
  std::size_t dagger_iterations = 5;
  std::size_t eval_episodes = 200;
  std::optional<std::size_t> eval_horizon;
  double plateau_points = 1.0;
  std::size_t plateau_patience = 2;
  std::string work_dir = "dagger-work";
  bool baseline = false;

  json to_json() const {
    json j = {{"env", env}, {"layouts", layouts}, {"seed", seed}};
    if (layouts.empty() && env == "frozen-lake")
      j["generated_layout"] = {{"seed", layout_seed}, {"width", lake_width}, {"height", lake_height},
                               {"wall_probability", wall_probability}, {"hole_probability", hole_probability}};
    return j;
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path() && !p.parent_path().empty()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

json manifest_of(const Options& o, const json& config) {
  return {{"format", "polsyn-manifest"},
          {"version", 1},
          {"tool", "polsyn"},
          {"tool_version", POLSYN_VERSION},
          {"subcommand", o.subcommand},
          {"argv", o.argv},
          {"seed", o.seed},
          {"config", config}};
}

/// Result to --out (manifest beside it) or, with the manifest embedded, to stdout.
void emit(const Options& o, const json& result, const json& config, const std::string& summary) {
  json doc = result;
  if (!doc.contains("seed")) doc["seed"] = o.seed;
  if (o.out.empty()) {
    doc["manifest"] = manifest_of(o, config);
    std::cout << doc.dump(2) << "\n";
  } else {
    write_file(o.out, doc.dump(2) + "\n");
    std::cout << summary << "\n";
  }
  std::string mpath = o.manifest;
  if (mpath.empty() && !o.out.empty()) mpath = o.out + ".manifest.json";
  if (!mpath.empty()) write_file(mpath, manifest_of(o, config).dump(2) + "\n");
}

json parse_json_arg(const std::string& text) {
  if (fs::exists(text)) return json::parse(read_file(text));
  return json::parse(text);
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(prec);
  ss << v;
  return ss.str();
}

// -- environments --------------------------------------------------------------------

std::vector<FrozenLakeLayout> lake_layouts(const Options& o) {
  std::vector<FrozenLakeLayout> ls;
  for (const auto& p : o.layouts) ls.push_back(FrozenLakeLayout::load(p));
  if (ls.empty()) {
    Rng rng(o.layout_seed);
    FrozenLakeGenOptions g;
    g.wall_probability = o.wall_probability;
    g.hole_probability = o.hole_probability;
    ls.push_back(gen_frozen_lake(o.lake_width, o.lake_height, rng, g));
  }
  return ls;
}

PacmanLayout pacman_layout(const Options& o) {
  if (o.layouts.size() > 1) throw UsageError("pacman takes a single --layout");
  return o.layouts.empty() ? PacmanLayout::parse(kMiniPacman) : PacmanLayout::load(o.layouts[0]);
}

template <class Fn>
int with_env(const Options& o, Fn&& fn) {
  if (o.env == "frozen-lake") {
    LakeEnv e(lake_layouts(o));
    return fn(e);
  }
  if (o.env == "pacman") {
    PacmanEnv e(pacman_layout(o));
    return fn(e);
  }
  throw UsageError("unknown --env " + o.env + " (frozen-lake, pacman)");
}

template <class E>
MctsConfig mcts_config(const E& env, const Options& o) {
  MctsConfig c = env.default_mcts();
  if (o.mcts_horizon) c.horizon = *o.mcts_horizon;
  if (o.iterations) c.iterations = *o.iterations;
  if (o.rollouts) c.rollouts = *o.rollouts;
  c.exploration = o.exploration;
  c.simulation_advice = o.simulation_advice;
  c.advice_scope = o.advice == "none" ? AdviceScope::none : parse_advice_scope(o.advice_scope);
  c.seed = o.seed;
  c.validate();
  return c;
}

std::shared_ptr<const nn::Network> load_weights(const Options& o) {
  if (o.weights.empty()) throw UsageError("--weights is required");
  return std::make_shared<const nn::Network>(nn::Network::load(o.weights));
}

ExtractMode parse_mode(const std::string& s) {
  if (s == "argmax") return ExtractMode::argmax;
  if (s == "threshold" || s == "threshold-random") return ExtractMode::threshold_random;
  throw UsageError("unknown --mode " + s + " (argmax, threshold)");
}

/// Advice and policy objects of one run; the policy may point into the advice.
template <class E>
struct Agent {
  using S = typename E::S;
  std::optional<Advice<S>> advice;
  std::shared_ptr<const nn::Network> net;
  std::optional<Policy<S>> policy;
  MctsConfig mcts;
  json config;
};

template <class E>
std::optional<Advice<typename E::S>> make_advice(const E& env, const Options& o,
                                                  std::shared_ptr<const nn::Network>& net) {
  if (o.advice == "none") return std::nullopt;
  if (o.advice == "exact") return env.exact_advice(o.safety_horizon, o.threshold);
  if (o.advice == "neural") {
    if (!net) net = load_weights(o);
    return neural_advice(env.model(), net, env.encoder(), o.threshold);
  }
  throw UsageError("unknown --advice " + o.advice + " (none, exact, neural)");
}

template <class E>
void build_agent(const E& env, const Options& o, Agent<E>& ag) {
  ag.config = {{"policy", o.policy}};
  if (o.policy == "uniform") {
    ag.policy = uniform_policy(env.model());
  } else if (o.policy == "exact") {
    ag.policy = env.exact_policy();
    if (!ag.policy) throw UsageError("--policy exact is only available for frozen-lake");
  } else if (o.policy == "neural") {
    ag.net = load_weights(o);
    ag.policy = extract_policy(env.model(), ag.net, env.encoder(), parse_mode(o.mode), o.threshold);
    ag.config["weights"] = o.weights;
    ag.config["mode"] = o.mode;
    ag.config["threshold"] = o.threshold;
  } else if (o.policy == "mcts") {
    ag.mcts = mcts_config(env, o);
    ag.advice = make_advice(env, o, ag.net);
    ag.policy = mcts_policy(env.model(), ag.mcts, ag.advice ? &*ag.advice : nullptr);
    ag.config["mcts"] = ag.mcts.to_json();
    ag.config["advice"] = {{"kind", o.advice}, {"threshold", o.threshold}, {"safety_horizon", o.safety_horizon},
                           {"weights", o.weights}};
  } else {
    throw UsageError("unknown --policy " + o.policy + " (exact, mcts, neural, uniform)");
  }
}

// -- subcommands -----------------------------------------------------------------------

int cmd_layout_gen(const Options& o) {
  if (o.env != "frozen-lake") throw UsageError("layout-gen only generates frozen-lake layouts");
  if (o.count < 1) throw UsageError("--count must be at least 1");
  Rng rng(o.seed);
  FrozenLakeGenOptions g;
  g.wall_probability = o.wall_probability;
  g.hole_probability = o.hole_probability;
  json files = json::array();
  std::vector<FrozenLakeLayout> made;
  for (std::size_t i = 0; i < o.count; ++i) made.push_back(gen_frozen_lake(o.lake_width, o.lake_height, rng, g));
  const json config = {{"width", o.lake_width}, {"height", o.lake_height}, {"count", o.count},
                       {"wall_probability", o.wall_probability}, {"hole_probability", o.hole_probability},
                       {"seed", o.seed}};
  if (o.out.empty()) {
    json arr = json::array();
    for (const auto& l : made) arr.push_back(json::parse(l.dump()));
    std::cout << json({{"layouts", arr}, {"manifest", manifest_of(o, config)}}).dump(2) << "\n";
    return 0;
  }
  if (o.count == 1) {
    made[0].save(o.out);
    files.push_back(o.out);
  } else {
    fs::create_directories(o.out);
    for (std::size_t i = 0; i < made.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "layout-%03zu.json", i);
      const std::string p = (fs::path(o.out) / name).string();
      made[i].save(p);
      files.push_back(p);
    }
  }
  const std::string mpath = o.manifest.empty() ? (o.count == 1 ? o.out : (fs::path(o.out) / "layouts").string()) +
                                                     ".manifest.json"
                                               : o.manifest;
  json cfg = config;
  cfg["files"] = files;
  write_file(mpath, manifest_of(o, cfg).dump(2) + "\n");
  std::cout << "wrote " << files.size() << " layout(s)\n";
  return 0;
}

std::optional<std::vector<double>> top_probability(const Mdp& mdp, const pctl::StateFormula& f) {
  const auto* p = std::get_if<pctl::ProbIn>(&f.node);
  if (!p) return std::nullopt;
  Optimum opt = p->quantifier == pctl::Quantifier::min ? Optimum::min : Optimum::max;
  if (!p->complement) return mdp_prob_all(mdp, *p->path, opt).values;
  opt = opt == Optimum::max ? Optimum::min : Optimum::max;
  auto v = mdp_prob_all(mdp, *p->path, opt).values;
  for (auto& x : v) x = 1.0 - x;
  return v;
}

template <Model M, class ToJson>
json check_model(const M& m, const std::vector<typename M::State>& roots,
                 const std::vector<typename M::State>& queries, const Options& o, ToJson&& to_json) {
  const std::size_t depth = o.max_depth ? *o.max_depth : static_cast<std::size_t>(-1);
  auto ex = explore(m, roots, o.max_states, depth);
  bool truncated = false;
  if (o.max_depth)
    for (StateId i = 0; i < ex.states.size(); ++i)
      if (ex.depth[i] >= *o.max_depth && !m.is_absorbing(ex.states[i])) truncated = true;
  json res = {{"states", ex.states.size()}, {"truncated", truncated}};
  json rows = json::array();
  std::vector<bool> sat;
  std::optional<std::vector<double>> prob;
  pctl::StatePtr f;
  if (!o.formula.empty()) {
    f = pctl::parse_state(o.formula);
    res["formula"] = pctl::to_string(*f);
    sat = pctl_sat_all(ex.mdp, *f);
    prob = top_probability(ex.mdp, *f);
  }
  std::optional<HorizonValues> vi;
  if (o.vi_horizon) {
    vi = value_iteration_total(ex.mdp, *o.vi_horizon);
    res["horizon"] = *o.vi_horizon;
  }
  for (const auto& q : queries) {
    const auto id = ex.find(q);
    if (!id) throw std::runtime_error("query state was not explored");
    json r = {{"state", to_json(q)}};
    if (f) {
      r["satisfied"] = static_cast<bool>(sat[*id]);
      r["probability"] = prob ? json((*prob)[*id]) : json(nullptr);
    }
    if (vi) {
      r["value"] = vi->value[*id];
      r["action"] = vi->policy.empty() ? json(nullptr) : json(vi->policy[*id]);
    }
    rows.push_back(r);
  }
  res["results"] = rows;
  return res;
}

int cmd_check(const Options& o) {
  if (o.formula.empty() && !o.vi_horizon) throw UsageError("check needs --formula and/or --horizon");
  return with_env(o, [&](auto& env) {
    using E = std::decay_t<decltype(env)>;
    json res;
    if constexpr (std::is_same_v<E, PacmanEnv>) {
      if (o.safety_model) {
        std::vector<SafetyState> roots;
        for (const auto& s : env.check_roots()) roots.push_back(PacmanSafety::project(s));
        res = check_model(env.safety(), roots, roots, o, [](const SafetyState& s) {
          json g = json::array();
          for (const auto& x : s.ghosts) g.push_back({x.cell, x.heading});
          return json{{"pacman", s.pacman}, {"ghosts", g}, {"lost", s.lost}};
        });
        res["model"] = "pacman-safety";
      } else {
        Options capped = o;
        if (!capped.max_depth) capped.max_depth = 50;
        res = check_model(env.model(), env.check_roots(), env.initial_states(), capped,
                          [&](const PacmanState& s) { return env.state_json(s); });
        res["model"] = "pacman";
        res["max_depth"] = *capped.max_depth;
      }
    } else {
      res = check_model(env.model(), env.check_roots(), env.initial_states(), o,
                        [&](const LakeState& s) { return env.state_json(s); });
      res["model"] = "frozen-lake";
    }
    json cfg = o.to_json();
    cfg["formula"] = o.formula;
    cfg["horizon"] = o.vi_horizon ? json(*o.vi_horizon) : json(nullptr);
    std::string summary;
    for (const auto& r : res["results"]) {
      if (r.contains("satisfied"))
        summary += "satisfied=" + std::string(r["satisfied"].get<bool>() ? "true" : "false") +
                   (r["probability"].is_null() ? "" : " probability=" + fmt(r["probability"].get<double>(), 6)) + " ";
      if (r.contains("value")) summary += "value=" + fmt(r["value"].get<double>(), 6) + " ";
    }
    emit(o, res, cfg, summary);
    return 0;
  });
}

int cmd_eta(const Options& o) {
  if (o.eta_horizon < 1) throw UsageError("--horizon must be at least 1");
  return with_env(o, [&](auto& env) {
    Rng rng(o.seed);
    const auto s = o.state.empty() ? env.init(0, rng) : env.parse_state(parse_json_arg(o.state));
    const auto r = env.eta_at(s, o.eta_horizon);
    json names = json::array();
    for (Action a = 0; a < env.model().num_actions(); ++a) names.push_back(action_name(a));
    json res = {{"state", env.state_json(s)},
                {"horizon", o.eta_horizon},
                {"legal", action_list(r.eta.actions)},
                {"action_names", names},
                {"eta", r.eta.values},
                {"max", r.eta.actions.empty() ? 0.0 : r.eta.max()},
                {"allowed", action_list(threshold_filter(r.eta.actions, r.eta.values, o.threshold))},
                {"threshold", o.threshold},
                {"visited", r.visited}};
    json cfg = o.to_json();
    cfg["state"] = env.state_json(s);
    cfg["horizon"] = o.eta_horizon;
    cfg["threshold"] = o.threshold;
    std::string summary = "eta_" + std::to_string(o.eta_horizon) + " =";
    for (double v : r.eta.values) summary += " " + fmt(v, 6);
    emit(o, res, cfg, summary);
    return 0;
  });
}

std::string outcome_name(Outcome x) {
  switch (x) {
    case Outcome::win: return "win";
    case Outcome::loss: return "loss";
    case Outcome::none: break;
  }
  return "none";
}

int cmd_play(const Options& o) {
  return with_env(o, [&](auto& env) {
    using E = std::decay_t<decltype(env)>;
    using S = typename E::S;
    const auto& m = env.model();
    Agent<E> ag;
    build_agent(env, o, ag);
    const std::size_t h = o.horizon ? *o.horizon : env.default_horizon();
    Rng rng = Rng::stream(o.seed, 0);
    S s = o.random_start ? env.random_state(0, rng) : env.init(0, rng);
    std::ofstream trace;
    if (!o.trace.empty()) {
      const fs::path tp(o.trace);
      if (tp.has_parent_path()) fs::create_directories(tp.parent_path());
      trace.open(o.trace, std::ios::trunc);
      if (!trace) throw std::runtime_error("cannot write " + o.trace);
    }
    double total = 0.0;
    std::size_t steps = 0, fallbacks = 0, prunes = 0;
    const S start = s;
    for (; steps < h && !m.is_absorbing(s); ++steps) {
      json line = {{"step", steps}, {"state", env.state_json(s)}, {"legal", action_list(m.actions(s))}};
      const auto t0 = std::chrono::steady_clock::now();
      const double adv0 = ag.advice ? ag.advice->latency().total_seconds() : 0.0;
      const std::size_t advn0 = ag.advice ? ag.advice->latency().count() : 0;
      Action a;
      if (o.policy == "mcts") {
        const auto res = mcts_decide(m, s, ag.mcts, ag.advice ? &*ag.advice : nullptr, rng);
        a = res.action;
        line["q"] = res.q_json();
        line["visits"] = res.visits;
        line["allowed"] = action_list(res.allowed);
        line["fallback"] = res.root_fallback;
        line["prune_fallback_nodes"] = res.fallback_nodes;
        line["floored_nodes"] = res.floored_nodes;
        line["tree_size"] = res.tree_size;
        fallbacks += res.root_fallback ? 1 : 0;
        prunes += res.fallback_nodes;
      } else {
        a = ag.policy->act(s, rng);
        if (o.policy == "neural") {
          const auto out = network_scores(*ag.net, env.encoder(), s, m.num_actions());
          line["q"] = std::vector<double>(out.begin(), out.end());
          line["allowed"] = action_list(neural_filter(m.actions(s), out, o.threshold));
        } else if (auto q = env.exact_q(s); q && o.policy == "exact") {
          line["q"] = *q;
        }
        line["fallback"] = false;
      }
      const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      auto [next, r] = sample_step(m, s, a, rng);
      line["action"] = a;
      line["action_name"] = action_name(a);
      line["reward"] = r;
      if (!o.no_latency) {
        line["latency_ms"] = dt * 1e3;
        if (ag.advice) {
          const std::size_t calls = ag.advice->latency().count() - advn0;
          line["advice_calls"] = calls;
          line["advice_ms"] = (ag.advice->latency().total_seconds() - adv0) * 1e3;
        }
      }
      if (trace.is_open()) trace << line.dump() << "\n";
      total += r;
      s = std::move(next);
    }
    total += m.terminal_reward(s);
    json res = {{"policy", o.policy},
                {"seed", o.seed},
                {"horizon", h},
                {"start", env.state_json(start)},
                {"final_state", env.state_json(s)},
                {"steps", steps},
                {"reward", total},
                {"outcome", outcome_name(m.outcome(s))},
                {"root_fallbacks", fallbacks},
                {"prune_fallback_nodes", prunes}};
    if (ag.advice && !o.no_latency) {
      res["advice_latency"] = {{"calls", ag.advice->latency().count()},
                               {"median_ms", ag.advice->latency().median_seconds() * 1e3}};
    }
    json cfg = o.to_json();
    cfg["agent"] = ag.config;
    cfg["horizon"] = h;
    cfg["random_start"] = o.random_start;
    emit(o, res, cfg, "outcome=" + outcome_name(m.outcome(s)) + " reward=" + fmt(total, 2) +
                          " steps=" + std::to_string(steps));
    return 0;
  });
}

int cmd_evaluate(const Options& o) {
  return with_env(o, [&](auto& env) {
    using E = std::decay_t<decltype(env)>;
    using S = typename E::S;
    Agent<E> ag;
    build_agent(env, o, ag);
    const std::size_t h = o.horizon ? *o.horizon : env.default_horizon();
    std::function<S(std::size_t, Rng&)> init = [&](std::size_t i, Rng& rng) {
      return o.random_start ? env.random_state(i, rng) : env.init(i, rng);
    };
    const auto rep = evaluate<typename E::M>(env.model(), *ag.policy, init, h, o.n, o.seed, o.delta);
    json cfg = o.to_json();
    cfg["agent"] = ag.config;
    cfg["n"] = o.n;
    cfg["horizon"] = h;
    cfg["delta"] = o.delta;
    cfg["random_start"] = o.random_start;
    emit(o, rep.to_json(), cfg,
         "win rate " + fmt(rep.win_rate()) + " +- " + fmt(rep.win_epsilon) + ", mean reward " +
             fmt(rep.mean_reward) + " +- " + fmt(rep.epsilon) + " (n=" + std::to_string(rep.n) + ")");
    return 0;
  });
}

json latency_json(const LatencyRecorder& l) {
  return {{"calls", l.count()},
          {"median_ms", l.median_seconds() * 1e3},
          {"mean_ms", l.count() ? l.total_seconds() / static_cast<double>(l.count()) * 1e3 : 0.0}};
}

int cmd_mcts_bench(const Options& o) {
  return with_env(o, [&](auto& env) {
    using E = std::decay_t<decltype(env)>;
    using S = typename E::S;
    const auto& m = env.model();
    Options play = o;
    play.policy = "mcts";
    if (play.advice == "none") play.advice = "exact";
    Agent<E> ag;
    build_agent(env, play, ag);
    const std::size_t h = o.horizon ? *o.horizon : env.default_horizon();
    // decision states of seeded games
    std::vector<S> states;
    std::unordered_set<std::string> seen;
    for (std::size_t g = 0; g < o.games && states.size() < o.bench_states; ++g) {
      Rng rng = Rng::stream(o.seed, g);
      S s = env.init(g, rng);
      for (std::size_t k = 0; k < h && !m.is_absorbing(s) && states.size() < o.bench_states; ++k) {
        if (seen.insert(env.key(s)).second) states.push_back(s);
        const Action a = ag.policy->act(s, rng);
        s = sample_step(m, s, a, rng).first;
      }
    }
    json res = {{"states", states.size()}, {"games", o.games}, {"search_advice", latency_json(ag.advice->latency())}};
    auto exact = env.exact_advice(o.safety_horizon, o.threshold);
    for (const auto& s : states) exact.allowed(s);
    res["exact"] = latency_json(exact.latency());
    res["exact"]["safety_horizon"] = o.safety_horizon;
    std::string summary = "exact median " + fmt(exact.latency().median_seconds() * 1e3, 4) + " ms";
    if (!o.weights.empty()) {
      auto net = load_weights(o);
      auto neural = neural_advice(m, net, env.encoder(), o.threshold);
      for (const auto& s : states) neural.allowed(s);
      res["neural"] = latency_json(neural.latency());
      const double ratio = exact.latency().median_seconds() / neural.latency().median_seconds();
      res["ratio"] = ratio;
      summary += ", neural median " + fmt(neural.latency().median_seconds() * 1e3, 4) + " ms, ratio " + fmt(ratio, 1);
    }
    json cfg = o.to_json();
    cfg["agent"] = ag.config;
    cfg["games"] = o.games;
    cfg["max_states"] = o.bench_states;
    cfg["horizon"] = h;
    emit(o, res, cfg, summary);
    return 0;
  });
}

template <class E>
Dataset random_dataset(const E& env, std::size_t n, std::uint64_t seed, std::size_t safety_horizon) {
  using S = typename E::S;
  Dataset ds;
  const auto enc = env.encoder();
  const auto codec = env.codec();
  ExpertScorer<S> expert = [&](const S& s) { return std::optional(env.expert_scores(s, safety_horizon)); };
  Rng rng = Rng::stream(seed, 0x5eed);
  for (std::size_t tries = 0; ds.size() < n && tries < 50 * n; ++tries) {
    const S s = env.random_state(tries, rng);
    if (env.model().is_absorbing(s)) continue;
    const std::string key = codec.key(s);
    if (ds.contains(key)) continue;
    auto rec = make_record(s, expert, enc, codec, 0);
    if (rec) ds.add(key, std::move(*rec));
  }
  return ds;
}

template <class E>
std::function<std::string(const DatasetRecord&)> record_key(const E& env) {
  return [&env](const DatasetRecord& r) { return env.key(env.parse_state(r.state)); };
}

int cmd_dataset_init(const Options& o) {
  if (o.out.empty()) throw UsageError("dataset-init needs --out");
  return with_env(o, [&](auto& env) {
    const Dataset ds = random_dataset(env, o.n, o.seed, o.safety_horizon);
    ds.save(o.out);
    json cfg = o.to_json();
    cfg["n"] = o.n;
    cfg["safety_horizon"] = o.safety_horizon;
    std::string mpath = o.manifest.empty() ? o.out + ".manifest.json" : o.manifest;
    write_file(mpath, manifest_of(o, cfg).dump(2) + "\n");
    std::cout << "wrote " << ds.size() << " records to " << o.out << "\n";
    return 0;
  });
}

json iteration_json(const DaggerIteration& it) {
  return {{"iteration", it.iteration},       {"visited", it.visited},
          {"already_known", it.already_known}, {"skipped", it.skipped},
          {"appended", it.appended},         {"dataset_size", it.dataset_size},
          {"win_rate", it.report.win_rate()}, {"win_epsilon", it.report.win_epsilon},
          {"mean_reward", it.report.mean_reward}};
}

int cmd_dagger(const Options& o) {
  if (o.trainer.empty()) throw UsageError("dagger needs --trainer \"<command with {dataset} {config} {out}>\"");
  return with_env(o, [&](auto& env) {
    using E = std::decay_t<decltype(env)>;
    using S = typename E::S;
    const auto enc = env.encoder();
    Dataset initial = o.initial.empty() ? random_dataset(env, o.initial_size, o.seed, o.safety_horizon)
                                        : Dataset::load(o.initial, record_key(env));
    DaggerConfig cfg;
    cfg.metric = parse_metric(o.metric);
    cfg.epsilon = o.epsilon;
    cfg.horizon = o.horizon ? *o.horizon : env.default_horizon();
    cfg.paths_per_iteration = o.paths;
    cfg.max_iterations = o.dagger_iterations;
    cfg.eval_episodes = o.eval_episodes;
    cfg.eval_horizon = o.eval_horizon ? *o.eval_horizon : env.default_horizon();
    cfg.delta = o.delta;
    cfg.plateau_points = o.plateau_points;
    cfg.plateau_patience = o.plateau_patience;
    cfg.mode = parse_mode(o.mode);
    cfg.threshold = o.threshold;
    cfg.seed = o.seed;
    cfg.trainer.command = o.trainer;
    cfg.trainer.config = default_train_config(enc.shape, env.model().num_actions(), o.seed);
    if (!o.train_config.empty())
      cfg.trainer.config.merge_patch(
          json::parse(o.train_config.front() == '{' ? o.train_config : read_file(o.train_config)));
    ExpertScorer<S> expert = [&](const S& s) { return std::optional(env.expert_scores(s, o.safety_horizon)); };
    std::function<S(std::size_t, Rng&)> init = [&](std::size_t i, Rng& rng) { return env.init(i, rng); };
    const fs::path work(o.work_dir);
    const auto res = sharp_dagger(env.model(), enc, expert, env.codec(), init, initial, cfg, work,
                                  [](const std::string& msg) { std::cerr << msg << "\n"; });
    fs::create_directories(work / "final");
    res.dataset.save((work / "dataset.jsonl").string());
    res.network->save((work / "final" / "network.json").string());
    json iters = json::array();
    for (const auto& it : res.iterations) iters.push_back(iteration_json(it));
    json out = {{"initial_dataset", initial.size()},
                {"final_dataset", res.dataset.size()},
                {"initial_win_rate", res.initial_report.win_rate()},
                {"initial_win_epsilon", res.initial_report.win_epsilon},
                {"iterations", iters},
                {"stopped_on_plateau", res.stopped_on_plateau},
                {"network", (work / "final" / "network.json").string()},
                {"dataset", (work / "dataset.jsonl").string()}};
    const EvalReport& last = res.iterations.empty() ? res.initial_report : res.iterations.back().report;
    out["final_report"] = last.to_json();
    if (o.baseline) {
      Dataset rnd = random_dataset(env, res.dataset.size(), o.seed ^ 0xba5e11e5ULL, o.safety_horizon);
      const auto net = std::make_shared<const nn::Network>(run_trainer(cfg.trainer, rnd, work / "baseline"));
      const auto pol = extract_policy(env.model(), net, enc, cfg.mode, cfg.threshold);
      const auto rep = evaluate<typename E::M>(env.model(), pol, init, cfg.eval_horizon, cfg.eval_episodes,
                                               dagger_eval_seed(cfg.seed), cfg.delta);
      const auto gap = certify_gap(last.win_rate(), last.win_epsilon, rep.win_rate(), rep.win_epsilon);
      out["baseline"] = {{"dataset", rnd.size()},
                         {"win_rate", rep.win_rate()},
                         {"win_epsilon", rep.win_epsilon},
                         {"gap", gap.gap},
                         {"margin", gap.margin},
                         {"certified", gap.certified}};
    }
    json mcfg = o.to_json();
    mcfg["dagger"] = cfg.to_json();
    mcfg["initial"] = o.initial.empty() ? json({{"random", o.initial_size}}) : json(o.initial);
    mcfg["safety_horizon"] = o.safety_horizon;
    mcfg["baseline"] = o.baseline;
    emit(o, out, mcfg,
         "dataset " + std::to_string(res.dataset.size()) + ", final win rate " + fmt(last.win_rate()) + " after " +
             std::to_string(res.iterations.size()) + " iteration(s)");
    return 0;
  });
}

// -- argument wiring ------------------------------------------------------------------

void env_flags(CLI::App* c, Options& o) {
  c->add_option("--env", o.env, "frozen-lake or pacman")->check(CLI::IsMember({"frozen-lake", "pacman"}));
  c->add_option("--layout", o.layouts, "layout file (repeatable; frozen-lake episode i uses layout i mod k)");
  c->add_option("--layout-seed", o.layout_seed, "seed of the generated frozen-lake layout when no --layout is given");
  c->add_option("--width", o.lake_width, "generated layout width");
  c->add_option("--height", o.lake_height, "generated layout height");
  c->add_option("--wall-probability", o.wall_probability, "interior wall probability");
  c->add_option("--hole-probability", o.hole_probability, "hole probability");
}

void out_flags(CLI::App* c, Options& o) {
  c->add_option("--seed", o.seed, "master seed");
  c->add_option("--out", o.out, "result file (JSON); stdout when omitted");
  c->add_option("--manifest", o.manifest, "manifest file (default <out>.manifest.json)");
}

void agent_flags(CLI::App* c, Options& o) {
  c->add_option("--policy", o.policy, "exact, mcts, neural or uniform")
      ->check(CLI::IsMember({"exact", "mcts", "neural", "uniform"}));
  c->add_option("--horizon", o.horizon, "episode length");
  c->add_flag("--random-start", o.random_start, "start from a random state");
  c->add_option("--mcts-horizon", o.mcts_horizon, "MCTS search depth");
  c->add_option("--iterations", o.iterations, "MCTS iterations per decision");
  c->add_option("--rollouts", o.rollouts, "rollouts per expanded node");
  c->add_option("--exploration", o.exploration, "UCT constant");
  c->add_option("--advice", o.advice, "none, exact or neural")->check(CLI::IsMember({"none", "exact", "neural"}));
  c->add_option("--advice-scope", o.advice_scope, "root or all")->check(CLI::IsMember({"root", "all", "all-nodes"}));
  c->add_option("--threshold", o.threshold, "advice threshold t in [0,1]")->check(CLI::Range(0.0, 1.0));
  c->add_option("--safety-horizon", o.safety_horizon, "eta horizon of exact advice");
  c->add_option("--weights", o.weights, "network manifest");
  c->add_flag("--simulation-advice", o.simulation_advice, "rollouts keep only paths without a loss");
  c->add_option("--mode", o.mode, "neural policy extraction: argmax or threshold");
}

std::vector<std::string> args_after(int argc, char** argv, int from) {
  std::vector<std::string> v;
  for (int i = from; i < argc; ++i) v.emplace_back(argv[i]);
  return v;
}

int run(std::vector<std::string> args);

int cmd_replay(const std::string& manifest_path, const std::string& out) {
  const json m = json::parse(read_file(manifest_path));
  if (m.value("format", "") != "polsyn-manifest") throw std::runtime_error(manifest_path + " is not a polsyn manifest");
  std::vector<std::string> args = m.at("argv").get<std::vector<std::string>>();
  if (!out.empty()) {
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--out" || args[i] == "--manifest") {
        ++i;
        continue;
      }
      if (args[i].rfind("--out=", 0) == 0 || args[i].rfind("--manifest=", 0) == 0) continue;
      kept.push_back(args[i]);
    }
    kept.push_back("--out");
    kept.push_back(out);
    args = kept;
  }
  return run(args);
}

int run(std::vector<std::string> args) {
  Options o;
  o.argv = args;
  CLI::App app{"polsyn: verified policy synthesis with advice-guided MCTS"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(POLSYN_VERSION));

  auto* gen = app.add_subcommand("layout-gen", "generate random frozen-lake layouts");
  env_flags(gen, o);
  out_flags(gen, o);
  gen->add_option("--count", o.count, "number of layouts (--out is a directory when > 1)");

  auto* check = app.add_subcommand("check", "exact PCTL checking or finite-horizon value iteration");
  env_flags(check, o);
  out_flags(check, o);
  check->add_option("--formula", o.formula, "PCTL state formula");
  check->add_option("--horizon", o.vi_horizon, "optimal expected total reward over this many steps");
  check->add_option("--max-states", o.max_states, "exploration cap");
  check->add_option("--max-depth", o.max_depth, "exploration depth bound (pacman default 50)");
  check->add_flag("--safety", o.safety_model, "pacman: check the food-free safety model");

  auto* eta_cmd = app.add_subcommand("eta", "bounded safety scores eta_H(s, a)");
  env_flags(eta_cmd, o);
  out_flags(eta_cmd, o);
  eta_cmd->add_option("--state", o.state, "state JSON (inline or file); initial state when omitted");
  eta_cmd->add_option("--horizon", o.eta_horizon, "H");
  eta_cmd->add_option("--threshold", o.threshold, "threshold for the reported allowed set")->check(CLI::Range(0.0, 1.0));

  auto* play = app.add_subcommand("play", "play one episode");
  env_flags(play, o);
  out_flags(play, o);
  agent_flags(play, o);
  play->add_option("--trace", o.trace, "JSON Lines trace, one line per decision");
  play->add_flag("--no-latency", o.no_latency, "omit timing fields from trace and result");

  auto* ev = app.add_subcommand("evaluate", "statistical evaluation of a policy");
  env_flags(ev, o);
  out_flags(ev, o);
  agent_flags(ev, o);
  ev->add_option("--n", o.n, "episodes");
  ev->add_option("--delta", o.delta, "confidence parameter")->check(CLI::Range(1e-12, 1.0));

  auto* bench = app.add_subcommand("mcts-bench", "advice latency benchmark over MCTS decision states");
  env_flags(bench, o);
  out_flags(bench, o);
  agent_flags(bench, o);
  bench->add_option("--games", o.games, "games played to collect states");
  bench->add_option("--states", o.bench_states, "maximum number of distinct states timed");

  auto* ds = app.add_subcommand("dataset-init", "expert-scored random states (JSON Lines)");
  env_flags(ds, o);
  out_flags(ds, o);
  ds->add_option("--n", o.n, "records");
  ds->add_option("--safety-horizon", o.safety_horizon, "pacman: eta horizon of the scores");

  auto* dg = app.add_subcommand("dagger", "Sharp DAgger loop with an external trainer");
  env_flags(dg, o);
  out_flags(dg, o);
  dg->add_option("--initial", o.initial, "initial dataset (JSONL); random states when omitted");
  dg->add_option("--initial-size", o.initial_size, "size of the random initial dataset");
  dg->add_option("--trainer", o.trainer, "command template with {dataset} {config} {out}");
  dg->add_option("--train-config", o.train_config, "JSON (inline or file) merged over the default training config");
  dg->add_option("--metric", o.metric, "linf, l1 or l2");
  dg->add_option("--epsilon", o.epsilon, "append threshold on the distance");
  dg->add_option("--horizon", o.horizon, "length of simulated paths");
  dg->add_option("--paths", o.paths, "paths per iteration");
  dg->add_option("--iterations", o.dagger_iterations, "maximum iterations");
  dg->add_option("--eval-episodes", o.eval_episodes, "SMC episodes per network");
  dg->add_option("--eval-horizon", o.eval_horizon, "SMC episode length");
  dg->add_option("--delta", o.delta, "SMC confidence parameter");
  dg->add_option("--plateau-points", o.plateau_points, "plateau: minimum improvement in percentage points");
  dg->add_option("--plateau-patience", o.plateau_patience, "plateau: consecutive iterations");
  dg->add_option("--mode", o.mode, "argmax or threshold");
  dg->add_option("--threshold", o.threshold, "threshold of the threshold mode");
  dg->add_option("--safety-horizon", o.safety_horizon, "pacman: eta horizon of the expert");
  dg->add_option("--work-dir", o.work_dir, "directory for datasets, configs and weights");
  dg->add_flag("--baseline", o.baseline, "also train on an equal-size random dataset and compare");

  std::string replay_manifest, replay_out;
  auto* rp = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  rp->add_option("manifest", replay_manifest, "manifest file")->required();
  rp->add_option("--out", replay_out, "new result path");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  if (rp->parsed()) return cmd_replay(replay_manifest, replay_out);
  o.subcommand = app.get_subcommands().front()->get_name();
  if (o.subcommand == "layout-gen") return cmd_layout_gen(o);
  if (o.subcommand == "check") return cmd_check(o);
  if (o.subcommand == "eta") return cmd_eta(o);
  if (o.subcommand == "play") return cmd_play(o);
  if (o.subcommand == "evaluate") return cmd_evaluate(o);
  if (o.subcommand == "mcts-bench") return cmd_mcts_bench(o);
  if (o.subcommand == "dataset-init") return cmd_dataset_init(o);
  if (o.subcommand == "dagger") return cmd_dagger(o);
  throw UsageError("unknown subcommand");
}

void report_error(const std::string& type, const std::string& message) {
  std::cerr << json({{"error", {{"type", type}, {"message", message}}}}).dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(args_after(argc, argv, 1));
  } catch (const UsageError& e) {
    report_error("usage", e.what());
    std::cerr << "run 'polsyn --help' or 'polsyn <subcommand> --help' for usage\n";
    return 2;
  } catch (const pctl::ParseError& e) {
    report_error("formula", e.what());
    return 2;
  } catch (const json::exception& e) {
    report_error("json", e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error("runtime", e.what());
    return 1;
  }
}
