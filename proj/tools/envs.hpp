#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "polsyn/dagger.hpp"
#include "polsyn/experts.hpp"
#include "polsyn/mcts.hpp"
#include "polsyn/neural.hpp"

namespace polsyn::app {

/// The mini Pac-Man board: 7x7, one ghost, three pills.
inline constexpr const char* kMiniPacman =
    R"({"width":7,"height":7,"cells":["#######","#.   .#","# # # #","#  P  #","# # # #","#G   .#","#######"]})";

inline std::string action_name(Action a) { return std::string(direction_name(to_direction(a))); }

inline nlohmann::json action_list(ActionSet s) {
  nlohmann::json j = nlohmann::json::array();
  for (Action a : s) j.push_back(a);
  return j;
}

class LakeEnv {
 public:
  using M = FrozenLake;
  using S = LakeState;
  static constexpr const char* kName = "frozen-lake";

  explicit LakeEnv(std::vector<FrozenLakeLayout> layouts) : lake_(std::move(layouts)) {}

  const M& model() const { return lake_; }
  std::size_t default_horizon() const { return 100; }
  MctsConfig default_mcts() const {
    MctsConfig c;
    c.horizon = 30;
    c.iterations = 40;
    c.rollouts = 10;
    return c;
  }

  S init(std::size_t i, Rng&) const { return lake_.initial_state(i % lake_.num_layouts()); }
  S random_state(std::size_t i, Rng& rng) const {
    const auto free = lake_.free_states(i % lake_.num_layouts());
    return free[rng.below(free.size())];
  }

  nlohmann::json state_json(const S& s) const {
    const auto& g = lake_.layout(s.layout).shape;
    return {{"layout", s.layout}, {"cell", s.cell}, {"x", g.x(s.cell)}, {"y", g.y(s.cell)}};
  }
  S parse_state(const nlohmann::json& j) const {
    S s;
    s.layout = j.value("layout", std::uint16_t{0});
    if (s.layout >= lake_.num_layouts()) throw std::invalid_argument("state names an unknown layout");
    const auto& g = lake_.layout(s.layout).shape;
    if (j.contains("cell")) {
      s.cell = j.at("cell").get<Cell>();
    } else {
      const int x = j.at("x").get<int>(), y = j.at("y").get<int>();
      if (x < 0 || y < 0 || x >= g.width() || y >= g.height()) throw std::invalid_argument("state outside the grid");
      s.cell = g.cell(x, y);
    }
    if (s.cell >= g.size() || lake_.layout(s.layout).at(s.cell) == LakeCell::wall)
      throw std::invalid_argument("state is not a non-wall cell");
    return s;
  }
  std::string key(const S& s) const { return std::to_string(s.layout) + ":" + std::to_string(s.cell); }
  StateCodec<S> codec() const {
    return {kName, [this](const S& s) { return state_json(s); }, [this](const S& s) { return key(s); }};
  }

  Encoder<S> encoder() const { return frozen_lake_encoder(lake_); }

  std::function<bool(const S&)> unsafe() const {
    return [this](const S& s) { return lake_.layout(s.layout).at(s.cell) == LakeCell::hole; };
  }
  EtaResult eta_at(const S& s, std::size_t h) const { return eta(lake_, s, h, unsafe()); }
  Advice<S> exact_advice(std::size_t h, double t) const {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("threshold must lie in [0,1]");
    auto bad = unsafe();
    return Advice<S>(t >= 1.0 ? AdviceKind::qualitative : AdviceKind::quantitative,
                     "eta_" + std::to_string(h) + " >= " + std::to_string(t) + " * max",
                     [this, h, t, bad](const S& s) { return quantitative_allowed(lake_, s, h, t, bad); });
  }

  const FrozenLakeExpert& expert() const {
    if (!expert_) expert_ = std::make_unique<FrozenLakeExpert>(lake_);
    return *expert_;
  }
  std::optional<Policy<S>> exact_policy() const { return expert().policy(); }
  std::vector<double> expert_scores(const S& s, std::size_t) const { return expert().discounted_scores(s); }
  std::optional<std::vector<double>> exact_q(const S& s) const { return expert().q_values(s); }

  /// Every non-wall cell of every layout.
  std::vector<S> check_roots() const {
    std::vector<S> r;
    for (std::size_t i = 0; i < lake_.num_layouts(); ++i) {
      auto v = lake_.non_wall_states(i);
      r.insert(r.end(), v.begin(), v.end());
    }
    return r;
  }
  std::vector<S> initial_states() const {
    std::vector<S> r;
    for (std::size_t i = 0; i < lake_.num_layouts(); ++i) r.push_back(lake_.initial_state(i));
    return r;
  }

 private:
  FrozenLake lake_;
  mutable std::unique_ptr<FrozenLakeExpert> expert_;
};

class PacmanEnv {
 public:
  using M = Pacman;
  using S = PacmanState;
  static constexpr const char* kName = "pacman";

  explicit PacmanEnv(PacmanLayout layout) : game_(std::move(layout)), safety_(game_.maze()) {}

  const M& model() const { return game_; }
  const PacmanSafety& safety() const { return safety_; }
  std::size_t default_horizon() const { return 300; }
  MctsConfig default_mcts() const {
    MctsConfig c;
    c.horizon = 10;
    c.iterations = 20;
    c.rollouts = 5;
    return c;
  }

  S init(std::size_t, Rng&) const { return game_.initial_state(); }
  S random_state(std::size_t, Rng& rng) const { return game_.random_state(rng); }

  nlohmann::json state_json(const S& s) const { return game_.state_to_json(s); }
  S parse_state(const nlohmann::json& j) const { return game_.state_from_json(j); }
  std::string key(const S& s) const { return game_.state_key(s); }
  StateCodec<S> codec() const {
    return {kName, [this](const S& s) { return state_json(s); }, [this](const S& s) { return key(s); }};
  }

  Encoder<S> encoder() const { return pacman_encoder(game_); }

  EtaResult eta_at(const S& s, std::size_t h) const {
    return eta(safety_, PacmanSafety::project(s), h, [](const SafetyState& t) { return t.lost; });
  }
  Advice<S> exact_advice(std::size_t h, double t) const {
    return quantitative_advice<S, PacmanSafety>(safety_, h, t, &PacmanSafety::project);
  }

  std::optional<Policy<S>> exact_policy() const { return std::nullopt; }
  std::vector<double> expert_scores(const S& s, std::size_t h) const { return pacman_eta_scores(safety_, s, h); }
  std::optional<std::vector<double>> exact_q(const S&) const { return std::nullopt; }

  std::vector<S> check_roots() const { return {game_.initial_state()}; }
  std::vector<S> initial_states() const { return {game_.initial_state()}; }

 private:
  Pacman game_;
  PacmanSafety safety_;
};

}  // namespace polsyn::app
