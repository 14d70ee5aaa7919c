#include <gtest/gtest.h>

#include <map>
#include <set>

#include "polsyn/encoders.hpp"
#include "polsyn/frozen_lake.hpp"
#include "polsyn/pacman.hpp"

using namespace polsyn;

namespace {

const char* kLake = R"({"width":5,"height":5,"cells":["#####","#S..#","#.O.#","#..T#","#####"]})";

double prob_to(const std::vector<Transition<LakeState>>& ts, Cell c) {
  for (const auto& t : ts)
    if (t.next.cell == c) return t.prob;
  return 0.0;
}

}  // namespace

TEST(Rng, SplitMixReference) {
  std::uint64_t s = 0;
  EXPECT_EQ(splitmix64(s), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(splitmix64(s), 0x6E789E6AA1B965F4ULL);
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  Rng a = Rng::stream(7, 3), b = Rng::stream(7, 3), c = Rng::stream(7, 4);
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
  }
  EXPECT_NE(Rng::stream(1, 2, 3).next(), Rng::stream(1, 3, 2).next());
}

TEST(Rng, BelowIsUniform) {
  Rng r(11);
  std::vector<int> counts(6, 0);
  const int n = 60000;
  for (int i = 0; i < n; ++i) ++counts[r.below(6)];
  double chi = 0.0;
  for (int c : counts) chi += (c - n / 6.0) * (c - n / 6.0) / (n / 6.0);
  EXPECT_LT(chi, 20.5);  // 5 dof, p = 0.001
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(FrozenLake, TransitionWeights) {
  FrozenLake lake(FrozenLakeLayout::parse(kLake));
  const auto& g = lake.layout().shape;
  const LakeState s{0, g.cell(1, 1)};
  EXPECT_EQ(lake.actions(s), ActionSet((1u << 1) | (1u << 2)));  // east, south
  const auto east = lake.successors(s, to_action(Direction::east));
  EXPECT_NEAR(prob_to(east, g.cell(2, 1)), 10.0 / 11.0, 1e-15);
  EXPECT_NEAR(prob_to(east, g.cell(1, 2)), 1.0 / 11.0, 1e-15);
  // centre-top cell (2,1): moving south onto the hole, west and east slip, north is wall
  const LakeState m{0, g.cell(2, 1)};
  const auto south = lake.successors(m, to_action(Direction::south));
  EXPECT_NEAR(prob_to(south, g.cell(2, 2)), 10.0 / 12.0, 1e-15);
  EXPECT_NEAR(prob_to(south, g.cell(1, 1)), 1.0 / 12.0, 1e-15);
  EXPECT_NEAR(prob_to(south, g.cell(3, 1)), 1.0 / 12.0, 1e-15);
  // moving east from (2,1): west is the reverse, so only south slips
  const auto e2 = lake.successors(m, to_action(Direction::east));
  EXPECT_NEAR(prob_to(e2, g.cell(3, 1)), 10.0 / 11.0, 1e-15);
  EXPECT_NEAR(prob_to(e2, g.cell(2, 2)), 1.0 / 11.0, 1e-15);
  EXPECT_EQ(prob_to(e2, g.cell(1, 1)), 0.0);
}

TEST(FrozenLake, SinksAndLabels) {
  FrozenLake lake(FrozenLakeLayout::parse(kLake));
  const auto& g = lake.layout().shape;
  const LakeState hole{0, g.cell(2, 2)}, target{0, g.cell(3, 3)}, start = lake.initial_state();
  EXPECT_TRUE(lake.is_absorbing(hole));
  EXPECT_TRUE(lake.is_absorbing(target));
  EXPECT_FALSE(lake.is_absorbing(start));
  EXPECT_EQ(lake.actions(hole), ActionSet::all(4));
  for (Action a = 0; a < 4; ++a) {
    const auto ts = lake.successors(target, a);
    ASSERT_EQ(ts.size(), 1u);
    EXPECT_EQ(ts[0].next, target);
    EXPECT_EQ(ts[0].reward, 0.0);
  }
  EXPECT_EQ(lake.terminal_reward(target), 1.0);
  EXPECT_EQ(lake.terminal_reward(start), 0.0);
  EXPECT_EQ(lake.outcome(target), Outcome::win);
  EXPECT_EQ(lake.outcome(hole), Outcome::loss);
  EXPECT_TRUE(has_label(lake, target, "target"));
  EXPECT_TRUE(has_label(lake, hole, "hole"));
  EXPECT_FALSE(has_label(lake, start, "hole"));
  EXPECT_EQ(lake.free_states(0).size(), 7u);
  EXPECT_EQ(lake.non_wall_states(0).size(), 9u);
}

TEST(FrozenLake, ParseDumpRoundTrip) {
  const auto l = FrozenLakeLayout::parse(kLake);
  EXPECT_EQ(FrozenLakeLayout::parse(l.dump()), l);
  EXPECT_THROW(FrozenLakeLayout::parse(R"({"width":3,"height":3,"cells":["###","#S#","###"]})"), std::exception);
  EXPECT_THROW(FrozenLakeLayout::parse(R"({"width":4,"height":3,"cells":["####","#ST#","##"]})"), std::exception);
  EXPECT_THROW(FrozenLakeLayout::parse(R"({"width":4,"height":3,"cells":["####","S.T#","####"]})"), std::exception);
}

TEST(FrozenLake, GeneratorInvariants) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const auto l = gen_frozen_lake(10, 10, rng);
    ASSERT_NO_THROW(l.validate());
    int targets = 0;
    for (Cell c = 0; c < l.shape.size(); ++c) {
      if (l.shape.on_border(c)) ASSERT_EQ(l.at(c), LakeCell::wall);
      targets += l.at(c) == LakeCell::target;
    }
    EXPECT_EQ(targets, 1);
    EXPECT_EQ(l.at(l.start), LakeCell::empty);
  }
  Rng a(3), b(3);
  EXPECT_EQ(gen_frozen_lake(8, 6, a), gen_frozen_lake(8, 6, b));
}

TEST(FrozenLake, EveryDistributionSumsToOne) {
  Rng rng(77);
  FrozenLake lake(gen_frozen_lake(10, 10, rng));
  for (const auto& s : lake.non_wall_states(0)) {
    for (Action a : lake.actions(s)) {
      double sum = 0.0;
      for (const auto& t : lake.successors(s, a)) sum += t.prob;
      ASSERT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

namespace {

const char* kCorridor = R"({"width":6,"height":3,"cells":["######","#P .G#","######"]})";

}  // namespace

TEST(Pacman, GhostMoves) {
  const auto layout = PacmanLayout::parse(R"({"width":5,"height":5,"cells":["#####","#.  #","# G #","#P  #","#####"]})");
  Pacman game(layout);
  const auto& maze = game.maze();
  const Cell c = maze.shape().cell(2, 2);
  // fresh ghost: uniform over all legal moves
  EXPECT_EQ(maze.ghost_moves({c, kNoHeading}).size(), 4u);
  // heading east: reverse (west) excluded
  const auto m = maze.ghost_moves({c, static_cast<std::uint8_t>(Direction::east)});
  EXPECT_EQ(m.size(), 3u);
  for (const auto& g : m) EXPECT_NE(g.cell, maze.shape().cell(1, 2));
  // dead end: reverse is the only move
  const auto l2 = PacmanLayout::parse(kCorridor);
  Pacman g2(l2);
  const Cell end = g2.maze().shape().cell(4, 1);
  const auto back = g2.maze().ghost_moves({end, static_cast<std::uint8_t>(Direction::east)});
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].cell, g2.maze().shape().cell(3, 1));
  EXPECT_EQ(back[0].heading, static_cast<std::uint8_t>(Direction::west));
}

TEST(Pacman, Contact) {
  // same cell: P east to x=2 while the ghost at x=3 moves west
  Pacman game(PacmanLayout::parse(R"({"width":6,"height":3,"cells":["######","#P G.#","######"]})"));
  const auto& g = game.maze().shape();
  auto ts = game.successors(game.initial_state(), to_action(Direction::east));
  ASSERT_EQ(ts.size(), 2u);
  for (const auto& t : ts) {
    EXPECT_NEAR(t.prob, 0.5, 1e-15);
    if (t.next.ghosts[0].cell == g.cell(2, 1)) {
      EXPECT_EQ(t.next.status, GameStatus::lost);
      EXPECT_EQ(t.reward, -1.0 - 500.0);
      EXPECT_TRUE(game.is_absorbing(t.next));
      EXPECT_EQ(game.outcome(t.next), Outcome::loss);
    } else {
      EXPECT_EQ(t.next.status, GameStatus::playing);
      EXPECT_EQ(t.reward, -1.0);
    }
  }
  // swap: P east onto the ghost while it moves west onto P
  Pacman swap(PacmanLayout::parse(R"({"width":5,"height":3,"cells":["#####","#PG.#","#####"]})"));
  ts = swap.successors(swap.initial_state(), to_action(Direction::east));
  ASSERT_EQ(ts.size(), 2u);
  for (const auto& t : ts)
    EXPECT_EQ(t.next.status, t.next.ghosts[0].cell == swap.maze().shape().cell(1, 1) ? GameStatus::lost : GameStatus::playing);
  EXPECT_TRUE(contact(1, 2, 2, 1));
  EXPECT_TRUE(contact(1, 2, 3, 2));
  EXPECT_FALSE(contact(1, 2, 3, 4));
}

TEST(Pacman, EatingAndWinning) {
  // one pill east of P, ghost far away in a dead end going back and forth
  Pacman game(PacmanLayout::parse(R"({"width":8,"height":3,"cells":["########","#P.   G#","########"]})"));
  const auto s = game.initial_state();
  EXPECT_EQ(s.food_count(), 1u);
  const auto ts = game.successors(s, to_action(Direction::east));
  ASSERT_EQ(ts.size(), 1u);
  EXPECT_EQ(ts[0].next.status, GameStatus::won);
  EXPECT_EQ(ts[0].reward, -1.0 + 10.0 + 500.0);
  EXPECT_EQ(game.outcome(ts[0].next), Outcome::win);
  EXPECT_EQ(ts[0].next.food_count(), 0u);
}

TEST(Pacman, SafetyModelAgreesOnLossProbability) {
  Pacman game(PacmanLayout::load(POLSYN_SOURCE_DIR "/layouts/pacman-mini.json"));
  PacmanSafety safety(game.maze());
  Rng rng(4);
  for (int k = 0; k < 300; ++k) {
    const auto s = game.random_state(rng);
    if (game.is_absorbing(s)) continue;
    const auto t = PacmanSafety::project(s);
    for (Action a : game.actions(s)) {
      double pg = 0.0, ps = 0.0, total = 0.0;
      for (const auto& x : game.successors(s, a)) {
        total += x.prob;
        if (x.next.status == GameStatus::lost) pg += x.prob;
      }
      for (const auto& x : safety.successors(t, a))
        if (x.next.lost) ps += x.prob;
      ASSERT_NEAR(total, 1.0, 1e-12);
      ASSERT_NEAR(pg, ps, 1e-12);
    }
  }
}

TEST(Pacman, JsonAndKeyRoundTrip) {
  Pacman game(PacmanLayout::load(POLSYN_SOURCE_DIR "/layouts/pacman-mini.json"));
  Rng rng(8);
  std::set<std::string> keys;
  std::vector<PacmanState> states;
  for (int k = 0; k < 200; ++k) {
    const auto s = game.random_state(rng);
    const auto back = game.state_from_json(game.state_to_json(s));
    ASSERT_EQ(back, s);
    ASSERT_EQ(game.state_key(back), game.state_key(s));
    if (std::find(states.begin(), states.end(), s) == states.end()) {
      states.push_back(s);
      keys.insert(game.state_key(s));
    }
  }
  EXPECT_EQ(keys.size(), states.size());
}

TEST(Encoders, OneHotPlanes) {
  FrozenLake lake(FrozenLakeLayout::parse(kLake));
  const auto enc = frozen_lake_encoder(lake);
  const auto s = lake.initial_state();
  const auto t = enc(s);
  ASSERT_EQ(t.shape, (std::vector<std::size_t>{4, 5, 5}));
  EXPECT_EQ(t.at(kLakeRobot, 1, 1), 1.0f);
  EXPECT_EQ(t.at(kLakeHoles, 2, 2), 1.0f);
  EXPECT_EQ(t.at(kLakeTarget, 3, 3), 1.0f);
  EXPECT_EQ(t.at(kLakeWalls, 0, 0), 1.0f);
  float robot = 0;
  for (std::size_t y = 0; y < 5; ++y)
    for (std::size_t x = 0; x < 5; ++x) robot += t.at(kLakeRobot, y, x);
  EXPECT_EQ(robot, 1.0f);

  Pacman game(PacmanLayout::load(POLSYN_SOURCE_DIR "/layouts/pacman-mini.json"));
  const auto p = pacman_encoder(game)(game.initial_state());
  ASSERT_EQ(p.shape, (std::vector<std::size_t>{7, 7, 7}));
  EXPECT_EQ(p.at(kPacPacman, 3, 3), 1.0f);
  EXPECT_EQ(p.at(kPacGhostNorth, 5, 1), 1.0f);  // unmoved ghost counts as north
  EXPECT_EQ(p.at(kPacFood, 1, 1), 1.0f);
  EXPECT_EQ(p.at(kPacFood, 1, 2), 0.0f);
}
