#include "polsyn/pacman.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace polsyn {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t hash_mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

const char* status_name(GameStatus s) {
  switch (s) {
    case GameStatus::playing: return "playing";
    case GameStatus::won: return "won";
    case GameStatus::lost: return "lost";
  }
  return "?";
}

GameStatus parse_status(const std::string& s) {
  if (s == "playing") return GameStatus::playing;
  if (s == "won") return GameStatus::won;
  if (s == "lost") return GameStatus::lost;
  throw std::invalid_argument("pacman: unknown status " + s);
}

void merge_into(std::vector<Transition<PacmanState>>& out, PacmanState next, double p, double r) {
  for (auto& t : out) {
    if (t.next == next) {
      t.prob += p;
      return;
    }
  }
  out.push_back({std::move(next), p, r});
}

}  // namespace

void PacmanLayout::validate() const {
  const std::size_t n = shape.size();
  if (walls.size() != n || food.size() != n) throw std::invalid_argument("pacman: cell count mismatch");
  auto free_cell = [&](Cell c) { return c < n && !walls[c]; };
  if (!free_cell(pacman)) throw std::invalid_argument("pacman: Pac-Man must start on a free cell");
  for (Cell g : ghosts) {
    if (!free_cell(g)) throw std::invalid_argument("pacman: ghost on a wall");
    if (g == pacman) throw std::invalid_argument("pacman: ghost starts on Pac-Man");
  }
  bool any_food = false;
  for (Cell c = 0; c < n; ++c) {
    if (food[c] && walls[c]) throw std::invalid_argument("pacman: food on a wall");
    any_food = any_food || food[c];
  }
  if (!any_food) throw std::invalid_argument("pacman: layout has no food");
  for (Cell c = 0; c < n; ++c)
    if (shape.on_border(c) && !walls[c]) throw std::invalid_argument("pacman: border cells must be walls");
}

PacmanLayout PacmanLayout::parse(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  const int w = j.at("width").get<int>();
  const int h = j.at("height").get<int>();
  const auto& rows = j.at("cells");
  if (!rows.is_array() || static_cast<int>(rows.size()) != h)
    throw std::invalid_argument("pacman: 'cells' must hold one string per row");
  PacmanLayout l;
  l.shape = GridShape(w, h);
  l.walls.assign(l.shape.size(), false);
  l.food.assign(l.shape.size(), false);
  int pacmen = 0;
  for (int y = 0; y < h; ++y) {
    const auto row = rows[y].get<std::string>();
    if (static_cast<int>(row.size()) != w) throw std::invalid_argument("pacman: row width mismatch");
    for (int x = 0; x < w; ++x) {
      const Cell c = l.shape.cell(x, y);
      switch (row[x]) {
        case '#': l.walls[c] = true; break;
        case '.': l.food[c] = true; break;
        case ' ': break;
        case 'P':
          l.pacman = c;
          ++pacmen;
          break;
        case 'G': l.ghosts.push_back(c); break;
        default: throw std::invalid_argument(std::string("pacman: invalid cell character '") + row[x] + "'");
      }
    }
  }
  if (pacmen != 1) throw std::invalid_argument("pacman: exactly one Pac-Man required");
  l.validate();
  return l;
}

std::string PacmanLayout::dump() const {
  nlohmann::ordered_json j;
  j["width"] = shape.width();
  j["height"] = shape.height();
  auto rows = nlohmann::ordered_json::array();
  for (int y = 0; y < shape.height(); ++y) {
    std::string row;
    for (int x = 0; x < shape.width(); ++x) {
      const Cell c = shape.cell(x, y);
      char ch = walls[c] ? '#' : (food[c] ? '.' : ' ');
      if (c == pacman) ch = 'P';
      if (std::find(ghosts.begin(), ghosts.end(), c) != ghosts.end()) ch = 'G';
      row += ch;
    }
    rows.push_back(row);
  }
  j["cells"] = rows;
  return j.dump(2) + "\n";
}

PacmanLayout PacmanLayout::load(const std::string& path) { return parse(read_file(path)); }

void PacmanLayout::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << dump();
}

Maze::Maze(GridShape shape, std::vector<bool> walls) : shape_(shape), walls_(std::move(walls)) {
  legal_.assign(shape_.size(), ActionSet{});
  for (Cell c = 0; c < shape_.size(); ++c) {
    if (walls_[c]) continue;
    for (Direction d : kDirections) {
      auto nb = shape_.neighbor(c, d);
      if (nb && !walls_[*nb]) legal_[c].insert(to_action(d));
    }
  }
}

std::vector<GhostState> Maze::ghost_moves(const GhostState& g) const {
  const ActionSet legal = legal_[g.cell];
  std::vector<GhostState> out;
  for (Action a : legal) {
    const Direction d = to_direction(a);
    if (g.heading != kNoHeading && d == reverse(static_cast<Direction>(g.heading))) continue;
    out.push_back({step(g.cell, d), static_cast<std::uint8_t>(d)});
  }
  if (out.empty()) {
    // Dead end: the reverse move is the only way out.
    for (Action a : legal) out.push_back({step(g.cell, to_direction(a)), static_cast<std::uint8_t>(a)});
  }
  if (out.empty()) out.push_back(g);  // enclosed cell: the ghost stays put
  return out;
}

std::size_t PacmanState::food_count() const {
  std::size_t n = 0;
  for (auto w : food) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

Pacman::Pacman(PacmanLayout layout, PacmanRewards rewards)
    : layout_(std::move(layout)), maze_(layout_.shape, layout_.walls), rewards_(rewards) {
  layout_.validate();
  total_food_ = static_cast<std::size_t>(std::count(layout_.food.begin(), layout_.food.end(), true));
  if (maze_.legal(layout_.pacman).empty()) throw std::invalid_argument("pacman: Pac-Man cannot move");
}

PacmanState Pacman::initial_state() const { return state_from_layout(layout_); }

PacmanState Pacman::state_from_layout(const PacmanLayout& placement) const {
  if (placement.shape != layout_.shape || placement.walls != layout_.walls)
    throw std::invalid_argument("pacman: placement walls differ from the model's maze");
  PacmanState s;
  s.pacman = placement.pacman;
  for (Cell g : placement.ghosts) s.ghosts.push_back({g, kNoHeading});
  s.food.assign((layout_.shape.size() + 63) / 64, 0);
  for (Cell c = 0; c < placement.food.size(); ++c)
    if (placement.food[c]) s.set_food(c);
  return s;
}

PacmanState Pacman::apply(const State& s, Cell pac_next, const std::vector<GhostState>& ghosts_next,
                          double& reward) const {
  State n;
  n.pacman = pac_next;
  n.ghosts = ghosts_next;
  n.food = s.food;
  n.step = static_cast<std::uint16_t>(s.step + 1);
  reward = rewards_.step;
  for (std::size_t i = 0; i < s.ghosts.size(); ++i) {
    if (contact(s.pacman, pac_next, s.ghosts[i].cell, ghosts_next[i].cell)) {
      n.status = GameStatus::lost;
      reward += rewards_.loss;
      return n;
    }
  }
  if (n.has_food(pac_next)) {
    n.clear_food(pac_next);
    reward += rewards_.food;
    if (n.food_count() == 0) {
      n.status = GameStatus::won;
      reward += rewards_.win;
    }
  }
  return n;
}

std::vector<Transition<PacmanState>> Pacman::successors(const State& s, Action a) const {
  if (!actions(s).contains(a)) throw std::invalid_argument("action unavailable");
  if (is_absorbing(s)) return {{s, 1.0, 0.0}};
  const Cell pac_next = maze_.step(s.pacman, to_direction(a));
  std::vector<Transition<State>> out;
  for_each_ghost_move(maze_, s.ghosts, [&](const std::vector<GhostState>& g, double p) {
    double r = 0.0;
    State n = apply(s, pac_next, g, r);
    merge_into(out, std::move(n), p, r);
  });
  return out;
}

std::pair<PacmanState, double> Pacman::sample(const State& s, Action a, Rng& rng) const {
  if (is_absorbing(s)) return {s, 0.0};
  const Cell pac_next = maze_.step(s.pacman, to_direction(a));
  std::vector<GhostState> g(s.ghosts.size());
  for (std::size_t i = 0; i < s.ghosts.size(); ++i) {
    auto moves = maze_.ghost_moves(s.ghosts[i]);
    g[i] = moves[rng.below(moves.size())];
  }
  double r = 0.0;
  State n = apply(s, pac_next, g, r);
  return {std::move(n), r};
}

Range Pacman::return_bounds(std::size_t h) const {
  if (h == 0) return {0.0, 0.0};
  const double steps = static_cast<double>(h);
  const double eaten = static_cast<double>(std::min(h, total_food_));
  return {steps * rewards_.step + rewards_.loss, steps * rewards_.step + eaten * rewards_.food + rewards_.win};
}

const std::vector<std::string>& Pacman::label_names() const {
  static const std::vector<std::string> names = {"win", "loss"};
  return names;
}

std::uint64_t Pacman::label_mask(const State& s) const {
  switch (s.status) {
    case GameStatus::won: return 1u;
    case GameStatus::lost: return 2u;
    default: return 0u;
  }
}

Outcome Pacman::outcome(const State& s) const {
  switch (s.status) {
    case GameStatus::won: return Outcome::win;
    case GameStatus::lost: return Outcome::loss;
    default: return Outcome::none;
  }
}

PacmanState Pacman::random_state(Rng& rng, double food_probability) const {
  std::vector<Cell> free;
  for (Cell c = 0; c < layout_.shape.size(); ++c)
    if (!layout_.walls[c]) free.push_back(c);
  const std::size_t agents = 1 + layout_.ghosts.size();
  if (free.size() < agents + 1) throw std::runtime_error("pacman: maze too small for a random state");
  // Partial Fisher-Yates: the first `agents` entries become agent cells.
  for (std::size_t i = 0; i < agents; ++i) {
    const std::size_t j = i + rng.below(free.size() - i);
    std::swap(free[i], free[j]);
  }
  State s;
  s.pacman = free[0];
  for (std::size_t i = 1; i < agents; ++i) {
    const ActionSet legal = maze_.legal(free[i]);
    const std::uint8_t heading =
        legal.empty() ? kNoHeading : static_cast<std::uint8_t>(legal.nth(rng.below(legal.size())));
    s.ghosts.push_back({free[i], heading});
  }
  s.food.assign((layout_.shape.size() + 63) / 64, 0);
  for (std::size_t i = 0; i < free.size(); ++i)
    if (free[i] != s.pacman && rng.bernoulli(food_probability)) s.set_food(free[i]);
  if (s.food_count() == 0) s.set_food(free[agents + rng.below(free.size() - agents)]);
  return s;
}

nlohmann::json Pacman::state_to_json(const State& s) const {
  nlohmann::json j;
  j["pacman"] = s.pacman;
  auto ghosts = nlohmann::json::array();
  for (const auto& g : s.ghosts) ghosts.push_back({g.cell, g.heading});
  j["ghosts"] = ghosts;
  std::vector<Cell> food;
  for (Cell c = 0; c < layout_.shape.size(); ++c)
    if (s.has_food(c)) food.push_back(c);
  j["food"] = food;
  j["step"] = s.step;
  j["status"] = status_name(s.status);
  return j;
}

PacmanState Pacman::state_from_json(const nlohmann::json& j) const {
  State s;
  s.pacman = j.at("pacman").get<Cell>();
  for (const auto& g : j.at("ghosts")) s.ghosts.push_back({g.at(0).get<Cell>(), g.at(1).get<std::uint8_t>()});
  s.food.assign((layout_.shape.size() + 63) / 64, 0);
  for (const auto& c : j.at("food")) s.set_food(c.get<Cell>());
  s.step = j.value("step", std::uint16_t{0});
  s.status = parse_status(j.value("status", std::string("playing")));
  const std::size_t n = layout_.shape.size();
  if (s.pacman >= n || layout_.walls[s.pacman]) throw std::invalid_argument("pacman: Pac-Man on a wall");
  for (const auto& g : s.ghosts) {
    if (g.cell >= n || layout_.walls[g.cell]) throw std::invalid_argument("pacman: ghost on a wall");
    if (g.heading > kNoHeading) throw std::invalid_argument("pacman: bad ghost heading");
  }
  return s;
}

std::string Pacman::state_key(const State& s) const {
  std::string key;
  auto put16 = [&](std::uint16_t v) {
    key.push_back(static_cast<char>(v & 0xff));
    key.push_back(static_cast<char>(v >> 8));
  };
  put16(s.pacman);
  key.push_back(static_cast<char>(s.status));
  put16(static_cast<std::uint16_t>(s.ghosts.size()));
  for (const auto& g : s.ghosts) {
    put16(g.cell);
    key.push_back(static_cast<char>(g.heading));
  }
  for (auto w : s.food)
    for (int b = 0; b < 8; ++b) key.push_back(static_cast<char>((w >> (8 * b)) & 0xff));
  return key;
}

SafetyState PacmanSafety::project(const PacmanState& s) {
  return {s.pacman, s.ghosts, s.status == GameStatus::lost};
}

std::vector<Transition<SafetyState>> PacmanSafety::successors(const State& s, Action a) const {
  if (!actions(s).contains(a)) throw std::invalid_argument("action unavailable");
  if (s.lost) return {{s, 1.0, 0.0}};
  const Cell pac_next = maze_.step(s.pacman, to_direction(a));
  std::vector<Transition<State>> out;
  for_each_ghost_move(maze_, s.ghosts, [&](const std::vector<GhostState>& g, double p) {
    State n{pac_next, g, false};
    for (std::size_t i = 0; i < g.size(); ++i)
      if (contact(s.pacman, pac_next, s.ghosts[i].cell, g[i].cell)) n.lost = true;
    for (auto& t : out) {
      if (t.next == n) {
        t.prob += p;
        return;
      }
    }
    out.push_back({std::move(n), p, 0.0});
  });
  return out;
}

const std::vector<std::string>& PacmanSafety::label_names() const {
  static const std::vector<std::string> names = {"loss"};
  return names;
}

}  // namespace polsyn

std::size_t std::hash<polsyn::PacmanState>::operator()(const polsyn::PacmanState& s) const noexcept {
  std::size_t h = s.pacman;
  h = polsyn::hash_mix(h, static_cast<std::size_t>(s.status));
  h = polsyn::hash_mix(h, s.step);
  for (const auto& g : s.ghosts) h = polsyn::hash_mix(h, (static_cast<std::size_t>(g.cell) << 3) | g.heading);
  for (auto w : s.food) h = polsyn::hash_mix(h, w);
  return h;
}

std::size_t std::hash<polsyn::SafetyState>::operator()(const polsyn::SafetyState& s) const noexcept {
  std::size_t h = s.pacman;
  h = polsyn::hash_mix(h, s.lost);
  for (const auto& g : s.ghosts) h = polsyn::hash_mix(h, (static_cast<std::size_t>(g.cell) << 3) | g.heading);
  return h;
}
