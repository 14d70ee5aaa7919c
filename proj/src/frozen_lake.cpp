#include "polsyn/frozen_lake.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace polsyn {

namespace {

char cell_char(LakeCell c) {
  switch (c) {
    case LakeCell::empty: return '.';
    case LakeCell::wall: return '#';
    case LakeCell::hole: return 'O';
    case LakeCell::target: return 'T';
  }
  return '?';
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace

void FrozenLakeLayout::validate() const {
  if (shape.width() < 3 || shape.height() < 3) throw std::invalid_argument("frozen lake: grid smaller than 3x3");
  if (cells.size() != shape.size()) throw std::invalid_argument("frozen lake: cell count mismatch");
  int targets = 0;
  for (Cell c = 0; c < cells.size(); ++c) {
    if (shape.on_border(c) && cells[c] != LakeCell::wall)
      throw std::invalid_argument("frozen lake: border cells must be walls");
    if (cells[c] == LakeCell::target) ++targets;
  }
  if (targets != 1) throw std::invalid_argument("frozen lake: exactly one target required");
  if (start >= cells.size() || cells[start] != LakeCell::empty)
    throw std::invalid_argument("frozen lake: start must be an empty cell");
}

FrozenLakeLayout FrozenLakeLayout::parse(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  const int w = j.at("width").get<int>();
  const int h = j.at("height").get<int>();
  const auto& rows = j.at("cells");
  if (!rows.is_array() || static_cast<int>(rows.size()) != h)
    throw std::invalid_argument("frozen lake: 'cells' must hold one string per row");
  FrozenLakeLayout l;
  l.shape = GridShape(w, h);
  l.cells.assign(l.shape.size(), LakeCell::wall);
  int starts = 0;
  for (int y = 0; y < h; ++y) {
    const auto row = rows[y].get<std::string>();
    if (static_cast<int>(row.size()) != w) throw std::invalid_argument("frozen lake: row width mismatch");
    for (int x = 0; x < w; ++x) {
      const Cell c = l.shape.cell(x, y);
      switch (row[x]) {
        case '#': l.cells[c] = LakeCell::wall; break;
        case '.': l.cells[c] = LakeCell::empty; break;
        case 'O': l.cells[c] = LakeCell::hole; break;
        case 'T': l.cells[c] = LakeCell::target; break;
        case 'S':
          l.cells[c] = LakeCell::empty;
          l.start = c;
          ++starts;
          break;
        default: throw std::invalid_argument(std::string("frozen lake: invalid cell character '") + row[x] + "'");
      }
    }
  }
  if (starts != 1) throw std::invalid_argument("frozen lake: exactly one start required");
  l.validate();
  return l;
}

std::string FrozenLakeLayout::dump() const {
  nlohmann::ordered_json j;
  j["width"] = shape.width();
  j["height"] = shape.height();
  auto rows = nlohmann::ordered_json::array();
  for (int y = 0; y < shape.height(); ++y) {
    std::string row;
    for (int x = 0; x < shape.width(); ++x) {
      const Cell c = shape.cell(x, y);
      row += c == start ? 'S' : cell_char(cells[c]);
    }
    rows.push_back(row);
  }
  j["cells"] = rows;
  return j.dump(2) + "\n";
}

FrozenLakeLayout FrozenLakeLayout::load(const std::string& path) { return parse(read_file(path)); }

void FrozenLakeLayout::save(const std::string& path) const { write_file(path, dump()); }

FrozenLakeLayout gen_frozen_lake(int width, int height, Rng& rng, const FrozenLakeGenOptions& opts) {
  if (width < 3 || height < 3) throw std::invalid_argument("frozen lake: grid smaller than 3x3");
  const GridShape shape(width, height);
  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    FrozenLakeLayout l;
    l.shape = shape;
    l.cells.assign(shape.size(), LakeCell::empty);
    for (Cell c = 0; c < shape.size(); ++c) {
      if (shape.on_border(c) || rng.bernoulli(opts.wall_probability)) l.cells[c] = LakeCell::wall;
    }
    for (Cell c = 0; c < shape.size(); ++c) {
      if (l.cells[c] == LakeCell::empty && rng.bernoulli(opts.hole_probability)) l.cells[c] = LakeCell::hole;
    }
    std::vector<Cell> empty;
    for (Cell c = 0; c < shape.size(); ++c)
      if (l.cells[c] == LakeCell::empty) empty.push_back(c);
    if (empty.size() < 2) continue;
    const std::size_t ti = rng.below(empty.size());
    l.cells[empty[ti]] = LakeCell::target;
    empty.erase(empty.begin() + static_cast<std::ptrdiff_t>(ti));
    l.start = empty[rng.below(empty.size())];
    return l;
  }
  throw std::runtime_error("frozen lake: could not place target and start after " +
                           std::to_string(opts.max_attempts) + " attempts");
}

FrozenLake::FrozenLake(FrozenLakeLayout layout) : FrozenLake(std::vector<FrozenLakeLayout>{std::move(layout)}) {}

FrozenLake::FrozenLake(std::vector<FrozenLakeLayout> layouts) : layouts_(std::move(layouts)) {
  if (layouts_.empty()) throw std::invalid_argument("frozen lake: no layout");
  if (layouts_.size() > 65535) throw std::invalid_argument("frozen lake: too many layouts");
  for (const auto& l : layouts_) l.validate();
  build_tables();
}

void FrozenLake::build_tables() {
  tables_.clear();
  for (const auto& l : layouts_) {
    Table t;
    const std::size_t n = l.shape.size();
    t.legal.assign(n, ActionSet{});
    t.absorbing.assign(n, false);
    t.moves.assign(n * 4, Move{});
    auto open = [&](Cell c, Direction d) -> std::optional<Cell> {
      auto nb = l.shape.neighbor(c, d);
      if (!nb || l.cells[*nb] == LakeCell::wall) return std::nullopt;
      return nb;
    };
    for (Cell c = 0; c < n; ++c) {
      if (l.cells[c] == LakeCell::wall) continue;
      ActionSet legal;
      for (Direction d : kDirections)
        if (open(c, d)) legal.insert(to_action(d));
      const bool sink = l.cells[c] != LakeCell::empty || legal.empty();
      t.absorbing[c] = sink;
      if (sink) {
        t.legal[c] = ActionSet::all(4);
        for (Action a = 0; a < 4; ++a) {
          Move& m = t.moves[c * 4 + a];
          m.count = 1;
          m.next[0] = c;
          m.prob[0] = 1.0;
        }
        continue;
      }
      t.legal[c] = legal;
      for (Action a : legal) {
        const Direction intended = to_direction(a);
        Move& m = t.moves[c * 4 + a];
        double weight_total = 0.0;
        std::array<double, 3> w{};
        for (Direction d : kDirections) {
          if (d == reverse(intended)) continue;
          auto nb = open(c, d);
          if (!nb) continue;
          m.next[m.count] = *nb;
          w[m.count] = d == intended ? 10.0 : 1.0;
          weight_total += w[m.count];
          ++m.count;
        }
        for (int i = 0; i < m.count; ++i) m.prob[i] = w[i] / weight_total;
      }
    }
    tables_.push_back(std::move(t));
  }
}

FrozenLake::State FrozenLake::initial_state(std::size_t layout) const {
  return {static_cast<std::uint16_t>(layout), layouts_.at(layout).start};
}

ActionSet FrozenLake::actions(const State& s) const { return tables_[s.layout].legal[s.cell]; }

std::vector<Transition<FrozenLake::State>> FrozenLake::successors(const State& s, Action a) const {
  if (!actions(s).contains(a)) throw std::invalid_argument("action unavailable");
  const Move& m = tables_[s.layout].moves[s.cell * 4 + a];
  std::vector<Transition<State>> out;
  out.reserve(m.count);
  for (int i = 0; i < m.count; ++i) out.push_back({{s.layout, m.next[i]}, m.prob[i], 0.0});
  return out;
}

std::pair<FrozenLake::State, double> FrozenLake::sample(const State& s, Action a, Rng& rng) const {
  const Move& m = tables_[s.layout].moves[s.cell * 4 + a];
  const double u = rng.uniform();
  double acc = 0.0;
  for (int i = 0; i + 1 < m.count; ++i) {
    acc += m.prob[i];
    if (u < acc) return {{s.layout, m.next[i]}, 0.0};
  }
  return {{s.layout, m.next[m.count - 1]}, 0.0};
}

double FrozenLake::terminal_reward(const State& s) const {
  return layouts_[s.layout].cells[s.cell] == LakeCell::target ? 1.0 : 0.0;
}

bool FrozenLake::is_absorbing(const State& s) const { return tables_[s.layout].absorbing[s.cell]; }

const std::vector<std::string>& FrozenLake::label_names() const {
  static const std::vector<std::string> names = {"target", "hole"};
  return names;
}

std::uint64_t FrozenLake::label_mask(const State& s) const {
  switch (layouts_[s.layout].cells[s.cell]) {
    case LakeCell::target: return 1u;
    case LakeCell::hole: return 2u;
    default: return 0u;
  }
}

Outcome FrozenLake::outcome(const State& s) const {
  switch (layouts_[s.layout].cells[s.cell]) {
    case LakeCell::target: return Outcome::win;
    case LakeCell::hole: return Outcome::loss;
    default: return Outcome::none;
  }
}

std::vector<FrozenLake::State> FrozenLake::free_states(std::size_t layout) const {
  std::vector<State> out;
  const auto& l = layouts_.at(layout);
  for (Cell c = 0; c < l.cells.size(); ++c)
    if (l.cells[c] == LakeCell::empty) out.push_back({static_cast<std::uint16_t>(layout), c});
  return out;
}

std::vector<FrozenLake::State> FrozenLake::non_wall_states(std::size_t layout) const {
  std::vector<State> out;
  const auto& l = layouts_.at(layout);
  for (Cell c = 0; c < l.cells.size(); ++c)
    if (l.cells[c] != LakeCell::wall) out.push_back({static_cast<std::uint16_t>(layout), c});
  return out;
}

}  // namespace polsyn
