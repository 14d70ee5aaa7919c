#include "polsyn/smc.hpp"

#include <cmath>
#include <stdexcept>

namespace polsyn {

std::size_t sample_size(double a, double b, double epsilon, double delta) {
  if (!(a < b)) throw std::invalid_argument("sample_size: need a < b");
  if (!(epsilon > 0.0 && epsilon <= b - a)) throw std::invalid_argument("sample_size: need 0 < epsilon <= b - a");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("sample_size: need 0 < delta <= 1");
  const double w = b - a;
  const double n = w * w / (2.0 * epsilon * epsilon) * std::log(2.0 / delta);
  // Guard against n landing a hair above an integer from rounding.
  const double r = std::round(n);
  if (std::abs(n - r) <= 1e-9 * std::max(1.0, r)) return static_cast<std::size_t>(std::max(1.0, r));
  return static_cast<std::size_t>(std::max(1.0, std::ceil(n)));
}

double hoeffding_epsilon(double a, double b, std::size_t n, double delta) {
  if (!(a <= b)) throw std::invalid_argument("hoeffding_epsilon: need a <= b");
  if (n == 0) throw std::invalid_argument("hoeffding_epsilon: need n >= 1");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("hoeffding_epsilon: need 0 < delta <= 1");
  return (b - a) * std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

void finalize_report(EvalReport& r) {
  r.n = r.rewards.size();
  r.wins = r.losses = r.draws = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < r.n; ++i) {
    sum += r.rewards[i];
    switch (static_cast<Outcome>(r.outcomes[i])) {
      case Outcome::win: ++r.wins; break;
      case Outcome::loss: ++r.losses; break;
      case Outcome::none: ++r.draws; break;
    }
  }
  r.mean_reward = r.n ? sum / static_cast<double>(r.n) : 0.0;
  if (r.n) {
    r.epsilon = hoeffding_epsilon(r.reward_bounds.lo, r.reward_bounds.hi, r.n, r.delta);
    r.win_epsilon = hoeffding_epsilon(0.0, 1.0, r.n, r.delta);
  }
}

namespace {
const char* outcome_name(std::uint8_t o) {
  switch (static_cast<Outcome>(o)) {
    case Outcome::win: return "win";
    case Outcome::loss: return "loss";
    case Outcome::none: return "draw";
  }
  return "draw";
}
std::uint8_t parse_outcome(const std::string& s) {
  if (s == "win") return static_cast<std::uint8_t>(Outcome::win);
  if (s == "loss") return static_cast<std::uint8_t>(Outcome::loss);
  if (s == "draw") return static_cast<std::uint8_t>(Outcome::none);
  throw std::invalid_argument("unknown episode outcome: " + s);
}
}  // namespace

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["format"] = "polsyn-eval-report";
  j["version"] = 1;
  j["policy"] = policy;
  j["n"] = n;
  j["horizon"] = horizon;
  j["seed"] = seed;
  j["seed_derivation"] = "episode i uses xoshiro256** seeded from splitmix64(seed, i)";
  j["mean_reward"] = mean_reward;
  j["wins"] = wins;
  j["losses"] = losses;
  j["draws"] = draws;
  j["win_rate"] = win_rate();
  j["certificate"] = {{"delta", delta},
                      {"reward_bounds", {reward_bounds.lo, reward_bounds.hi}},
                      {"epsilon", epsilon},
                      {"win_rate_epsilon", win_epsilon}};
  nlohmann::json eps = nlohmann::json::array();
  for (std::size_t i = 0; i < rewards.size(); ++i)
    eps.push_back({{"reward", rewards[i]}, {"steps", lengths[i]}, {"outcome", outcome_name(outcomes[i])}});
  j["episodes"] = std::move(eps);
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "polsyn-eval-report" || j.value("version", 0) != 1)
    throw std::invalid_argument("not a version-1 eval report");
  EvalReport r;
  r.policy = j.at("policy").get<std::string>();
  r.horizon = j.at("horizon").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  const auto& c = j.at("certificate");
  r.delta = c.at("delta").get<double>();
  r.reward_bounds = {c.at("reward_bounds")[0].get<double>(), c.at("reward_bounds")[1].get<double>()};
  for (const auto& e : j.at("episodes")) {
    r.rewards.push_back(e.at("reward").get<double>());
    r.lengths.push_back(e.at("steps").get<std::uint32_t>());
    r.outcomes.push_back(parse_outcome(e.at("outcome").get<std::string>()));
  }
  finalize_report(r);
  return r;
}

GapCertificate certify_gap(double mean_x, double eps_x, double mean_y, double eps_y) {
  GapCertificate g;
  g.gap = mean_x - mean_y;
  g.margin = eps_x + eps_y;
  g.certified = g.gap > g.margin;
  return g;
}

}  // namespace polsyn
