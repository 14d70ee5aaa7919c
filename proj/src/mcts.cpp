#include "polsyn/mcts.hpp"

#include <set>
#include <stdexcept>

namespace polsyn {

std::string advice_scope_name(AdviceScope s) {
  switch (s) {
    case AdviceScope::none: return "none";
    case AdviceScope::root: return "root";
    case AdviceScope::all: return "all";
  }
  return "none";
}

AdviceScope parse_advice_scope(const std::string& s) {
  if (s == "none") return AdviceScope::none;
  if (s == "root") return AdviceScope::root;
  if (s == "all" || s == "all-nodes") return AdviceScope::all;
  throw std::invalid_argument("unknown advice scope: " + s);
}

void MctsConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("mcts: horizon must be at least 1");
  if (iterations < 1) throw std::invalid_argument("mcts: iterations must be at least 1");
  if (rollouts < 1) throw std::invalid_argument("mcts: rollouts must be at least 1");
  if (exploration && !(*exploration >= 0.0)) throw std::invalid_argument("mcts: exploration constant must be >= 0");
}

nlohmann::json MctsConfig::to_json() const {
  nlohmann::json j;
  j["horizon"] = horizon;
  j["iterations"] = iterations;
  j["rollouts"] = rollouts;
  if (exploration) {
    j["exploration"] = *exploration;
  } else {
    j["exploration"] = nullptr;
  }
  j["advice_scope"] = advice_scope_name(advice_scope);
  j["simulation_advice"] = simulation_advice;
  j["seed"] = seed;
  return j;
}

MctsConfig MctsConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {"horizon",      "iterations",        "rollouts", "exploration",
                                              "advice_scope", "simulation_advice", "seed"};
  if (!j.is_object()) throw std::invalid_argument("mcts config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw std::invalid_argument("unknown mcts config key: " + k);
  MctsConfig c;
  if (j.contains("horizon")) c.horizon = j.at("horizon").get<std::size_t>();
  if (j.contains("iterations")) c.iterations = j.at("iterations").get<std::size_t>();
  if (j.contains("rollouts")) c.rollouts = j.at("rollouts").get<std::size_t>();
  if (j.contains("exploration") && !j.at("exploration").is_null()) c.exploration = j.at("exploration").get<double>();
  if (j.contains("advice_scope")) c.advice_scope = parse_advice_scope(j.at("advice_scope").get<std::string>());
  if (j.contains("simulation_advice")) c.simulation_advice = j.at("simulation_advice").get<bool>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

nlohmann::json MctsResult::q_json() const {
  nlohmann::json out = nlohmann::json::object();
  for (std::size_t a = 0; a < q.size(); ++a)
    if (visits[a] > 0) out[std::to_string(a)] = q[a];
  return out;
}

}  // namespace polsyn
