#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "matchq/config_io.hpp"

namespace matchq::testing {

inline std::string config_path(const std::string& name) { return std::string(MATCHQ_CONFIG_DIR) + "/" + name; }

inline SystemConfig load(const std::string& name) { return load_config(config_path(name)); }

// N = M = K = 1, B = {0, 1}, linear utility, unit price 0.5 per resource.
inline nlohmann::json tiny_json() {
  return nlohmann::json::parse(R"({
    "name": "tiny", "n_tasks": 1, "m_resources": 1,
    "states": [{"omega": "0", "arrivals": [1], "resource_arrivals": [1], "prob": 1}],
    "action_sets": {"default": [[[0]], [[1]]]},
    "cost": {"kind": "linear", "unit_price": [0.5]},
    "reward_mean": {"kind": "weighted_service", "weights": [1]},
    "noise": {"kind": "deterministic"},
    "utilities": [{"kind": "linear", "a": 1}],
    "bounds": {"A_max": 1, "h_max": 1, "r_max": 2, "mu_max": 1, "c_max": 0.5, "b_max": 1,
               "beta": 1, "beta_mu_l": 1, "beta_mu_u": 1}
  })");
}

// Two equiprobable states by default; otherwise like the two-queue example.
inline nlohmann::json two_state_json(double p0 = 0.5, double p1 = 0.5) {
  nlohmann::json j = nlohmann::json::parse(R"({
    "name": "two-state", "n_tasks": 2, "m_resources": 1,
    "action_sets": {"default": [[[0, 1]], [[1, 0]], [[0, 0]]]},
    "reward_mean": {"kind": "weighted_service", "weights": [1, 1]},
    "noise": {"kind": "two_point", "low": 0.5, "high": 1.5},
    "utilities": [{"kind": "scaled_log", "a": 1, "c": 1}, {"kind": "scaled_log", "a": 1, "c": 2}],
    "bounds": {"A_max": 1, "h_max": 1, "r_max": 2, "mu_max": 1, "c_max": 0, "b_max": 1,
               "beta": 2, "beta_mu_l": 1, "beta_mu_u": 1}
  })");
  j["states"] = {{{"omega", "a"}, {"arrivals", {1, 1}}, {"resource_arrivals", {1}}, {"prob", p0}},
                 {{"omega", "b"}, {"arrivals", {1, 0}}, {"resource_arrivals", {1}}, {"prob", p1}}};
  return j;
}

}  // namespace matchq::testing
