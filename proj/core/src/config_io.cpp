#include "matchq/config_io.hpp"

#include <cstdio>
#include <fstream>

namespace matchq {

using nlohmann::json;

namespace {

Vec read_vec(const json& j, std::size_t expected, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array");
  Vec v = j.get<Vec>();
  if (expected != 0 && v.size() != expected)
    throw ConfigError(std::string(what) + " must have length " + std::to_string(expected));
  return v;
}

Matrix read_matrix(const json& j, std::size_t M, std::size_t N) {
  if (!j.is_array() || j.size() != M) throw ConfigError("action matrix must have M rows");
  std::vector<double> vals;
  vals.reserve(M * N);
  for (const auto& row : j) {
    Vec r = read_vec(row, N, "action matrix row");
    vals.insert(vals.end(), r.begin(), r.end());
  }
  return Matrix(M, N, std::move(vals));
}

std::string omega_label(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  if (j.is_null()) return "";
  return j.dump();
}

/// Looks up a per-state entry: "by_state" list, "by_omega" map, or "default".
template <typename F>
auto per_state(const json& node, const std::vector<StateSpec>& states, std::size_t k, const char* what, F&& read) {
  if (node.contains("by_state")) {
    const auto& l = node.at("by_state");
    if (!l.is_array() || l.size() != states.size())
      throw ConfigError(std::string(what) + ".by_state must list one entry per state");
    return read(l[k]);
  }
  if (node.contains("by_omega")) {
    const auto& mp = node.at("by_omega");
    if (mp.contains(states[k].omega)) return read(mp.at(states[k].omega));
    if (!node.contains("default"))
      throw ConfigError(std::string(what) + ".by_omega has no entry for omega '" + states[k].omega + "'");
  }
  if (!node.contains("default")) throw ConfigError(std::string(what) + " needs by_state, by_omega or default");
  return read(node.at("default"));
}

Utility read_utility(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "scaled_log") return Utility::scaled_log(j.at("a").get<double>(), j.at("c").get<double>());
  if (kind == "linear") return Utility::linear(j.at("a").get<double>());
  throw ConfigError("unknown utility kind '" + kind + "'");
}

Bounds read_bounds(const json& j) {
  Bounds b;
  b.a_max = j.at("A_max").get<double>();
  b.h_max = j.at("h_max").get<double>();
  b.r_max = j.at("r_max").get<double>();
  b.mu_max = j.at("mu_max").get<double>();
  b.c_max = j.value("c_max", 0.0);
  b.b_max = j.at("b_max").get<double>();
  b.beta = j.at("beta").get<double>();
  b.beta_mu_l = j.value("beta_mu_l", 1.0);
  b.beta_mu_u = j.value("beta_mu_u", 1.0);
  if (!(b.beta_mu_l > 0.0)) throw ConfigError("bounds.beta_mu_l must be positive");
  return b;
}

NoiseModel read_noise(const json& j) {
  NoiseModel nm;
  const auto kind = j.value("kind", std::string("two_point"));
  if (kind == "two_point") {
    nm.kind = NoiseModel::Kind::two_point;
    nm.low = j.value("low", 0.5);
    nm.high = j.value("high", 1.5);
    if (!(nm.high > nm.low)) throw ConfigError("two_point noise needs high > low");
  } else if (kind == "deterministic") {
    nm.kind = NoiseModel::Kind::deterministic;
  } else if (kind == "truncated_gaussian") {
    nm.kind = NoiseModel::Kind::truncated_gaussian;
    nm.rel_sigma = j.value("rel_sigma", 0.5);
  } else {
    throw ConfigError("unknown noise kind '" + kind + "'");
  }
  return nm;
}

ThetaRule read_theta(const json& j) {
  ThetaRule t;
  const auto kind = j.value("kind", std::string("formula"));
  if (kind == "formula") {
    t.kind = ThetaRule::Kind::formula;
  } else if (kind == "affine") {
    t.kind = ThetaRule::Kind::affine;
    t.a = j.at("a").get<double>();
    t.b = j.at("b").get<double>();
    t.q_offset = j.at("q_offset").get<double>();
    t.h_offset = j.at("h_offset").get<double>();
  } else if (kind == "fixed") {
    t.kind = ThetaRule::Kind::fixed;
    t.theta1 = j.at("theta1").get<double>();
    t.theta2 = j.at("theta2").get<double>();
  } else {
    throw ConfigError("unknown theta_rule kind '" + kind + "'");
  }
  return t;
}

ZetaRule read_zeta(const json& j) {
  ZetaRule z;
  if (j.is_number()) {
    z.kind = ZetaRule::Kind::explicit_value;
    z.value = j.get<double>();
  } else if (j.is_string() && j.get<std::string>() == "log_squared") {
    z.kind = ZetaRule::Kind::log_squared;
  } else if (j.is_string() && j.get<std::string>() == "general") {
    z.kind = ZetaRule::Kind::general;
  } else {
    throw ConfigError("zeta must be a number, \"log_squared\" or \"general\"");
  }
  return z;
}

/// Row-major M x N weight matrix used by linear service and reward maps.
using Weights = std::vector<double>;

}  // namespace

std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::vector<Weights> read_weights(const json* node, const std::vector<StateSpec>& states, std::size_t M,
                                  std::size_t N, double fill, const char* what) {
  std::vector<Weights> out(states.size(), Weights(M * N, fill));
  if (!node) return out;
  json n = *node;
  if (n.contains("weights")) n["default"] = n.at("weights");
  if (!(n.contains("default") || n.contains("by_state") || n.contains("by_omega"))) return out;
  for (std::size_t k = 0; k < states.size(); ++k) {
    out[k] = per_state(n, states, k, what, [&](const json& w) {
      const Matrix mat = read_matrix(w, M, N);
      return Weights(mat.values().begin(), mat.values().end());
    });
  }
  return out;
}

}  // namespace

SystemConfig config_from_json(const json& doc) {
  try {
    ConfigSpec spec;
    spec.name = doc.value("name", std::string("unnamed"));
    spec.n_tasks = doc.at("n_tasks").get<std::size_t>();
    spec.m_resources = doc.at("m_resources").get<std::size_t>();
    const std::size_t N = spec.n_tasks;
    const std::size_t M = spec.m_resources;
    if (N == 0 || M == 0) throw ConfigError("n_tasks and m_resources must be positive");

    for (const auto& s : doc.at("states")) {
      StateSpec st;
      st.arrivals = read_vec(s.at("arrivals"), N, "states[].arrivals");
      st.resource_arrivals = read_vec(s.at("resource_arrivals"), M, "states[].resource_arrivals");
      st.omega = s.contains("omega") ? omega_label(s.at("omega")) : "";
      st.prob = s.at("prob").get<double>();
      spec.states.push_back(std::move(st));
    }
    const std::size_t K = spec.states.size();
    if (K == 0) throw ConfigError("states must not be empty");

    const json& as = doc.at("action_sets");
    for (std::size_t k = 0; k < K; ++k) {
      spec.action_sets.push_back(per_state(as, spec.states, k, "action_sets", [&](const json& list) {
        if (!list.is_array()) throw ConfigError("action list must be an array");
        std::vector<Matrix> out;
        for (const auto& b : list) out.push_back(read_matrix(b, M, N));
        return out;
      }));
    }

    // Service: mu_n = sum_m w_mn b_mn (weights default to 1).
    const json* sv = doc.contains("service") ? &doc.at("service") : nullptr;
    if (sv && sv->value("kind", std::string("linear")) != "linear") throw ConfigError("service.kind must be 'linear'");
    auto service_w = read_weights(sv, spec.states, M, N, 1.0, "service");
    spec.service = [service_w, M, N](std::size_t k, const Matrix& b) {
      Vec mu(N, 0.0);
      const Weights& w = service_w[k];
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t n = 0; n < N; ++n) mu[n] += w[m * N + n] * b(m, n);
      return mu;
    };

    // Cost: c = sum_m p_m sum_n b_mn (zero when absent).
    std::vector<Vec> price(K, Vec(M, 0.0));
    if (doc.contains("cost")) {
      json c = doc.at("cost");
      if (c.value("kind", std::string("linear")) != "linear") throw ConfigError("cost.kind must be 'linear'");
      if (c.contains("unit_price")) c["default"] = c.at("unit_price");
      for (std::size_t k = 0; k < K; ++k)
        price[k] = per_state(c, spec.states, k, "cost", [&](const json& p) { return read_vec(p, M, "cost.unit_price"); });
    }
    spec.cost = [price, M](std::size_t k, const Matrix& b) {
      double c = 0.0;
      for (std::size_t m = 0; m < M; ++m) c += price[k][m] * b.row_sum(m);
      return c;
    };

    // Mean rewards per (k, action, n).
    std::vector<std::size_t> counts(K);
    for (std::size_t k = 0; k < K; ++k) counts[k] = spec.action_sets[k].size();
    RewardTable rt(counts, N, 0.0);
    const json& rm = doc.at("reward_mean");
    const auto rkind = rm.value("kind", std::string("weighted_service"));
    if (rkind == "weighted_service") {
      // r_n = w_n * mu_n with one weight per task.
      json node = rm;
      if (rm.contains("weights")) node["default"] = rm.at("weights");
      for (std::size_t k = 0; k < K; ++k) {
        const Vec w = per_state(node, spec.states, k, "reward_mean", [&](const json& x) {
          return read_vec(x, N, "reward_mean weights");
        });
        for (std::size_t a = 0; a < counts[k]; ++a) {
          const Vec mu = spec.service(k, spec.action_sets[k][a]);
          for (std::size_t n = 0; n < N; ++n) rt.at(k, a, n) = w[n] * mu[n];
        }
      }
    } else if (rkind == "table") {
      const json& vals = rm.at("values");
      if (!vals.is_array() || vals.size() != K) throw ConfigError("reward_mean.values must list one entry per state");
      for (std::size_t k = 0; k < K; ++k) {
        if (vals[k].size() != counts[k]) throw ConfigError("reward_mean.values[k] must list one row per action");
        for (std::size_t a = 0; a < counts[k]; ++a) {
          const Vec row = read_vec(vals[k][a], N, "reward_mean row");
          for (std::size_t n = 0; n < N; ++n) rt.at(k, a, n) = row[n];
        }
      }
    } else {
      throw ConfigError("unknown reward_mean kind '" + rkind + "'");
    }
    spec.reward_mean = std::move(rt);

    const auto ps = doc.value("partial_service", std::string("linear"));
    if (ps == "linear") spec.partial_service = PartialService::linear;
    else if (ps == "all_or_nothing") spec.partial_service = PartialService::all_or_nothing;
    else throw ConfigError("unknown partial_service '" + ps + "'");

    if (doc.contains("noise")) spec.noise = read_noise(doc.at("noise"));
    for (const auto& u : doc.at("utilities")) spec.utilities.push_back(read_utility(u));
    spec.bounds = read_bounds(doc.at("bounds"));
    if (doc.contains("gamma_grid")) spec.gamma_domain.grid = read_vec(doc.at("gamma_grid"), 0, "gamma_grid");
    if (doc.contains("theta_rule")) spec.theta_rule = read_theta(doc.at("theta_rule"));
    if (doc.contains("zeta")) spec.zeta_rule = read_zeta(doc.at("zeta"));
    spec.hash = content_hash(doc.dump());
    return SystemConfig(std::move(spec));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

SystemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

}  // namespace matchq
