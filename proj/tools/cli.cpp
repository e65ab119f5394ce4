#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "matchq/config_io.hpp"
#include "matchq/learning.hpp"
#include "matchq/oracle.hpp"
#include "matchq/queueing.hpp"
#include "matchq/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace matchq::cli {

std::uint64_t default_seed() {
  const char* env = std::getenv("MATCHQ_SEED");
  if (env == nullptr) return 1;
  std::uint64_t v = 0;
  const std::string_view s(env);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return 1;
  return v;
}

std::string sweep_csv_line(const SweepRow& row) {
  std::string line = row.policy + "," + format_double(row.V) + "," + std::to_string(row.seed) + ",";
  if (row.failed) return line + "NA,NA,NA,NA,NA,failed";
  line += format_double(row.f_av) + "," + format_double(row.mean_Q) + "," + format_double(row.mean_H) + "," +
          format_double(row.mean_d) + "," + format_double(row.drop_fraction) + ",";
  line += row.t_conv ? std::to_string(*row.t_conv) : std::string("NA");
  return line;
}

namespace {

// Config problems (exit 1) are separated from failures raised while running (exit 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

SystemConfig load_checked(const std::string& path) {
  SystemConfig cfg = load_config(path);
  const auto violations = validate_config(cfg);
  if (!violations.empty()) {
    std::string msg = path + ": invalid configuration";
    for (const auto& v : violations) msg += "\n  " + v.code + ": " + v.message;
    throw ConfigError(msg);
  }
  return cfg;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
}

struct PolicyArgs {
  std::string policy = "ram";
  std::optional<double> delta_r;
  std::string rewards_file;
  std::string states_file;
};

PolicySpec build_policy(const PolicyArgs& a, const SystemConfig& cfg) {
  PolicySpec p = parse_policy(a.policy);
  if (a.delta_r) {
    if (p.kind == PolicyKind::ram) throw UsageError("--delta-r needs an lram or dram policy");
    p.learners.reward_source = LearnerSpec::RewardSource::perturbed;
    p.learners.delta_r = *a.delta_r;
  }
  if (!a.rewards_file.empty()) {
    if (p.kind == PolicyKind::ram) throw UsageError("--rewards needs an lram or dram policy");
    json j = read_json_file(a.rewards_file);
    p.learners.reward_source = LearnerSpec::RewardSource::provided;
    p.learners.rewards = reward_estimate_from_json(j.contains("estimate") ? j["estimate"] : j, cfg);
  }
  if (!a.states_file.empty()) {
    if (p.kind != PolicyKind::dram) throw UsageError("--states needs a dram policy");
    json j = read_json_file(a.states_file);
    p.learners.state_source = LearnerSpec::StateSource::provided;
    p.learners.states = state_estimate_from_json(j.contains("estimate") ? j["estimate"] : j, cfg);
  }
  return p;
}

std::string policy_label(const PolicyArgs& a, const PolicySpec& p) {
  if (a.delta_r && p.kind == PolicyKind::lram) return "lram-" + format_double(*a.delta_r);
  if (a.delta_r) return a.policy + "-delta" + format_double(*a.delta_r);
  return a.policy;
}

std::string cell_stem(const std::string& policy, double V, std::uint64_t seed) {
  return policy + "_V" + format_double(V) + "_seed" + std::to_string(seed);
}

// ---- run

struct RunArgs {
  std::string config;
  PolicyArgs pol;
  double V = 100.0;
  std::size_t horizon = 100000;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::optional<double> conv_radius;
  bool lenient = false;
};

int cmd_run(const RunArgs& a, std::ostream& out) {
  const SystemConfig cfg = load_checked(a.config);
  const PolicySpec policy = build_policy(a.pol, cfg);
  SimOptions so;
  so.strict = !a.lenient;
  const SimTrace trace = run_sim(cfg, policy, a.V, a.horizon, a.seed, so);
  Metrics m = summarize(trace, cfg, default_burn_in(trace.size()));
  if (a.conv_radius) {
    const ConvergenceTarget target = true_convergence_target(cfg, a.V);
    m.convergence_time = convergence_time(trace, target.point_for(trace.header.constants), *a.conv_radius);
  }

  const std::string stem = cell_stem(policy_label(a.pol, policy), a.V, a.seed);
  const fs::path dir(a.out_dir);
  std::ostringstream csv;
  write_trace_csv(trace, csv);
  write_text(dir / (stem + ".csv"), csv.str());

  json doc = {{"schema", kMetricsSchema},
              {"config", a.config},
              {"config_name", cfg.name()},
              {"horizon", a.horizon},
              {"header", to_json(trace.header)},
              {"metrics", to_json(m)}};
  if (a.conv_radius) doc["conv_radius"] = *a.conv_radius;
  write_text(dir / (stem + ".json"), doc.dump(2) + "\n");

  out << "wrote " << (dir / (stem + ".csv")).string() << " and " << (dir / (stem + ".json")).string() << "\n";
  out << "f_av " << format_double(m.f_av) << "  meanQ " << format_double(m.mean_Q_total) << "  meanH "
      << format_double(m.mean_H_total) << "  drops " << m.drops << "\n";
  return ok;
}

// ---- sweep

struct SweepArgs {
  std::string config;
  std::vector<std::string> policies{"lram-0", "dram"};
  std::vector<double> v_list{10, 20, 50, 80, 100};
  std::size_t n_seeds = 10;
  std::vector<std::uint64_t> seed_list;
  std::uint64_t base_seed = 1;
  std::size_t horizon = 100000;
  std::string out = "sweep.csv";
  std::size_t jobs = 0;
  std::optional<double> conv_radius;
  bool no_conv = false;
  std::string trace_dir;
};

template <class F>
void parallel_for(std::size_t n, std::size_t jobs, F&& body) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) body(i);
  };
  std::vector<std::jthread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
}

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  const SystemConfig cfg = load_checked(a.config);
  std::vector<std::uint64_t> seeds = a.seed_list;
  if (seeds.empty())
    for (std::size_t i = 0; i < a.n_seeds; ++i) seeds.push_back(a.base_seed + i);
  if (a.policies.empty() || a.v_list.empty() || seeds.empty()) throw UsageError("empty sweep");
  std::vector<PolicySpec> specs;
  for (const auto& id : a.policies) specs.push_back(parse_policy(id));

  // Convergence targets per V; the radius defaults to the RAM residual at the largest V.
  std::map<double, ConvergenceTarget> targets;
  std::optional<double> D = a.conv_radius;
  if (!a.no_conv) {
    for (double V : a.v_list) targets.emplace(V, true_convergence_target(cfg, V));
    if (!D) {
      const double v_max = *std::max_element(a.v_list.begin(), a.v_list.end());
      D = fit_convergence_radius(cfg, v_max, seeds.size(), a.horizon, targets.at(v_max));
      err << "conv radius " << format_double(*D) << " (RAM residual at V=" << format_double(v_max) << ")\n";
    }
  }

  struct Cell {
    std::size_t p;
    double V;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (std::size_t p = 0; p < specs.size(); ++p)
    for (double V : a.v_list)
      for (auto s : seeds) cells.push_back({p, V, s});

  std::vector<SweepRow> rows(cells.size());
  std::mutex err_mu;
  const std::size_t jobs = a.jobs ? a.jobs : std::max(1u, std::thread::hardware_concurrency());
  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    const Cell& c = cells[i];
    SweepRow& row = rows[i];
    row.policy = a.policies[c.p];
    row.V = c.V;
    row.seed = c.seed;
    try {
      const SimTrace tr = run_sim(cfg, specs[c.p], c.V, a.horizon, c.seed);
      const Metrics m = summarize(tr, cfg, default_burn_in(tr.size()));
      row.f_av = m.f_av;
      row.mean_Q = m.mean_Q_total;
      row.mean_H = m.mean_H_total;
      row.mean_d = m.mean_d_total;
      row.drop_fraction = m.drop_fraction;
      if (D) row.t_conv = convergence_time(tr, targets.at(c.V).point_for(tr.header.constants), *D);
      if (!a.trace_dir.empty()) {
        std::ostringstream csv;
        write_trace_csv(tr, csv);
        write_text(fs::path(a.trace_dir) / (cell_stem(row.policy, c.V, c.seed) + ".csv"), csv.str());
      }
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
      std::lock_guard lock(err_mu);
      err << "cell " << row.policy << " V=" << format_double(c.V) << " seed=" << c.seed << " failed: " << e.what()
          << "\n";
    }
  });

  std::string text = std::string(kSweepHeader) + "\r\n";
  std::size_t failed = 0;
  for (const auto& r : rows) {
    text += sweep_csv_line(r) + "\r\n";
    failed += r.failed ? 1 : 0;
  }
  if (a.out == "-")
    out << text;
  else {
    write_text(a.out, text);
    out << "wrote " << a.out << " (" << rows.size() << " rows, " << failed << " failed)\n";
  }
  return failed ? runtime_assertion : ok;
}

// ---- oracle

struct OracleArgs {
  std::string config;
  double V = 1.0;
  std::string cache_dir = ".matchq-cache";
  bool no_cache = false;
};

int cmd_oracle(const OracleArgs& a, std::ostream& out) {
  const SystemConfig cfg = load_checked(a.config);
  const fs::path cache = fs::path(a.cache_dir) / ("oracle_" + cfg.hash() + "_V" + format_double(a.V) + ".json");
  if (!a.no_cache && fs::exists(cache)) {
    json j = read_json_file(cache.string());
    if (j.value("schema", "") == kOracleSchema) {
      out << j.dump(2) << "\n";
      return ok;
    }
  }
  const OfflineSolution sol = solve_offline_optimal(cfg, a.V);
  const ConvergenceTarget target = true_convergence_target(cfg, a.V);
  json doc = {{"schema", kOracleSchema},
              {"config_hash", cfg.hash()},
              {"V", a.V},
              {"f_star", sol.f_star},
              {"V_f_star", a.V * sol.f_star},
              {"r_bar", sol.r_bar},
              {"oracle", to_json(sol)},
              {"alpha_star", to_json(target.raw)},
              {"g_alpha_star", target.dual.g_value},
              {"duality_gap", target.dual.g_value - a.V * sol.f_star},
              {"dual", to_json(target.dual)}};
  if (!a.no_cache) write_text(cache, doc.dump(2) + "\n");
  out << doc.dump(2) << "\n";
  return ok;
}

// ---- learn

struct LearnArgs {
  std::string config;
  std::string learner = "tbs";
  std::size_t threshold = 0;
  double V = 100.0;
  std::uint64_t seed = 1;
  std::string out = "-";
};

int cmd_learn(const LearnArgs& a, std::ostream& out) {
  const SystemConfig cfg = load_checked(a.config);
  const std::size_t th = a.threshold ? a.threshold : default_sample_threshold(a.V);
  json doc = {{"schema", kLearnSchema}, {"config_hash", cfg.hash()}, {"learner", a.learner}, {"seed", a.seed},
              {"threshold", th}};
  if (a.learner == "tbs") {
    CounterRng rng(a.seed, Stream::reward_learning);
    doc["estimate"] = to_json(run_tbs(cfg, th, rng));
  } else if (a.learner == "tls") {
    CounterRng rng(a.seed, Stream::state_learning);
    doc["estimate"] = to_json(run_tls(cfg, th, rng));
  } else {
    throw UsageError("unknown learner '" + a.learner + "' (expected tbs or tls)");
  }
  if (a.out == "-")
    out << doc.dump(2) << "\n";
  else
    write_text(a.out, doc.dump(2) + "\n");
  return ok;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Matching with task and resource queues: simulation, sweeps, oracles."};
  app.require_subcommand(1);
  const std::uint64_t seed0 = default_seed();

  RunArgs ra;
  ra.seed = seed0;
  auto* run = app.add_subcommand("run", "Simulate one policy and write its trace and metrics");
  run->add_option("config", ra.config, "Instance JSON")->required();
  run->add_option("--policy", ra.pol.policy, "ram | lram | lram-<delta> | lram-tbs | dram | dram-state");
  run->add_option("--v", ra.V, "Penalty weight V");
  run->add_option("--horizon", ra.horizon, "Control slots")->check(CLI::PositiveNumber);
  run->add_option("--seed", ra.seed, "Seed (default $MATCHQ_SEED or 1)");
  run->add_option("--delta-r", ra.pol.delta_r, "Perturb true rewards by +-delta instead of learning them");
  run->add_option("--rewards", ra.pol.rewards_file, "Reward estimate JSON from `learn --learner tbs`");
  run->add_option("--states", ra.pol.states_file, "State estimate JSON from `learn --learner tls`");
  run->add_option("--out", ra.out_dir, "Output directory");
  run->add_option("--conv-radius", ra.conv_radius, "Also report the convergence time for this radius");
  run->add_flag("--lenient", ra.lenient, "Do not stop on broken per-slot guarantees");

  SweepArgs sa;
  sa.base_seed = seed0;
  auto* sweep = app.add_subcommand("sweep", "Run a policy x V x seed grid and write a summary CSV");
  sweep->add_option("config", sa.config, "Instance JSON")->required();
  sweep->add_option("--policies", sa.policies, "Policy ids")->delimiter(',');
  sweep->add_option("--v-list", sa.v_list, "V values")->delimiter(',');
  sweep->add_option("--seeds", sa.n_seeds, "Number of seeds, counting up from --seed");
  sweep->add_option("--seed", sa.base_seed, "First seed (default $MATCHQ_SEED or 1)");
  sweep->add_option("--seed-list", sa.seed_list, "Explicit seeds")->delimiter(',');
  sweep->add_option("--horizon", sa.horizon, "Control slots per cell")->check(CLI::PositiveNumber);
  sweep->add_option("--out", sa.out, "Summary CSV path, - for stdout");
  sweep->add_option("--jobs", sa.jobs, "Parallel cells (default: hardware threads)");
  sweep->add_option("--conv-radius", sa.conv_radius, "Convergence radius D (default: fitted from RAM)");
  sweep->add_flag("--no-conv", sa.no_conv, "Skip convergence times");
  sweep->add_option("--trace-dir", sa.trace_dir, "Also write each cell's trace here");

  OracleArgs oa;
  auto* oracle = app.add_subcommand("oracle", "Best stationary policy and the true-statistics dual");
  oracle->add_option("config", oa.config, "Instance JSON")->required();
  oracle->add_option("--v", oa.V, "Penalty weight V");
  oracle->add_option("--cache-dir", oa.cache_dir, "Cache directory");
  oracle->add_flag("--no-cache", oa.no_cache, "Neither read nor write the cache");

  LearnArgs la;
  la.seed = seed0;
  auto* learn = app.add_subcommand("learn", "Run a learner and write its estimate as JSON");
  learn->add_option("config", la.config, "Instance JSON")->required();
  learn->add_option("--learner", la.learner, "tbs (rewards) | tls (state distribution)");
  learn->add_option("--threshold", la.threshold, "Samples per pair (tbs) or slots (tls); 0: ceil(log(V)^2)");
  learn->add_option("--v", la.V, "V used for the default threshold");
  learn->add_option("--seed", la.seed, "Seed (default $MATCHQ_SEED or 1)");
  learn->add_option("--out", la.out, "Output path, - for stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return config_error;
  }

  try {
    if (*run) return cmd_run(ra, out);
    if (*sweep) return cmd_sweep(sa, out, err);
    if (*oracle) return cmd_oracle(oa, out);
    if (*learn) return cmd_learn(la, out);
  } catch (const UnderflowError& e) {
    err << "runtime assertion: " << e.what() << "\n";
    return runtime_assertion;
  } catch (const InvariantError& e) {
    err << "runtime assertion: " << e.what() << "\n";
    return runtime_assertion;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const OracleError& e) {
    err << "oracle: " << e.what() << "\n";
    return config_error;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return config_error;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return config_error;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return runtime_assertion;
  }
  return ok;
}

}  // namespace matchq::cli
