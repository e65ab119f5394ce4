#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace matchq::cli {

inline constexpr const char* kMetricsSchema = "matchq.metrics/1";
inline constexpr const char* kOracleSchema = "matchq.oracle/1";
inline constexpr const char* kLearnSchema = "matchq.learn/1";
inline constexpr const char* kSweepHeader = "policy,V,seed,f_av,meanQ,meanH,meand,dropfrac,T_conv";

enum ExitCode : int { ok = 0, config_error = 1, runtime_assertion = 2 };

/// Default seed: MATCHQ_SEED if set and numeric, else 1.
std::uint64_t default_seed();

/// One row of the sweep summary.
struct SweepRow {
  std::string policy;
  double V = 0.0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double f_av = 0.0, mean_Q = 0.0, mean_H = 0.0, mean_d = 0.0, drop_fraction = 0.0;
  std::optional<std::size_t> t_conv;
};

std::string sweep_csv_line(const SweepRow& row);

/// Entry point shared by the executable and the tests. argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace matchq::cli
