#pragma once

#include <cstdint>
#include <span>

namespace matchq {

/// Named draw streams. Each phase of a run reads its own stream so that,
/// e.g., changing the learning threshold never shifts the control-phase draws.
enum class Stream : std::uint64_t {
  control_state = 0,
  control_reward = 1,
  reward_learning = 2,
  state_learning = 3,
  perturbation = 4,
};

/// Counter-based generator.
///
/// Draw i (0-based) of the pair (seed, stream) is
///   key  = mix(seed ^ mix(stream + 0x632BE59BD9B4E019))
///   x_i  = mix(key + (i + 1) * 0x9E3779B97F4A7C15)
/// where mix is the SplitMix64 finalizer. Uniform doubles take the top 53 bits.
/// Nothing depends on the standard library distributions, so a trace produced
/// here can be reproduced bit-for-bit by any other implementation of the rule.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;
  CounterRng(std::uint64_t seed, Stream stream) noexcept
      : CounterRng(seed, static_cast<std::uint64_t>(stream)) {}

  result_type operator()() noexcept;
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  /// Uniform on [0, 1).
  double uniform() noexcept;
  /// Fair coin.
  bool coin() noexcept { return (operator()() >> 63) != 0; }

  std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64_mix(std::uint64_t x) noexcept;

/// Index i with cdf[i-1] <= u < cdf[i] for one uniform u; cdf must end at ~1.
/// The last index absorbs rounding slack.
std::size_t sample_from_cdf(CounterRng& rng, std::span<const double> cdf) noexcept;

}  // namespace matchq
