#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rdprune/tensor.hpp"

namespace rdprune {

struct CalibrationSource {
  enum class Kind { real, white_noise };
  Kind kind = Kind::real;
  std::uint64_t seed = 0;  // meaningful for white_noise only
};

/// Non-empty list of model inputs sharing one shape.
struct CalibrationSet {
  std::vector<Tensor> samples;
  CalibrationSource source;

  std::size_t size() const noexcept { return samples.size(); }
  const Shape& sample_shape() const;
};

/// Throws ArgumentError if the set is empty or shapes differ.
void validate(const CalibrationSet& calib);

/// SplitMix64 stream; the reference generator for synthetic calibration data.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform double in the open interval (0, 1).
  double next_open_unit();

 private:
  std::uint64_t state_;
};

/// `count` samples of i.i.d. N(0,1) values (Box-Muller over SplitMix64, see
/// docs/FORMAT.md), sample-major, deterministic given `seed`.
CalibrationSet gen_white_noise_calib(const Shape& shape, std::size_t count,
                                     std::uint64_t seed);

}  // namespace rdprune
