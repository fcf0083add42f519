#include "rdprune/calibration.hpp"

#include <cmath>
#include <numbers>

#include "rdprune/error.hpp"

namespace rdprune {

const Shape& CalibrationSet::sample_shape() const {
  if (samples.empty()) throw ArgumentError("calibration set is empty");
  return samples.front().shape();
}

void validate(const CalibrationSet& calib) {
  if (calib.samples.empty()) throw ArgumentError("calibration set is empty");
  const Shape& shape = calib.samples.front().shape();
  for (std::size_t i = 1; i < calib.samples.size(); ++i) {
    if (calib.samples[i].shape() != shape)
      throw ArgumentError("calibration sample " + std::to_string(i) + " has shape " +
                          shape_str(calib.samples[i].shape()) + ", expected " +
                          shape_str(shape));
  }
}

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::next_open_unit() {
  // 53 random bits centred in their interval: never 0, never 1.
  return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

CalibrationSet gen_white_noise_calib(const Shape& shape, std::size_t count,
                                     std::uint64_t seed) {
  if (count == 0) throw ArgumentError("white-noise calibration needs count >= 1");
  if (shape.empty() || shape_numel(shape) == 0)
    throw ArgumentError("white-noise sample shape must be non-empty with positive dims");

  SplitMix64 rng(seed);
  const std::size_t per_sample = shape_numel(shape);
  // One continuous stream of normals, consumed sample-major; each Box-Muller
  // draw yields (r cos t, r sin t) in that order.
  bool have_spare = false;
  double spare = 0.0;
  auto next_normal = [&]() {
    if (have_spare) {
      have_spare = false;
      return spare;
    }
    const double u1 = rng.next_open_unit();
    const double u2 = rng.next_open_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare = r * std::sin(t);
    have_spare = true;
    return r * std::cos(t);
  };

  CalibrationSet calib;
  calib.source = {CalibrationSource::Kind::white_noise, seed};
  calib.samples.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    std::vector<float> data(per_sample);
    for (auto& v : data) v = static_cast<float>(next_normal());
    calib.samples.emplace_back(shape, std::move(data));
  }
  return calib;
}

}  // namespace rdprune
