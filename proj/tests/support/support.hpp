#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rdprune/allocator.hpp"
#include "rdprune/calibration.hpp"
#include "rdprune/model.hpp"
#include "rdprune/rd_curve.hpp"

namespace testsupport {

namespace fs = std::filesystem;

fs::path fixture(const std::string& name);
std::vector<std::string> fixture_names();

/// Fresh empty directory under the system temp dir.
fs::path scratch_dir(const std::string& tag);

/// Straightforward forward pass written without the engine: explicit
/// padded copies for convolution, no shortcuts. Double throughout.
std::vector<double> naive_forward(const rdprune::ModelGraph& model,
                                  const rdprune::Tensor& input);

/// Squared output error of two models by naive_forward.
double naive_sq_error(const rdprune::ModelGraph& a, const rdprune::ModelGraph& b,
                      const rdprune::Tensor& input);

/// Small random dense/conv model with optional pooling and skip; weights
/// and shapes drawn from `seed`.
rdprune::ModelGraph random_model(std::uint64_t seed);
rdprune::Tensor random_input(const rdprune::Shape& shape, std::uint64_t seed);

/// Every plan invariant, as human-readable violations (empty when valid):
/// 0 <= p_i <= n_i, p_i is a valid grid point, achieved total is the sum,
/// at most B bins consumed and recorded, |achieved - T| <= l * unit when all
/// B bins are used, objective is the curve sum.
std::vector<std::string> plan_violations(const rdprune::AllocationPlan& plan,
                                         const std::vector<rdprune::RDCurve>& curves,
                                         const rdprune::SparsityGrid& grid,
                                         const rdprune::BudgetSpec& budget);

/// Two dense layers 4 -> 3 -> 2 with a relu between; last bias optional.
rdprune::ModelGraph tiny_mlp(bool zero_last_bias);

std::string slurp(const fs::path& path);

/// Runs the CLI binary with `args`; returns the exit status and captures
/// stdout into `out` when given.
int run_cli(const std::string& args, std::string* out = nullptr);

}  // namespace testsupport
