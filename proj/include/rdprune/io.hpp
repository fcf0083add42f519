#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rdprune/allocator.hpp"
#include "rdprune/calibration.hpp"
#include "rdprune/model.hpp"
#include "rdprune/oracle.hpp"
#include "rdprune/plan.hpp"
#include "rdprune/rd_curve.hpp"

namespace rdprune::io {

namespace fs = std::filesystem;

/// `path` is either a model.json manifest or a directory holding one. The
/// blob is resolved relative to the manifest. Throws IoError,
/// ChecksumError, UnknownLayerKindError or ShapeInconsistencyError.
ModelGraph load_model(const fs::path& path);

/// Writes `dir`/model.json and `dir`/model.bin, creating `dir` if needed.
void save_model(const ModelGraph& model, const fs::path& dir);

CalibrationSet load_calib(const fs::path& path);
void save_calib(const CalibrationSet& calib, const fs::path& path);

void write_curves_csv(const std::vector<RDCurve>& curves, const fs::path& path);
std::vector<RDCurve> read_curves_csv(const fs::path& path);

std::string plan_to_json(const AllocationPlan& plan);
AllocationPlan plan_from_json(const std::string& text);
void write_plan_json(const AllocationPlan& plan, const fs::path& path);
AllocationPlan read_plan_json(const fs::path& path);

void write_dp_trace_csv(const DPTable& table, const fs::path& path);
void write_additivity_csv(const std::vector<AdditivityRecord>& records,
                          const fs::path& path);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

}  // namespace rdprune::io
