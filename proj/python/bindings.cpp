#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rdprune/allocator.hpp"
#include "rdprune/calibration.hpp"
#include "rdprune/engine.hpp"
#include "rdprune/error.hpp"
#include "rdprune/grid.hpp"
#include "rdprune/io.hpp"
#include "rdprune/oracle.hpp"
#include "rdprune/pruner.hpp"
#include "rdprune/rd_curve.hpp"
#include "rdprune/schedule.hpp"

namespace py = pybind11;
using namespace rdprune;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const FloatArray& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(shape, std::vector<float>(a.data(), a.data() + a.size()));
}

py::array_t<float> to_array(const Tensor& t) {
  py::array_t<float> out(t.shape());
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

DistortionMode mode_of(const std::string& s) {
  if (s == "mean") return DistortionMode::mean;
  if (s == "worst" || s == "worst-case") return DistortionMode::worst_case;
  throw ArgumentError("mode must be 'mean' or 'worst'");
}

Solver solver_of(const std::string& s) {
  if (s == "exhaustive") return Solver::exhaustive;
  if (s == "ternary") return Solver::ternary;
  throw ArgumentError("solver must be 'exhaustive' or 'ternary'");
}

BudgetOptions budget_options(std::optional<std::size_t> unit, std::optional<std::size_t> bins) {
  BudgetOptions o;
  o.unit = unit;
  o.bins = bins;
  return o;
}

CalibrationSet calib_from_array(const FloatArray& a) {
  if (a.ndim() < 2) throw ArgumentError("calibration array needs a leading sample axis");
  CalibrationSet c;
  Shape shape(a.shape() + 1, a.shape() + a.ndim());
  const std::size_t n = shape_numel(shape);
  for (py::ssize_t s = 0; s < a.shape(0); ++s)
    c.samples.emplace_back(shape, std::vector<float>(a.data() + s * n, a.data() + (s + 1) * n));
  validate(c);
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Layer-adaptive magnitude pruning from rate-distortion curves";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ArgumentError>(m, "ArgumentError", error.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", error.ptr());
  py::register_exception<IoError>(m, "IoError", error.ptr());
  auto format = py::register_exception<FormatError>(m, "FormatError", error.ptr());
  py::register_exception<ChecksumError>(m, "ChecksumError", format.ptr());
  py::register_exception<UnknownLayerKindError>(m, "UnknownLayerKindError", format.ptr());
  py::register_exception<ShapeInconsistencyError>(m, "ShapeInconsistencyError", format.ptr());
  py::register_exception<InfeasibleError>(m, "InfeasibleError", error.ptr());
  py::register_exception<GuardError>(m, "GuardError", error.ptr());

  py::class_<ModelGraph>(m, "Model")
      .def_readonly("name", &ModelGraph::name)
      .def_readonly("input_shape", &ModelGraph::input_shape)
      .def_property_readonly("total_prunable", &ModelGraph::total_prunable)
      .def_property_readonly("prunable_layers", &ModelGraph::prunable_layers)
      .def_property_readonly("layer_kinds",
                             [](const ModelGraph& g) {
                               std::vector<std::string> k;
                               for (const auto& l : g.layers) k.emplace_back(to_string(l.kind));
                               return k;
                             })
      .def("weight",
           [](const ModelGraph& g, std::size_t layer) -> py::object {
             const auto& l = g.layers.at(layer);
             return l.weight ? py::object(to_array(*l.weight)) : py::none();
           })
      .def("__len__", [](const ModelGraph& g) { return g.layers.size(); });

  py::class_<CalibrationSet>(m, "Calibration")
      .def("__len__", &CalibrationSet::size)
      .def_property_readonly("sample_shape", &CalibrationSet::sample_shape)
      .def("to_numpy", [](const CalibrationSet& c) {
        Shape shape{c.size()};
        for (auto d : c.sample_shape()) shape.push_back(d);
        py::array_t<float> out(shape);
        float* dst = out.mutable_data();
        for (const auto& s : c.samples) dst = std::copy(s.data().begin(), s.data().end(), dst);
        return out;
      });

  py::class_<SparsityGrid>(m, "Grid")
      .def_static("for_model", &SparsityGrid::for_model, py::arg("model"), py::arg("levels"),
                  py::arg("count_existing_zeros") = false)
      .def_property_readonly("levels", &SparsityGrid::levels)
      .def_property_readonly("layer_count", &SparsityGrid::layer_count)
      .def("count", &SparsityGrid::count);

  py::class_<RDCurve>(m, "Curve")
      .def_readonly("layer_index", &RDCurve::layer_index)
      .def_property_readonly("distortion",
                             [](const RDCurve& c) {
                               std::vector<double> d;
                               for (const auto& p : c.points) d.push_back(p.distortion);
                               return py::array_t<double>(d.size(), d.data());
                             })
      .def_property_readonly("pruned_count",
                             [](const RDCurve& c) {
                               std::vector<std::size_t> d;
                               for (const auto& p : c.points) d.push_back(p.pruned_count);
                               return d;
                             })
      .def_property_readonly("valid", [](const RDCurve& c) {
        std::vector<bool> d;
        for (const auto& p : c.points) d.push_back(p.valid);
        return d;
      });

  py::class_<PlanEntry>(m, "PlanEntry")
      .def_readonly("layer_index", &PlanEntry::layer_index)
      .def_readonly("size", &PlanEntry::size)
      .def_readonly("pruned", &PlanEntry::pruned)
      .def_readonly("grid_index", &PlanEntry::grid_index);

  py::class_<AllocationPlan>(m, "Plan")
      .def_readonly("layers", &AllocationPlan::layers)
      .def_readonly("total_prunable", &AllocationPlan::total_prunable)
      .def_readonly("requested_total", &AllocationPlan::requested_total)
      .def_readonly("achieved_total", &AllocationPlan::achieved_total)
      .def_readonly("unit", &AllocationPlan::unit)
      .def_readonly("bins", &AllocationPlan::bins)
      .def_readonly("objective", &AllocationPlan::objective)
      .def_property_readonly("achieved_sparsity", &AllocationPlan::achieved_sparsity)
      .def("to_json", [](const AllocationPlan& p) { return io::plan_to_json(p); })
      .def_static("from_json", [](const std::string& s) { return io::plan_from_json(s); });

  m.def("load_model", [](const std::filesystem::path& p) { return io::load_model(p); });
  m.def("save_model", [](const ModelGraph& g, const std::filesystem::path& p) { io::save_model(g, p); });
  m.def("load_calib", [](const std::filesystem::path& p) { return io::load_calib(p); });
  m.def("save_calib", [](const CalibrationSet& c, const std::filesystem::path& p) { io::save_calib(c, p); });
  m.def("calibration_from_numpy", &calib_from_array, py::arg("samples"));
  m.def("white_noise_calib", &gen_white_noise_calib, py::arg("shape"), py::arg("count"),
        py::arg("seed"));

  m.def("forward", [](const ModelGraph& g, const FloatArray& x) { return to_array(forward(g, to_tensor(x))); },
        py::arg("model"), py::arg("input"));
  m.def("prune_layer", &prune_layer, py::arg("model"), py::arg("layer"), py::arg("k"));
  m.def("apply_plan", &apply_plan, py::arg("model"), py::arg("plan"));
  m.def("measure_distortion",
        [](const ModelGraph& dense, const ModelGraph& pruned, const CalibrationSet& c,
           const std::string& mode) { return measure_distortion(dense, pruned, c, mode_of(mode)); },
        py::arg("dense"), py::arg("pruned"), py::arg("calib"), py::arg("mode") = "mean");

  m.def("gen_curves",
        [](const ModelGraph& g, const SparsityGrid& grid, const CalibrationSet& c,
           const std::string& mode, bool filter, unsigned threads) {
          CurveOptions o;
          o.mode = mode_of(mode);
          o.filter = filter;
          o.threads = threads;
          py::gil_scoped_release release;
          return gen_all_curves(g, grid, c, o);
        },
        py::arg("model"), py::arg("grid"), py::arg("calib"), py::arg("mode") = "mean",
        py::arg("filter") = true, py::arg("threads") = 0);

  m.def("allocate",
        [](const std::vector<RDCurve>& curves, const SparsityGrid& grid, double ratio,
           const std::string& solver, std::optional<std::size_t> unit,
           std::optional<std::size_t> bins) {
          const auto budget = make_budget(grid, ratio, budget_options(unit, bins));
          return allocate(curves, grid, budget, solver_of(solver)).plan;
        },
        py::arg("curves"), py::arg("grid"), py::arg("ratio"), py::arg("solver") = "exhaustive",
        py::arg("unit") = py::none(), py::arg("bins") = py::none());

  m.def("brute_force_allocate",
        [](const std::vector<RDCurve>& curves, const SparsityGrid& grid, double ratio,
           std::optional<std::size_t> unit) {
          return brute_force_allocate(curves, grid, make_budget(grid, ratio, budget_options(unit, std::nullopt)));
        },
        py::arg("curves"), py::arg("grid"), py::arg("ratio"), py::arg("unit") = py::none());

  m.def("iterative_schedule",
        [](const ModelGraph& g, const CalibrationSet& c, std::size_t rounds, double fraction,
           std::size_t levels) {
          ScheduleOptions o;
          o.levels = levels;
          ScheduleResult r;
          {
            py::gil_scoped_release release;
            r = iterative_schedule(g, c, rounds, fraction, o);
          }
          py::list plans;
          for (const auto& round : r.rounds) plans.append(round.plan);
          return py::make_tuple(plans, r.model);
        },
        py::arg("model"), py::arg("calib"), py::arg("rounds"), py::arg("fraction"),
        py::arg("levels") = 100);

  m.def("additivity_sweep",
        [](const ModelGraph& g, const CalibrationSet& c, std::vector<double> sparsities) {
          const auto r = approximation_error_sweep(g, c, sparsities);
          py::list rows;
          for (const auto& rec : r.records)
            rows.append(py::dict(py::arg("layers") = rec.layers, py::arg("sparsity") = rec.sparsity,
                                 py::arg("sum_individual") = rec.sum_individual,
                                 py::arg("joint") = rec.joint,
                                 py::arg("relative_residual") = rec.relative_residual));
          return rows;
        },
        py::arg("model"), py::arg("calib"), py::arg("sparsities"));
  m.def("pearson", [](std::vector<double> x, std::vector<double> y) { return pearson_correlation(x, y); });
}
