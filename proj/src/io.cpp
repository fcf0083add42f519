#include "rdprune/io.hpp"

#include <zlib.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rdprune/error.hpp"

namespace rdprune::io {

namespace {

using json = nlohmann::ordered_json;

constexpr char kCalibMagic[8] = {'R', 'D', 'P', 'C', 'A', 'L', 'I', 'B'};
constexpr const char* kCurvesHeader = "layer_index,grid_index,pruned_count,distortion,valid_flag";

std::uint32_t crc32_of(const void* data, std::size_t bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, static_cast<const Bytef*>(data), static_cast<uInt>(bytes)));
}

void append_le(std::string& out, std::span<const float> values) {
  const std::size_t at = out.size();
  out.resize(at + values.size() * 4);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data() + at, values.data(), values.size() * 4);
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto bits = std::bit_cast<std::uint32_t>(values[i]);
      for (int b = 0; b < 4; ++b) out[at + 4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
  }
}

void append_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

std::uint32_t read_u32(const std::string& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + b])) << (8 * b);
  return v;
}

std::vector<float> read_floats(const std::string& in, std::size_t at, std::size_t count) {
  std::vector<float> out(count);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), in.data() + at, count * 4);
  } else {
    for (std::size_t i = 0; i < count; ++i) out[i] = std::bit_cast<float>(read_u32(in, at + 4 * i));
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json tensor_entry(const Tensor& t, std::string& blob) {
  const std::size_t offset = blob.size();
  append_le(blob, t.data());
  json e;
  e["shape"] = t.shape();
  e["offset"] = offset;
  e["count"] = t.size();
  e["crc32"] = crc32_of(blob.data() + offset, t.size() * 4);
  return e;
}

Tensor tensor_from(const json& e, const std::string& blob, const std::string& where) {
  Shape shape;
  std::size_t offset = 0, count = 0;
  std::uint32_t crc = 0;
  try {
    shape = e.at("shape").get<Shape>();
    offset = e.at("offset").get<std::size_t>();
    count = e.at("count").get<std::size_t>();
    crc = e.at("crc32").get<std::uint32_t>();
  } catch (const json::exception& ex) {
    throw FormatError(where + ": malformed tensor entry: " + ex.what());
  }
  if (shape.empty() || shape_numel(shape) == 0)
    throw ShapeInconsistencyError(where + ": tensor shape must have positive dims");
  if (shape_numel(shape) != count)
    throw ShapeInconsistencyError(where + ": shape " + shape_str(shape) + " needs " +
                                  std::to_string(shape_numel(shape)) + " floats, manifest says " +
                                  std::to_string(count));
  if (offset % 4 != 0 || offset > blob.size() || (blob.size() - offset) / 4 < count)
    throw ShapeInconsistencyError(where + ": shape " + shape_str(shape) + " needs " +
                                  std::to_string(count) + " floats at byte " +
                                  std::to_string(offset) + ", blob holds " +
                                  std::to_string(blob.size() / 4) + " floats");
  if (crc32_of(blob.data() + offset, count * 4) != crc)
    throw ChecksumError(where + ": checksum mismatch");
  auto data = read_floats(blob, offset, count);
  for (float v : data)
    if (!std::isfinite(v)) throw FormatError(where + ": non-finite value");
  return Tensor(std::move(shape), std::move(data));
}

fs::path manifest_path(const fs::path& path) {
  return fs::is_directory(path) ? path / "model.json" : path;
}

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path.string());
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("cannot write " + path.string());
}

ModelGraph load_model(const fs::path& path) {
  const fs::path manifest = manifest_path(path);
  json doc;
  try {
    doc = json::parse(read_text(manifest));
  } catch (const json::parse_error& e) {
    throw FormatError(manifest.string() + ": " + e.what());
  }

  ModelGraph model;
  std::string blob;
  try {
    if (doc.at("format").get<std::string>() != "rdprune.model")
      throw FormatError(manifest.string() + ": not an rdprune model manifest");
    if (doc.at("version").get<int>() != 1)
      throw FormatError(manifest.string() + ": unsupported manifest version");
    model.name = doc.at("name").get<std::string>();
    model.input_shape = doc.at("input_shape").get<Shape>();
    blob = read_text(manifest.parent_path() / doc.at("blob").get<std::string>());
    if (doc.contains("blob_bytes") && doc["blob_bytes"].get<std::size_t>() != blob.size())
      throw ShapeInconsistencyError(manifest.string() + ": blob is " +
                                    std::to_string(blob.size()) + " bytes, manifest says " +
                                    std::to_string(doc["blob_bytes"].get<std::size_t>()));

    const auto& layers = doc.at("layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& e = layers[i];
      const std::string where = "layer " + std::to_string(i);
      LayerSpec layer;
      layer.kind = parse_layer_kind(e.at("kind").get<std::string>());
      layer.stride = e.value("stride", std::size_t{1});
      layer.padding = e.value("padding", std::size_t{0});
      layer.kernel = e.value("kernel", std::size_t{0});
      layer.skip_source = e.value("source", -1L);
      if (e.contains("weight")) layer.weight = tensor_from(e["weight"], blob, where + " weight");
      if (e.contains("bias")) layer.bias = tensor_from(e["bias"], blob, where + " bias");
      model.layers.push_back(std::move(layer));
    }
  } catch (const json::exception& e) {
    throw FormatError(manifest.string() + ": " + e.what());
  }

  try {
    infer_shapes(model);
  } catch (const ShapeError& e) {
    throw ShapeInconsistencyError(manifest.string() + ": " + e.what());
  }
  return model;
}

void save_model(const ModelGraph& model, const fs::path& dir) {
  infer_shapes(model);
  std::string blob;
  json doc;
  doc["format"] = "rdprune.model";
  doc["version"] = 1;
  doc["name"] = model.name;
  doc["input_shape"] = model.input_shape;
  doc["blob"] = "model.bin";
  json layers = json::array();
  for (const auto& layer : model.layers) {
    json e;
    e["kind"] = std::string(to_string(layer.kind));
    switch (layer.kind) {
      case LayerKind::conv2d:
        e["stride"] = layer.stride;
        e["padding"] = layer.padding;
        break;
      case LayerKind::maxpool2d:
      case LayerKind::avgpool2d:
        e["kernel"] = layer.kernel;
        e["stride"] = layer.stride;
        break;
      case LayerKind::add_skip:
        e["source"] = layer.skip_source;
        break;
      default:
        break;
    }
    if (layer.weight) e["weight"] = tensor_entry(*layer.weight, blob);
    if (layer.bias) e["bias"] = tensor_entry(*layer.bias, blob);
    layers.push_back(std::move(e));
  }
  doc["blob_bytes"] = blob.size();
  doc["layers"] = std::move(layers);
  write_text(dir / "model.bin", blob);
  write_text(dir / "model.json", doc.dump(2) + "\n");
}

CalibrationSet load_calib(const fs::path& path) {
  const std::string in = read_text(path);
  const std::string where = path.string();
  if (in.size() < 16 || std::memcmp(in.data(), kCalibMagic, 8) != 0)
    throw FormatError(where + ": not a calibration file");
  const std::uint32_t count = read_u32(in, 8);
  const std::uint32_t rank = read_u32(in, 12);
  if (count == 0) throw FormatError(where + ": calibration set is empty");
  if (rank == 0 || in.size() < 16 + 4ull * rank)
    throw ShapeInconsistencyError(where + ": truncated header");
  Shape shape;
  for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(read_u32(in, 16 + 4 * r));
  const std::size_t per = shape_numel(shape);
  const std::size_t header = 16 + 4ull * rank;
  if (per == 0 || in.size() != header + 4ull * per * count)
    throw ShapeInconsistencyError(where + ": " + std::to_string(count) + " samples of " +
                                  shape_str(shape) + " need " +
                                  std::to_string(header + 4ull * per * count) + " bytes, file has " +
                                  std::to_string(in.size()));
  CalibrationSet calib;
  calib.samples.reserve(count);
  for (std::uint32_t s = 0; s < count; ++s) {
    auto data = read_floats(in, header + 4ull * per * s, per);
    for (float v : data)
      if (!std::isfinite(v)) throw FormatError(where + ": non-finite sample value");
    calib.samples.emplace_back(shape, std::move(data));
  }
  return calib;
}

void save_calib(const CalibrationSet& calib, const fs::path& path) {
  validate(calib);
  const Shape& shape = calib.sample_shape();
  std::string out(kCalibMagic, 8);
  append_u32(out, static_cast<std::uint32_t>(calib.size()));
  append_u32(out, static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) append_u32(out, static_cast<std::uint32_t>(d));
  for (const auto& s : calib.samples) append_le(out, s.data());
  write_text(path, out);
}

void write_curves_csv(const std::vector<RDCurve>& curves, const fs::path& path) {
  std::string out = std::string(kCurvesHeader) + "\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      out += std::to_string(c.layer_index) + ',' + std::to_string(p.grid_index) + ',' +
             std::to_string(p.pruned_count) + ',' + format_double(p.distortion) + ',' +
             (p.valid ? "1" : "0") + '\n';
    }
  }
  write_text(path, out);
}

std::vector<RDCurve> read_curves_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  const std::string where = path.string();
  std::string line;
  if (!std::getline(in, line) || line != kCurvesHeader)
    throw FormatError(where + ": missing curves header");

  std::vector<RDCurve> curves;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos;) {
      fields.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    fields.push_back(rest);
    const std::string at = where + ":" + std::to_string(line_no);
    if (fields.size() != 5) throw FormatError(at + ": expected 5 columns");

    auto parse_size = [&](std::string_view f) {
      std::size_t v = 0;
      const auto r = std::from_chars(f.data(), f.data() + f.size(), v);
      if (r.ec != std::errc{} || r.ptr != f.data() + f.size())
        throw FormatError(at + ": bad integer '" + std::string(f) + "'");
      return v;
    };
    CurvePoint p;
    const std::size_t layer = parse_size(fields[0]);
    p.grid_index = parse_size(fields[1]);
    p.pruned_count = parse_size(fields[2]);
    const auto r = std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), p.distortion);
    if (r.ec != std::errc{} || r.ptr != fields[3].data() + fields[3].size())
      throw FormatError(at + ": bad distortion '" + std::string(fields[3]) + "'");
    if (fields[4] != "0" && fields[4] != "1") throw FormatError(at + ": valid_flag must be 0 or 1");
    p.valid = fields[4] == "1";

    if (curves.empty() || curves.back().layer_index != layer) {
      for (const auto& c : curves)
        if (c.layer_index == layer) throw FormatError(at + ": layer rows are not contiguous");
      curves.push_back({layer, {}});
    }
    if (p.grid_index != curves.back().points.size())
      throw FormatError(at + ": grid indices must run 0..S in order");
    curves.back().points.push_back(p);
  }
  if (curves.empty()) throw FormatError(where + ": no curve rows");
  return curves;
}

std::string plan_to_json(const AllocationPlan& plan) {
  json doc;
  doc["format"] = "rdprune.plan";
  doc["version"] = 1;
  doc["ratio"] = plan.ratio;
  doc["total_prunable"] = plan.total_prunable;
  doc["requested_total"] = plan.requested_total;
  doc["achieved_total"] = plan.achieved_total;
  doc["achieved_sparsity"] = plan.achieved_sparsity();
  doc["unit"] = plan.unit;
  doc["bins"] = plan.bins;
  doc["objective"] = plan.objective;
  json layers = json::array();
  for (const auto& e : plan.layers) {
    json l;
    l["layer_index"] = e.layer_index;
    l["size"] = e.size;
    l["pruned"] = e.pruned;
    l["grid_index"] = e.grid_index;
    layers.push_back(std::move(l));
  }
  doc["layers"] = std::move(layers);
  return doc.dump(2) + "\n";
}

AllocationPlan plan_from_json(const std::string& text) {
  AllocationPlan plan;
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != "rdprune.plan")
      throw FormatError("not an rdprune plan");
    plan.ratio = doc.at("ratio").get<double>();
    plan.total_prunable = doc.at("total_prunable").get<std::size_t>();
    plan.requested_total = doc.at("requested_total").get<std::size_t>();
    plan.achieved_total = doc.at("achieved_total").get<std::size_t>();
    plan.unit = doc.at("unit").get<std::size_t>();
    plan.bins = doc.at("bins").get<std::size_t>();
    plan.objective = doc.at("objective").get<double>();
    std::size_t sum = 0;
    for (const auto& l : doc.at("layers")) {
      PlanEntry e;
      e.layer_index = l.at("layer_index").get<std::size_t>();
      e.size = l.at("size").get<std::size_t>();
      e.pruned = l.at("pruned").get<std::size_t>();
      e.grid_index = l.at("grid_index").get<std::size_t>();
      if (e.pruned > e.size) throw FormatError("plan prunes more weights than a layer holds");
      sum += e.pruned;
      plan.layers.push_back(e);
    }
    if (sum != plan.achieved_total) throw FormatError("plan achieved_total disagrees with layers");
  } catch (const json::exception& e) {
    throw FormatError(std::string("plan: ") + e.what());
  }
  return plan;
}

void write_plan_json(const AllocationPlan& plan, const fs::path& path) {
  write_text(path, plan_to_json(plan));
}

AllocationPlan read_plan_json(const fs::path& path) {
  try {
    return plan_from_json(read_text(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_dp_trace_csv(const DPTable& table, const fs::path& path) {
  std::string out = "row,bin,value,decision\n";
  for (std::size_t i = 0; i <= table.layers(); ++i) {
    for (std::size_t b = 0; b <= table.bins(); ++b) {
      const double v = table.value(i, b);
      out += std::to_string(i) + ',' + std::to_string(b) + ',' +
             (v == DPTable::unreachable ? std::string("inf") : format_double(v)) + ',' +
             std::to_string(table.decision(i, b)) + '\n';
    }
  }
  write_text(path, out);
}

void write_additivity_csv(const std::vector<AdditivityRecord>& records, const fs::path& path) {
  std::string out = "layers,sparsity,sum_individual,joint,relative_residual\n";
  for (const auto& r : records) {
    std::string layers;
    for (std::size_t i = 0; i < r.layers.size(); ++i) {
      if (i) layers += ';';
      layers += std::to_string(r.layers[i]);
    }
    out += layers + ',' + format_double(r.sparsity) + ',' + format_double(r.sum_individual) +
           ',' + format_double(r.joint) + ',' + format_double(r.relative_residual) + '\n';
  }
  write_text(path, out);
}

}  // namespace rdprune::io
