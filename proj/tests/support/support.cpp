#include "support.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "rdprune/grid.hpp"

namespace testsupport {

using namespace rdprune;

fs::path fixture(const std::string& name) { return fs::path(RDPRUNE_FIXTURES) / name; }

std::vector<std::string> fixture_names() { return {"mlp_toy", "cnn_toy", "resnet_tiny"}; }

fs::path scratch_dir(const std::string& tag) {
  static int counter = 0;
  auto dir = fs::temp_directory_path() /
             ("rdprune_test_" + std::to_string(::getpid()) + "_" + tag + "_" +
              std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

namespace {

struct Act {
  std::vector<std::size_t> shape;
  std::vector<double> v;
};

Act run_layer(const LayerSpec& L, const Act& in, const std::vector<Act>& outs, const Act& x0) {
  Act out;
  switch (L.kind) {
    case LayerKind::dense: {
      const auto& w = *L.weight;
      const std::size_t o = w.shape()[0], n = w.shape()[1];
      out.shape = {o};
      out.v.assign(o, 0.0);
      for (std::size_t r = 0; r < o; ++r) {
        double s = L.bias ? (*L.bias)[r] : 0.0;
        for (std::size_t c = 0; c < n; ++c) s += double(w[r * n + c]) * in.v[c];
        out.v[r] = s;
      }
      break;
    }
    case LayerKind::conv2d: {
      const auto& w = *L.weight;
      const std::size_t oc = w.shape()[0], ic = w.shape()[1], kh = w.shape()[2],
                        kw = w.shape()[3];
      const std::size_t p = L.padding, st = L.stride;
      const std::size_t H = in.shape[1] + 2 * p, W = in.shape[2] + 2 * p;
      std::vector<double> padded(ic * H * W, 0.0);
      for (std::size_t c = 0; c < ic; ++c)
        for (std::size_t y = 0; y < in.shape[1]; ++y)
          for (std::size_t x = 0; x < in.shape[2]; ++x)
            padded[(c * H + y + p) * W + x + p] = in.v[(c * in.shape[1] + y) * in.shape[2] + x];
      const std::size_t oh = (H - kh) / st + 1, ow = (W - kw) / st + 1;
      out.shape = {oc, oh, ow};
      out.v.assign(oc * oh * ow, 0.0);
      for (std::size_t o = 0; o < oc; ++o)
        for (std::size_t y = 0; y < oh; ++y)
          for (std::size_t x = 0; x < ow; ++x) {
            double s = L.bias ? (*L.bias)[o] : 0.0;
            for (std::size_t c = 0; c < ic; ++c)
              for (std::size_t a = 0; a < kh; ++a)
                for (std::size_t b = 0; b < kw; ++b)
                  s += double(w[((o * ic + c) * kh + a) * kw + b]) *
                       padded[(c * H + y * st + a) * W + x * st + b];
            out.v[(o * oh + y) * ow + x] = s;
          }
      break;
    }
    case LayerKind::relu:
      out = in;
      for (auto& v : out.v) v = std::max(v, 0.0);
      break;
    case LayerKind::maxpool2d:
    case LayerKind::avgpool2d: {
      const std::size_t c = in.shape[0], h = in.shape[1], w = in.shape[2];
      const std::size_t k = L.kernel, st = L.stride;
      const std::size_t oh = (h - k) / st + 1, ow = (w - k) / st + 1;
      out.shape = {c, oh, ow};
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < oh; ++y)
          for (std::size_t x = 0; x < ow; ++x) {
            std::vector<double> win;
            for (std::size_t a = 0; a < k; ++a)
              for (std::size_t b = 0; b < k; ++b)
                win.push_back(in.v[(ch * h + y * st + a) * w + x * st + b]);
            double r = 0.0;
            if (L.kind == LayerKind::maxpool2d) {
              r = *std::max_element(win.begin(), win.end());
            } else {
              for (double v : win) r += v;
              r /= double(win.size());
            }
            out.v.push_back(r);
          }
      break;
    }
    case LayerKind::flatten:
      out.shape = {in.v.size()};
      out.v = in.v;
      break;
    case LayerKind::add_skip: {
      const Act& other = L.skip_source < 0 ? x0 : outs[static_cast<std::size_t>(L.skip_source)];
      out = in;
      for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += other.v[i];
      break;
    }
  }
  return out;
}

// Engine outputs are float32 between layers; round the same way so the
// comparison tolerance only has to absorb summation order.
void to_float(Act& a) {
  for (auto& v : a.v) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace

std::vector<double> naive_forward(const ModelGraph& model, const Tensor& input) {
  Act x0{input.shape(), {}};
  for (float f : input.data()) x0.v.push_back(f);
  std::vector<Act> outs;
  const Act* cur = &x0;
  for (const auto& L : model.layers) {
    outs.push_back(run_layer(L, *cur, outs, x0));
    to_float(outs.back());
    cur = &outs.back();
  }
  return cur->v;
}

double naive_sq_error(const ModelGraph& a, const ModelGraph& b, const Tensor& input) {
  const auto ya = naive_forward(a, input), yb = naive_forward(b, input);
  double s = 0.0;
  for (std::size_t i = 0; i < ya.size(); ++i) s += (ya[i] - yb[i]) * (ya[i] - yb[i]);
  return s;
}

namespace {

Tensor random_tensor(Shape shape, SplitMix64& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<float>(2.0 * rng.next_open_unit() - 1.0);
  return t;
}

std::size_t pick(SplitMix64& rng, std::size_t lo, std::size_t hi) {
  return lo + rng.next() % (hi - lo + 1);
}

}  // namespace

ModelGraph random_model(std::uint64_t seed) {
  SplitMix64 rng(seed);
  ModelGraph m;
  m.name = "random";
  std::size_t c = pick(rng, 1, 3), h = pick(rng, 4, 8), w = pick(rng, 4, 8);
  m.input_shape = {c, h, w};
  const std::size_t convs = pick(rng, 1, 3);
  for (std::size_t i = 0; i < convs; ++i) {
    LayerSpec L;
    L.kind = LayerKind::conv2d;
    const std::size_t k = pick(rng, 1, 3), oc = pick(rng, 1, 4);
    L.padding = pick(rng, 0, k / 2);
    L.stride = pick(rng, 1, 2);
    if (h + 2 * L.padding < k || w + 2 * L.padding < k) break;
    L.weight = random_tensor({oc, c, k, k}, rng);
    if (rng.next() % 2) L.bias = random_tensor({oc}, rng);
    m.layers.push_back(L);
    h = (h + 2 * L.padding - k) / L.stride + 1;
    w = (w + 2 * L.padding - k) / L.stride + 1;
    c = oc;
    LayerSpec act;
    act.kind = LayerKind::relu;
    m.layers.push_back(act);
    if (rng.next() % 3 == 0) {
      // Same-shape conv plus a skip back to the relu output.
      LayerSpec same;
      same.kind = LayerKind::conv2d;
      same.padding = 1;
      same.weight = random_tensor({c, c, 3, 3}, rng);
      m.layers.push_back(same);
      LayerSpec skip;
      skip.kind = LayerKind::add_skip;
      skip.skip_source = static_cast<long>(m.layers.size()) - 2;
      m.layers.push_back(skip);
    }
  }
  if (h >= 2 && w >= 2 && rng.next() % 2) {
    LayerSpec pool;
    pool.kind = rng.next() % 2 ? LayerKind::maxpool2d : LayerKind::avgpool2d;
    pool.kernel = 2;
    pool.stride = pick(rng, 1, 2);
    m.layers.push_back(pool);
    h = (h - 2) / pool.stride + 1;
    w = (w - 2) / pool.stride + 1;
  }
  LayerSpec flat;
  flat.kind = LayerKind::flatten;
  m.layers.push_back(flat);
  LayerSpec fc;
  fc.kind = LayerKind::dense;
  const std::size_t out = pick(rng, 1, 5);
  fc.weight = random_tensor({out, c * h * w}, rng);
  fc.bias = random_tensor({out}, rng);
  m.layers.push_back(fc);
  return m;
}

Tensor random_input(const Shape& shape, std::uint64_t seed) {
  SplitMix64 rng(seed);
  return random_tensor(shape, rng);
}

std::vector<std::string> plan_violations(const AllocationPlan& plan,
                                         const std::vector<RDCurve>& curves,
                                         const SparsityGrid& grid, const BudgetSpec& budget) {
  std::vector<std::string> v;
  if (plan.layers.size() != grid.layer_count()) {
    v.push_back("layer count");
    return v;
  }
  std::size_t sum = 0;
  double objective = 0.0;
  for (std::size_t i = 0; i < plan.layers.size(); ++i) {
    const auto& e = plan.layers[i];
    if (e.pruned > e.size) v.push_back("layer " + std::to_string(i) + " over-pruned");
    if (e.size != grid.layer_size(i)) v.push_back("layer " + std::to_string(i) + " size");
    if (e.grid_index > grid.levels() || grid.count(i, e.grid_index) != e.pruned)
      v.push_back("layer " + std::to_string(i) + " not on the grid");
    else if (!curves[i].points[e.grid_index].valid)
      v.push_back("layer " + std::to_string(i) + " uses an invalid point");
    else
      objective += curves[i].points[e.grid_index].distortion;
    sum += e.pruned;
  }
  if (sum != plan.achieved_total) v.push_back("achieved_total is not the sum");
  std::size_t bins = 0;
  for (std::size_t i = 0; i < plan.layers.size(); ++i)
    bins += budget.bins_for(plan.layers[i].pruned - grid.base(i));
  if (bins != plan.bins) v.push_back("bins is not the consumed count");
  if (bins > budget.bins) v.push_back("plan consumes more than B bins");
  if (plan.requested_total != budget.total) v.push_back("requested_total differs from T");
  const std::size_t gap = sum > budget.total ? sum - budget.total : budget.total - sum;
  if (bins == budget.bins && gap > plan.layers.size() * budget.unit)
    v.push_back("|achieved - T| = " + std::to_string(gap) + " exceeds l*unit");
  if (objective != plan.objective) v.push_back("objective is not the curve sum");
  return v;
}

ModelGraph tiny_mlp(bool zero_last_bias) {
  ModelGraph m;
  m.name = "tiny";
  m.input_shape = {4};
  LayerSpec d1;
  d1.kind = LayerKind::dense;
  d1.weight = Tensor({3, 4}, {0.5f, -1.0f, 0.25f, 2.0f, 1.5f, 0.75f, -0.5f, 0.125f, -2.0f,
                             1.0f, 0.5f, -0.25f});
  d1.bias = Tensor({3}, {0.1f, -0.2f, 0.3f});
  LayerSpec r;
  r.kind = LayerKind::relu;
  LayerSpec d2;
  d2.kind = LayerKind::dense;
  d2.weight = Tensor({2, 3}, {1.0f, -0.5f, 0.75f, -1.25f, 0.5f, 2.0f});
  d2.bias = zero_last_bias ? Tensor({2}, {0.0f, 0.0f}) : Tensor({2}, {0.5f, -0.5f});
  m.layers = {d1, r, d2};
  return m;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, std::string* out) {
  const std::string cmd = std::string(RDPRUNE_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return -1;
  std::array<char, 4096> buf;
  std::string text;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) text.append(buf.data(), n);
  const int status = ::pclose(pipe);
  if (out) *out = text;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace testsupport
