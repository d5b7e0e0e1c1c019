// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Python module toma._core. Token arrays cross the boundary as C-contiguous
// float32 numpy arrays of shape (N, d); grids are (height, width) tuples.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <cstring>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "toma/cost_model.hpp"
#include "toma/errors.hpp"
#include "toma/locality.hpp"
#include "toma/merge.hpp"
#include "toma/parallel.hpp"
#include "toma/report.hpp"
#include "toma/reuse.hpp"
#include "toma/submodular.hpp"
#include "toma/synth.hpp"
#include "toma/tensor_file.hpp"
#include "toma/unmerge.hpp"

namespace py = pybind11;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using GridTuple = std::optional<std::pair<std::size_t, std::size_t>>;

toma::TokenMatrix to_tokens(const FloatArray& a, const GridTuple& grid = std::nullopt) {
  if (a.ndim() != 2) throw toma::InvalidArgument("expected a 2-D array of shape (N, d)");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  std::vector<float> data(a.data(), a.data() + rows * cols);
  toma::TokenMatrix x(rows, cols, std::move(data));
  if (grid) x.set_grid(toma::Grid{grid->first, grid->second});
  return x;
}

py::array_t<float> to_array(const toma::TokenMatrix& x) {
  std::vector<py::ssize_t> shape;
  if (x.batch() > 1) shape.push_back(static_cast<py::ssize_t>(x.batch()));
  shape.push_back(static_cast<py::ssize_t>(x.rows()));
  shape.push_back(static_cast<py::ssize_t>(x.cols()));
  py::array_t<float> out(shape);
  std::memcpy(out.mutable_data(), x.data().data(), x.size() * sizeof(float));
  return out;
}

GridTuple grid_of(const toma::TokenMatrix& x) {
  if (!x.grid()) return std::nullopt;
  return std::make_pair(x.grid()->height, x.grid()->width);
}

toma::SimilarityMatrix to_similarity(const FloatArray& s) {
  if (s.ndim() != 2 || s.shape(0) != s.shape(1)) {
    throw toma::InvalidArgument("similarity must be a square 2-D array");
  }
  const auto n = static_cast<std::size_t>(s.shape(0));
  return toma::SimilarityMatrix(n, std::vector<float>(s.data(), s.data() + n * n));
}

py::array_t<float> similarity_array(const toma::SimilarityMatrix& s) {
  const auto n = static_cast<py::ssize_t>(s.size());
  py::array_t<float> out({n, n});
  std::memcpy(out.mutable_data(), s.data().data(), s.data().size() * sizeof(float));
  return out;
}

toma::DestinationSet to_dest(const std::vector<std::size_t>& indices) {
  return toma::DestinationSet{indices, indices.size()};
}

toma::MergeOptions merge_options(double tau, bool scale_by_sqrt_d, bool cosine_logits) {
  toma::MergeOptions o;
  o.tau = tau;
  o.scale_by_sqrt_d = scale_by_sqrt_d;
  o.cosine_logits = cosine_logits;
  return o;
}

toma::UnmergeMode parse_unmerge(const std::string& name) {
  if (name == "transpose") return toma::UnmergeMode::kTranspose;
  if (name == "pinv") return toma::UnmergeMode::kPinv;
  throw toma::InvalidArgument("unknown unmerge '" + name + "' (expected transpose or pinv)");
}

std::size_t kept_tokens(std::size_t n, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw toma::InvalidArgument("ratio must lie in (0, 1]");
  const auto kept = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  if (kept < 1) throw toma::InvalidArgument("ratio keeps no tokens");
  return kept;
}

const toma::CoreTransform kIdentity = [](const toma::TokenMatrix& m) { return m; };

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Token merging with attention: selection, merge/unmerge, locality, cost model";

  auto base = py::register_exception<toma::Error>(m, "TomaError", PyExc_RuntimeError);
  py::register_exception<toma::InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<toma::DataError>(m, "DataError", base.ptr());
  py::register_exception<toma::NumericalError>(m, "NumericalError", base.ptr());

  m.def("set_num_threads", &toma::set_num_threads, py::arg("threads"),
        "Cap worker threads; 0 means all cores.");

  m.def("cosine_similarity",
        [](const FloatArray& x) { return similarity_array(toma::cosine_similarity(to_tokens(x))); },
        py::arg("x"));

  m.def("greedy_select",
        [](const FloatArray& similarity, std::size_t budget) {
          return toma::greedy_select(to_similarity(similarity), budget).indices;
        },
        py::arg("similarity"), py::arg("budget"),
        "Greedy facility-location selection; returns indices in pick order.");

  m.def("facility_location_value",
        [](const FloatArray& similarity, const std::vector<std::size_t>& indices) {
          return toma::facility_location_value(to_similarity(similarity), indices);
        },
        py::arg("similarity"), py::arg("indices"));

  py::class_<toma::MergeWeights>(m, "MergeWeights")
      .def_property_readonly("a_raw", [](const toma::MergeWeights& w) { return to_array(w.a_raw); })
      .def_property_readonly("a_tilde",
                             [](const toma::MergeWeights& w) { return to_array(w.a_tilde); })
      .def_property_readonly("destinations",
                             [](const toma::MergeWeights& w) { return w.dest.indices; })
      .def_readonly("tau", &toma::MergeWeights::tau);

  m.def("merge_weights",
        [](const FloatArray& x, const std::vector<std::size_t>& destinations, double tau,
           bool scale_by_sqrt_d, bool cosine_logits) {
          return toma::attention_merge_weights(to_tokens(x), to_dest(destinations),
                                               merge_options(tau, scale_by_sqrt_d, cosine_logits));
        },
        py::arg("x"), py::arg("destinations"), py::arg("tau") = toma::kDefaultTau,
        py::arg("scale_by_sqrt_d") = true, py::arg("cosine_logits") = true);

  m.def("hard_merge_weights",
        [](const FloatArray& x, const std::vector<std::size_t>& destinations) {
          const auto tokens = to_tokens(x);
          return toma::hard_merge_weights(toma::cosine_similarity(tokens), to_dest(destinations));
        },
        py::arg("x"), py::arg("destinations"));

  m.def("apply_merge",
        [](const toma::MergeWeights& w, const FloatArray& x) {
          return to_array(toma::apply_merge(w, to_tokens(x)));
        },
        py::arg("weights"), py::arg("x"));

  m.def("unmerge",
        [](const toma::MergeWeights& w, const FloatArray& merged, const std::string& mode,
           double ridge) {
          return to_array(toma::unmerge(w, to_tokens(merged), parse_unmerge(mode), ridge));
        },
        py::arg("weights"), py::arg("merged"), py::arg("mode") = "transpose",
        py::arg("ridge") = 0.0);

  m.def("pseudo_inverse",
        [](const FloatArray& a_tilde, double ridge) {
          return to_array(toma::pseudo_inverse(to_tokens(a_tilde), ridge));
        },
        py::arg("a_tilde"), py::arg("ridge") = 0.0);

  m.def("orthogonality_error",
        [](const toma::MergeWeights& w) { return toma::ortho_diagnostics(w).eps_fro; },
        py::arg("weights"), "Frobenius norm of A A^T - I over the normalized weights.");

  m.def("valid_region_counts",
        [](const std::string& layout, std::size_t n, const GridTuple& grid) {
          std::optional<toma::Grid> g;
          if (grid) g = toma::Grid{grid->first, grid->second};
          return toma::valid_region_counts(toma::parse_layout_kind(layout), n, g);
        },
        py::arg("layout"), py::arg("n"), py::arg("grid") = py::none());

  m.def("local_pipeline",
        [](const FloatArray& x, double ratio, const std::string& layout, std::size_t regions,
           const GridTuple& grid, double tau, const std::string& unmerge, double ridge) {
          const auto tokens = to_tokens(x, grid);
          const auto plan = toma::make_layout(toma::parse_layout_kind(layout), tokens.rows(),
                                              tokens.grid(), regions,
                                              kept_tokens(tokens.rows(), ratio));
          toma::MergeConfig cfg;
          cfg.merge.tau = tau;
          cfg.unmerge = parse_unmerge(unmerge);
          cfg.ridge = ridge;
          toma::TokenMatrix out;
          {
            py::gil_scoped_release release;
            out = toma::local_pipeline(tokens, plan, cfg, kIdentity);
          }
          return to_array(out);
        },
        py::arg("x"), py::arg("ratio") = 0.5, py::arg("layout") = "global",
        py::arg("regions") = 1, py::arg("grid") = py::none(), py::arg("tau") = toma::kDefaultTau,
        py::arg("unmerge") = "transpose", py::arg("ridge") = 0.0,
        "Merge, identity core, unmerge within each region; returns the (N, d) output.");

  m.def("generate_field",
        [](std::size_t height, std::size_t width, std::size_t dim, double sigma,
           std::uint64_t seed) {
          toma::SynthConfig cfg;
          cfg.grid = {height, width};
          cfg.d = dim;
          cfg.smooth_sigma = sigma;
          cfg.seed = seed;
          return to_array(toma::generate_field(cfg));
        },
        py::arg("height"), py::arg("width"), py::arg("dim"), py::arg("sigma") = 2.0,
        py::arg("seed") = 0);

  m.def("drift_sequence",
        [](std::size_t height, std::size_t width, std::size_t dim, double sigma, double drift,
           std::size_t steps, std::uint64_t seed) {
          toma::SynthConfig cfg;
          cfg.grid = {height, width};
          cfg.d = dim;
          cfg.smooth_sigma = sigma;
          cfg.drift = drift;
          cfg.steps = steps;
          cfg.seed = seed;
          std::vector<py::array_t<float>> out;
          for (const auto& s : toma::drift_sequence(cfg)) out.push_back(to_array(s));
          return out;
        },
        py::arg("height"), py::arg("width"), py::arg("dim"), py::arg("sigma") = 2.0,
        py::arg("drift") = 0.1, py::arg("steps") = 1, py::arg("seed") = 0);

  m.def("write_tensor_file",
        [](const std::filesystem::path& path, const FloatArray& x, const GridTuple& grid) {
          toma::write_tensor_file(path, to_tokens(x, grid));
        },
        py::arg("path"), py::arg("x"), py::arg("grid") = py::none());

  m.def("read_tensor_file",
        [](const std::filesystem::path& path) {
          const auto x = toma::read_tensor_file(path);
          return py::make_tuple(to_array(x), grid_of(x));
        },
        py::arg("path"), "Returns (array, grid or None).");

  m.def("cost_report_json",
        [](std::uint64_t n, std::uint64_t d, double ratio, std::uint64_t tiles, bool with_adds) {
          return toma::to_json(toma::cost_report(toma::CostParams{n, d, ratio, tiles}), with_adds)
              .dump();
        },
        py::arg("n"), py::arg("dim"), py::arg("ratio"), py::arg("tiles") = 1,
        py::arg("with_adds") = false);

  m.def("run_report_json",
        [](const std::vector<FloatArray>& states, const GridTuple& grid, double ratio, double tau,
           const std::string& layout, std::size_t regions, std::size_t dest_every,
           std::size_t weights_every, const std::string& unmerge, std::size_t reps) {
          std::vector<toma::TokenMatrix> tokens;
          for (const auto& s : states) tokens.push_back(to_tokens(s, grid));
          toma::RunOptions o;
          o.ratio = ratio;
          o.config.merge.tau = tau;
          o.config.unmerge = parse_unmerge(unmerge);
          o.layout = toma::parse_layout_kind(layout);
          o.regions = regions;
          o.dest_every = dest_every;
          o.weights_every = weights_every;
          o.reps = reps;
          o.warmup = 0;
          return toma::to_json(toma::execute_run(tokens, o)).dump();
        },
        py::arg("states"), py::arg("grid") = py::none(), py::arg("ratio") = 0.5,
        py::arg("tau") = toma::kDefaultTau, py::arg("layout") = "global", py::arg("regions") = 1,
        py::arg("dest_every") = 1, py::arg("weights_every") = 1, py::arg("unmerge") = "transpose",
        py::arg("reps") = 1);
}
