// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "bitedit/bsq.hpp"
#include "bitedit/grid.hpp"
#include "bitedit/io.hpp"
#include "bitedit/kernel.hpp"
#include "bitedit/metrics.hpp"
#include "cli.hpp"

namespace py = pybind11;

namespace bitedit {
namespace {

using Array2 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Array3 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using MaskArray =
    py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

void require_ndim(const py::array& a, int ndim, const char* what) {
  if (a.ndim() != ndim) {
    throw std::invalid_argument(std::string(what) + " must have " +
                                std::to_string(ndim) + " dimensions");
  }
}

Image to_image(const Array2& a) {
  require_ndim(a, 2, "image");
  const auto h = static_cast<int>(a.shape(0));
  const auto w = static_cast<int>(a.shape(1));
  return Image(h, w, std::vector<double>(a.data(), a.data() + a.size()));
}

template <class T, class G>
py::array_t<T> from_grid(const G& g) {
  py::array_t<T> out({g.height(), g.width()});
  std::copy(g.values().begin(), g.values().end(), out.mutable_data());
  return out;
}

FeatureMap to_features(const Array3& a) {
  require_ndim(a, 3, "features");
  return FeatureMap(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                    static_cast<int>(a.shape(2)),
                    std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<double> from_features(const FeatureMap& f) {
  py::array_t<double> out({f.height(), f.width(), f.depth()});
  std::copy(f.data().begin(), f.data().end(), out.mutable_data());
  return out;
}

EditMask to_mask(const MaskArray& a) {
  require_ndim(a, 2, "mask");
  EditMask m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::transform(a.data(), a.data() + a.size(), m.values().begin(),
                 [](std::uint8_t v) { return static_cast<std::uint8_t>(v != 0); });
  return m;
}

DistanceField to_field(const py::array_t<int, py::array::c_style | py::array::forcecast>& a) {
  require_ndim(a, 2, "distance field");
  return DistanceField(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                       std::vector<int>(a.data(), a.data() + a.size()));
}

std::vector<py::array_t<std::uint64_t>> token_arrays(const TokenPyramid& p) {
  std::vector<py::array_t<std::uint64_t>> out;
  for (const TokenMap& t : p.maps()) {
    py::array_t<std::uint64_t> a({t.height(), t.width()});
    std::copy(t.words().begin(), t.words().end(), a.mutable_data());
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace
}  // namespace bitedit

PYBIND11_MODULE(_core, m) {
  using namespace bitedit;
  m.doc() = "C++ core of bitedit";

  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<CodecSettings>(m, "CodecSettings")
      .def(py::init([](int patch, double gain) { return CodecSettings{patch, gain}; }),
           py::arg("patch") = 4, py::arg("gain") = 1.0)
      .def_readwrite("patch", &CodecSettings::patch)
      .def_readwrite("gain", &CodecSettings::gain)
      .def_property_readonly("depth", &CodecSettings::depth);

  py::class_<TokenPyramid>(m, "TokenPyramid")
      .def_property_readonly("schedule", [](const TokenPyramid& p) { return p.schedule().str(); })
      .def_property_readonly("depth", &TokenPyramid::depth)
      .def_property_readonly("maps", &token_arrays)
      .def("__len__", &TokenPyramid::size)
      .def("__eq__", [](const TokenPyramid& a, const TokenPyramid& b) { return a == b; });

  m.def("quantize_bsq", [](const std::vector<double>& z) { return quantize_bsq(z); },
        py::arg("z"));
  m.def("dequantize", &dequantize, py::arg("word"), py::arg("depth"));

  m.def("encode_image",
        [](const Array2& image, const CodecSettings& codec) {
          return from_features(encode_image(to_image(image), codec));
        },
        py::arg("image"), py::arg("codec") = CodecSettings{});
  m.def("decode_image",
        [](const Array3& features, const CodecSettings& codec) {
          return from_grid<double>(decode_image(to_features(features), codec));
        },
        py::arg("features"), py::arg("codec") = CodecSettings{});

  m.def("tokenize",
        [](const Array3& features, std::optional<std::string> schedule) {
          const FeatureMap f = to_features(features);
          const ScaleSchedule s =
              schedule ? ScaleSchedule::parse(*schedule) : ScaleSchedule::ramp(f.extent());
          Tokenization t = tokenize(f, s);
          return py::make_tuple(std::move(t.pyramid), t.residual_energy);
        },
        py::arg("features"), py::arg("schedule") = py::none(),
        "Returns (pyramid, per-scale residual energy). The default schedule "
        "ramps up to the feature grid.");
  m.def("reconstruct",
        [](const TokenPyramid& p) { return from_features(reconstruct(p)); },
        py::arg("pyramid"));

  m.def("manhattan_distance_field",
        [](const MaskArray& mask) {
          return from_grid<int>(manhattan_distance_field(to_mask(mask)));
        },
        py::arg("mask"));
  m.def("linear_kernel",
        [](const py::array_t<int, py::array::c_style | py::array::forcecast>& field,
           double tau1, double tau2) {
          return from_grid<double>(linear_kernel(to_field(field), tau1, tau2));
        },
        py::arg("field"), py::arg("tau1") = 1.0, py::arg("tau2") = 4.0);
  m.def("gaussian_kernel",
        [](const py::array_t<int, py::array::c_style | py::array::forcecast>& field,
           double alpha) {
          return from_grid<double>(gaussian_kernel(to_field(field), alpha));
        },
        py::arg("field"), py::arg("alpha") = 2.0);

  auto region = [](const std::optional<MaskArray>& mask) {
    return mask ? std::optional<EditMask>(to_mask(*mask)) : std::nullopt;
  };
  m.def("mse",
        [region](const Array2& a, const Array2& b, std::optional<MaskArray> mask) {
          const auto r = region(mask);
          return mse(to_image(a), to_image(b), r ? &*r : nullptr);
        },
        py::arg("a"), py::arg("b"), py::arg("region") = py::none());
  m.def("psnr",
        [region](const Array2& a, const Array2& b, std::optional<MaskArray> mask) {
          const auto r = region(mask);
          return psnr(to_image(a), to_image(b), r ? &*r : nullptr);
        },
        py::arg("a"), py::arg("b"), py::arg("region") = py::none());
  m.def("ssim",
        [region](const Array2& a, const Array2& b, std::optional<MaskArray> mask) {
          const auto r = region(mask);
          return ssim(to_image(a), to_image(b), r ? &*r : nullptr);
        },
        py::arg("a"), py::arg("b"), py::arg("region") = py::none());

  m.def("load_pgm", [](const std::string& path) { return from_grid<double>(load_pgm(path)); },
        py::arg("path"));
  m.def("save_pgm",
        [](const std::string& path, const Array2& image) { save_pgm(path, to_image(image)); },
        py::arg("path"), py::arg("image"));
  m.def("load_pyramid", &load_pyramid, py::arg("path"));
  m.def("save_pyramid", &save_pyramid, py::arg("path"), py::arg("pyramid"));

  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::ostringstream out;
          std::ostringstream err;
          int code = 0;
          {
            py::gil_scoped_release release;
            code = cli::run(args, out, err);
          }
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs a CLI command in-process; returns (code, stdout, stderr).");
}
