#include <cmath>
#include <optional>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "irpamg/boundary.hpp"
#include "irpamg/errors.hpp"
#include "irpamg/experiments.hpp"
#include "irpamg/grow_api.hpp"

namespace py = pybind11;
using namespace irpamg;

namespace {

using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Raster to_raster(const F64Array& a) {
  if (a.ndim() != 2) throw py::value_error("image must be 2-D");
  const auto h = static_cast<int>(a.shape(0));
  const auto w = static_cast<int>(a.shape(1));
  return Raster(w, h, std::vector<double>(a.data(), a.data() + a.size()));
}

Mask to_mask(const py::array& a) {
  const U8Array m = U8Array::ensure(a);
  if (!m || m.ndim() != 2) throw py::value_error("mask must be 2-D");
  const auto h = static_cast<int>(m.shape(0));
  const auto w = static_cast<int>(m.shape(1));
  std::vector<std::uint8_t> bits(m.data(), m.data() + m.size());
  for (auto& b : bits) b = b ? 1 : 0;
  return Mask::from_bitmap(w, h, bits);
}

py::array_t<bool> to_numpy(const Mask& m) {
  py::array_t<bool> out({m.height(), m.width()});
  const auto bits = m.bitmap();
  auto* dst = out.mutable_data();
  for (std::size_t i = 0; i < bits.size(); ++i) dst[i] = bits[i] != 0;
  return out;
}

std::vector<Mask> to_masks(const std::vector<py::array>& arrays) {
  std::vector<Mask> out;
  for (const auto& a : arrays) out.push_back(to_mask(a));
  return out;
}

PamgConfig make_config(double r_s, const std::string& variant, int connectivity,
                       std::optional<std::size_t> budget) {
  PamgConfig c;
  c.r_s = r_s;
  c.variant = parse_variant(variant);
  c.connectivity = parse_connectivity(std::to_string(connectivity));
  c.growth_budget = budget;
  c.validate();
  return c;
}

py::dict result_dict(const MaskResult& r) {
  py::dict d;
  d["mask"] = to_numpy(r.mask);
  d["k_star"] = *r.trace.k_star;
  py::list energies;
  for (double e : r.trace.energies) {
    if (std::isfinite(e)) {
      energies.append(e);
    } else {
      energies.append(py::none());
    }
  }
  d["energies"] = energies;
  d["inverted"] = r.trace.inverted;
  py::list path;
  for (const auto& p : r.trace.path) path.append(py::make_tuple(p.x, p.y));
  d["path"] = path;
  const auto g = mask_geometry(r.mask);
  d["geometry"] = py::dict(py::arg("centroid") = py::make_tuple(g.centroid_x, g.centroid_y),
                           py::arg("area") = g.area, py::arg("equiv_radius") = g.equiv_radius);
  return d;
}

}  // namespace

PYBIND11_MODULE(_irpamg, m) {
  m.doc() = "Point-prompted mask generation for infrared small targets";

  py::register_exception<NoEnergyPeak>(m, "NoEnergyPeak");
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

  m.def(
      "generate_mask",
      [](const F64Array& image, std::pair<int, int> seed, double r_s, const std::string& variant,
         int connectivity, std::optional<std::size_t> budget) {
        const Raster img = to_raster(image);
        const PixelCoord s{seed.first, seed.second};
        if (!img.contains(s)) throw py::index_error("seed outside image");
        return result_dict(generate_mask(img, s, make_config(r_s, variant, connectivity, budget)));
      },
      py::arg("image"), py::arg("seed"), py::arg("r_s") = 20.0, py::arg("variant") = "full",
      py::arg("connectivity") = 8, py::arg("budget") = py::none(),
      "Grow a mask from seed (x, y) on a float image in [0, 1].");

  m.def(
      "guided_mask",
      [](const F64Array& image, std::pair<int, int> center, double radius, double k) {
        const Raster img = to_raster(image);
        const PixelCoord s{center.first, center.second};
        if (!img.contains(s)) throw py::index_error("seed outside image");
        return result_dict(guided_mask(img, s, radius, k));
      },
      py::arg("image"), py::arg("center"), py::arg("radius"), py::arg("k") = 5.0);

  m.def(
      "energy",
      [](std::size_t n, double mu_in, double mu_out, double sigma_in, double d_max, double r_s,
         const std::string& variant) -> std::optional<double> {
        PamgConfig c;
        c.r_s = r_s;
        c.variant = parse_variant(variant);
        const auto t = energy({n, mu_in, sigma_in, d_max}, mu_out, c);
        if (!t) return std::nullopt;
        return t->total;
      },
      py::arg("n"), py::arg("mu_in"), py::arg("mu_out"), py::arg("sigma_in"), py::arg("d_max"),
      py::arg("r_s") = 20.0, py::arg("variant") = "full");

  m.def("iou", [](const py::array& p, const py::array& g) { return iou(to_mask(p), to_mask(g)); });

  m.def(
      "pd_fa",
      [](const std::vector<py::array>& preds, const std::vector<py::array>& gts, double radius) {
        const auto t = pd_fa(to_masks(preds), to_masks(gts), radius);
        return py::make_tuple(t.pd(), t.fa());
      },
      py::arg("preds"), py::arg("gts"), py::arg("match_radius") = 3.0);

  m.def("geometry_errors", [](const py::array& p, const py::array& g) {
    const auto e = geometry_errors(to_mask(p), to_mask(g));
    return py::dict(py::arg("area_ratio") = e.area_ratio,
                    py::arg("centroid_error") = e.centroid_error,
                    py::arg("radius_error") = e.radius_error);
  });

  m.def("encode_rle", [](const py::array& a) { return encode_rle(to_mask(a)); });
  m.def("decode_rle", [](const std::string& text) { return to_numpy(decode_rle(text)); });

  m.def("boundary_b", &boundary_b, py::arg("n"), py::arg("gamma"), py::arg("r_s") = 20.0);
  m.def("satisfaction_ratio", &satisfaction_ratio, py::arg("scr"), py::arg("b"));

  m.def(
      "synthetic_suite",
      [](const std::string& name, std::size_t count, std::uint64_t rng_seed) {
        SuiteParams p = name == "cluttered" ? cluttered_suite_params()
                        : name == "boundary" ? boundary_suite_params()
                                             : default_suite_params();
        py::list out;
        for (const auto& s : suite(p, count, rng_seed)) {
          py::array_t<double> img({s.raster.height(), s.raster.width()});
          std::copy(s.raster.data().begin(), s.raster.data().end(), img.mutable_data());
          py::list gts;
          py::list centers;
          for (std::size_t t = 0; t < s.gt_masks.size(); ++t) {
            gts.append(to_numpy(s.gt_masks[t]));
            centers.append(py::make_tuple(s.spec.targets[t].cx, s.spec.targets[t].cy));
          }
          out.append(py::dict(py::arg("image") = img, py::arg("gt") = gts,
                              py::arg("centers") = centers));
        }
        return out;
      },
      py::arg("suite") = "default", py::arg("count") = 10, py::arg("rng_seed") = 3407);
}
