#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pcat/errors.hpp"
#include "pcat/morphology.hpp"
#include "pcat/nifti.hpp"
#include "pcat/pcat.hpp"
#include "pcat/phantom.hpp"
#include "pcat/pipeline.hpp"
#include "pcat/report.hpp"
#include "pcat/version.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

// Arrays cross the boundary indexed [x, y, z] with spacing (sx, sy, sz) in
// mm, matching the nibabel convention.

template <typename T>
pcat::VoxelGrid<T> grid_from_array(const py::array_t<T, py::array::forcecast>& array,
                                   pcat::Vec3 spacing, pcat::Vec3 origin) {
  if (array.ndim() != 3) throw py::value_error("expected a 3D array indexed [x, y, z]");
  const pcat::Index3 dims{array.shape(0), array.shape(1), array.shape(2)};
  pcat::VoxelGrid<T> grid(dims, spacing, origin);
  const auto view = array.template unchecked<3>();
  std::size_t lin = 0;
  for (std::int64_t k = 0; k < dims[2]; ++k)
    for (std::int64_t j = 0; j < dims[1]; ++j)
      for (std::int64_t i = 0; i < dims[0]; ++i) grid[lin++] = view(i, j, k);
  return grid;
}

template <typename T>
py::array_t<T> array_from_grid(const pcat::VoxelGrid<T>& grid) {
  const auto& d = grid.dims();
  py::array_t<T> array({d[0], d[1], d[2]});
  auto view = array.template mutable_unchecked<3>();
  std::size_t lin = 0;
  for (std::int64_t k = 0; k < d[2]; ++k)
    for (std::int64_t j = 0; j < d[1]; ++j)
      for (std::int64_t i = 0; i < d[0]; ++i) view(i, j, k) = grid[lin++];
  return array;
}

pcat::ProtocolParams params_from_args(double skip_mm, double segment_mm, double hu_lo,
                                      double hu_hi, double spur_mm,
                                      std::uint64_t min_component_voxels,
                                      const std::string& region_mode, double lm_search_mm,
                                      int histogram_bin_hu) {
  pcat::ProtocolParams params;
  params.skip_mm = skip_mm;
  params.segment_mm = segment_mm;
  params.window = {hu_lo, hu_hi};
  params.spur_mm = spur_mm;
  params.min_component_voxels = min_component_voxels;
  params.region_mode = pcat::region_mode_from_name(region_mode);
  params.lm_search_mm = lm_search_mm;
  params.histogram_bin_hu = histogram_bin_hu;
  return params;
}

py::dict measurement_to_dict(const pcat::PcatMeasurement& m) {
  py::dict d;
  d["mean_attenuation_hu"] =
      m.mean_attenuation_hu ? py::object(py::float_(*m.mean_attenuation_hu)) : py::none();
  d["volume_ml"] = m.volume_ml;
  d["voxel_count"] = m.voxel_count;
  d["truncated"] = m.truncated;
  d["histogram"] = py::dict("lo_hu"_a = m.window.lo, "hi_hu"_a = m.window.hi,
                            "bin_hu"_a = m.histogram_bin_hu, "counts"_a = m.histogram);
  return d;
}

constexpr const char* kParamDoc =
    "Protocol parameters default to the published values: skip_mm=10, "
    "segment_mm=40, HU window [-190, -30], spur_mm=3, min_component_voxels=100, "
    "region_mode='sphere-of-diameter', lm_search_mm=40, histogram_bin_hu=5.";

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Automated pericoronary adipose tissue (PCAT) measurement core";
  m.attr("__version__") = pcat::kVersion;

  static py::exception<pcat::PcatError> pcat_error(m, "PcatError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const pcat::PcatError& e) {
      py::set_error(pcat_error, ("[" + e.error_class() + "] " + std::string(e.what())).c_str());
    }
  });

  m.def(
      "load_volume",
      [](const std::string& path) {
        const pcat::ImageGrid grid = pcat::load_volume(path);
        return py::make_tuple(array_from_grid(grid), grid.spacing(), grid.origin());
      },
      "path"_a,
      "Load a NIfTI volume as HU values. Returns (array[x,y,z], spacing, origin).");

  m.def(
      "load_mask",
      [](const std::string& path, std::uint32_t label) {
        const pcat::BinaryMask grid = pcat::load_mask(path, label);
        return py::make_tuple(array_from_grid(grid), grid.spacing(), grid.origin());
      },
      "path"_a, "label"_a = 0,
      "Load a NIfTI mask (label 0 selects any nonzero voxel).");

  m.def(
      "save_volume",
      [](const std::string& path, const py::array_t<float, py::array::forcecast>& image,
         pcat::Vec3 spacing, pcat::Vec3 origin) {
        pcat::save_volume(path, grid_from_array<float>(image, spacing, origin));
      },
      "path"_a, "image"_a, "spacing"_a, "origin"_a = pcat::Vec3{0, 0, 0});

  m.def(
      "save_mask",
      [](const std::string& path, const py::array_t<std::uint8_t, py::array::forcecast>& mask,
         pcat::Vec3 spacing, pcat::Vec3 origin) {
        pcat::save_mask(path, grid_from_array<std::uint8_t>(mask, spacing, origin));
      },
      "path"_a, "mask"_a, "spacing"_a, "origin"_a = pcat::Vec3{0, 0, 0});

  m.def(
      "connected_components",
      [](const py::array_t<std::uint8_t, py::array::forcecast>& mask, int connectivity) {
        const auto labeling = pcat::connected_components(
            grid_from_array<std::uint8_t>(mask, {1, 1, 1}, {0, 0, 0}), connectivity);
        return py::make_tuple(array_from_grid(labeling.labels), labeling.component_sizes);
      },
      "mask"_a, "connectivity"_a = 26,
      "Label connected components. Returns (labels[x,y,z], [(label, count), ...]).");

  m.def(
      "skeletonize",
      [](const py::array_t<std::uint8_t, py::array::forcecast>& mask) {
        return array_from_grid(
            pcat::skeletonize(grid_from_array<std::uint8_t>(mask, {1, 1, 1}, {0, 0, 0})));
      },
      "mask"_a, "Topology-preserving 3D medial-axis thinning.");

  m.def(
      "distance_transform",
      [](const py::array_t<std::uint8_t, py::array::forcecast>& mask, pcat::Vec3 spacing) {
        return array_from_grid(
            pcat::distance_transform(grid_from_array<std::uint8_t>(mask, spacing, {0, 0, 0})));
      },
      "mask"_a, "spacing"_a,
      "Exact anisotropic Euclidean distance to the nearest background voxel (mm).");

  m.def(
      "dice",
      [](const py::array_t<std::uint8_t, py::array::forcecast>& a,
         const py::array_t<std::uint8_t, py::array::forcecast>& b) {
        return pcat::dice(grid_from_array<std::uint8_t>(a, {1, 1, 1}, {0, 0, 0}),
                          grid_from_array<std::uint8_t>(b, {1, 1, 1}, {0, 0, 0}));
      },
      "a"_a, "b"_a, "Dice overlap 2|A∩B|/(|A|+|B|); two empty masks give 1.0.");

  m.def(
      "pearson_r2",
      [](const std::vector<double>& x, const std::vector<double>& y) -> py::object {
        const auto r2 = pcat::pearson_r2(x, y);
        return r2 ? py::object(py::float_(*r2)) : py::none();
      },
      "x"_a, "y"_a, "Squared Pearson correlation; None when variance is zero.");

  m.def(
      "render_phantom",
      [](const std::string& spec_json) {
        const pcat::PhantomVolumes v = pcat::render(pcat::phantom_from_json(spec_json));
        return py::make_tuple(array_from_grid(v.image), array_from_grid(v.vessel_mask),
                              array_from_grid(v.aorta_mask), v.image.spacing(),
                              v.image.origin());
      },
      "spec_json"_a,
      "Render a phantom spec (JSON string) to (image, vessel_mask, aorta_mask, spacing, origin).");

  m.def("straight_tube_phantom_json",
        []() { return pcat::phantom_to_json(pcat::straight_tube_phantom()); });
  m.def("y_phantom_json", []() { return pcat::phantom_to_json(pcat::y_phantom()); });
  m.def("two_vessel_phantom_json",
        []() { return pcat::phantom_to_json(pcat::two_vessel_phantom()); });

  const auto measure_binding = [](bool right) {
    return [right](const py::array_t<float, py::array::forcecast>& image,
                   const py::array_t<std::uint8_t, py::array::forcecast>& vessel_mask,
                   pcat::Vec3 spacing, pcat::Vec3 origin, const py::object& aorta_mask,
                   double skip_mm, double segment_mm, double hu_lo, double hu_hi, double spur_mm,
                   std::uint64_t min_component_voxels, const std::string& region_mode,
                   double lm_search_mm, int histogram_bin_hu) {
      const pcat::ProtocolParams params =
          params_from_args(skip_mm, segment_mm, hu_lo, hu_hi, spur_mm, min_component_voxels,
                           region_mode, lm_search_mm, histogram_bin_hu);
      const pcat::ImageGrid img = grid_from_array<float>(image, spacing, origin);
      const pcat::BinaryMask vessel = grid_from_array<std::uint8_t>(vessel_mask, spacing, origin);
      std::optional<pcat::BinaryMask> aorta;
      if (!aorta_mask.is_none())
        aorta = grid_from_array<std::uint8_t>(
            aorta_mask.cast<py::array_t<std::uint8_t, py::array::forcecast>>(), spacing, origin);
      const pcat::PcatMeasurement m =
          right ? pcat::measure_rpcat(img, vessel, aorta ? &*aorta : nullptr, params)
                : pcat::measure_lpcat(img, vessel, aorta ? &*aorta : nullptr, params);
      return measurement_to_dict(m);
    };
  };
  for (const bool right : {true, false}) {
    m.def(right ? "measure_rpcat" : "measure_lpcat", measure_binding(right), "image"_a,
          right ? "rca_mask"_a : "lca_mask"_a, "spacing"_a, "origin"_a = pcat::Vec3{0, 0, 0},
          "aorta_mask"_a = py::none(), "skip_mm"_a = 10.0, "segment_mm"_a = 40.0,
          "hu_lo"_a = -190.0, "hu_hi"_a = -30.0, "spur_mm"_a = 3.0,
          "min_component_voxels"_a = 100, "region_mode"_a = "sphere-of-diameter",
          "lm_search_mm"_a = 40.0, "histogram_bin_hu"_a = 5, kParamDoc);
  }

  m.def(
      "split_arteries",
      [](const py::array_t<std::uint8_t, py::array::forcecast>& coronary_mask, pcat::Vec3 spacing,
         pcat::Vec3 origin, const py::object& aorta_mask, std::uint64_t min_component_voxels) {
        pcat::ProtocolParams params;
        params.min_component_voxels = min_component_voxels;
        const pcat::BinaryMask coronary =
            grid_from_array<std::uint8_t>(coronary_mask, spacing, origin);
        std::optional<pcat::BinaryMask> aorta;
        if (!aorta_mask.is_none())
          aorta = grid_from_array<std::uint8_t>(
              aorta_mask.cast<py::array_t<std::uint8_t, py::array::forcecast>>(), spacing,
              origin);
        const pcat::SplitResult result =
            pcat::split_arteries(coronary, aorta ? &*aorta : nullptr, params);
        return py::make_tuple(array_from_grid(result.rca), array_from_grid(result.lca));
      },
      "coronary_mask"_a, "spacing"_a, "origin"_a = pcat::Vec3{0, 0, 0},
      "aorta_mask"_a = py::none(), "min_component_voxels"_a = 100,
      "Split a combined coronary mask into (rca, lca) masks.");
}
