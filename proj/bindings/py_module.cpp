// Python surface: the algebra layer, frames, phantoms, and the line
// transforms. Heavy pipeline stages (acquisition sweeps, W lattices) stay in
// the CLI; the module targets scripting and verification use.
//
// The boundary speaks Eigen::VectorXd; the core's bounded-storage vector type
// is converted behind it.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <trt/errors.hpp>
#include <trt/geometry.hpp>
#include <trt/harness.hpp>
#include <trt/symtensor.hpp>
#include <trt/xforms.hpp>

#include <string>
#include <vector>

namespace py = pybind11;
using namespace trt;
using EVec = Eigen::VectorXd;

namespace {

Vec from_py(const EVec& v) {
  if (v.size() < 1 || v.size() > 8) {
    throw InvalidInputError("vector arguments must have dimension 1..8");
  }
  Vec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

EVec to_py(const Vec& v) {
  EVec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

std::vector<Vec> from_py_list(const std::vector<EVec>& vs) {
  std::vector<Vec> out;
  out.reserve(vs.size());
  for (const EVec& v : vs) out.push_back(from_py(v));
  return out;
}

harness::PhantomKind kind_from_name(const std::string& name) {
  if (name == "gaussian-bump") return harness::PhantomKind::GaussianBump;
  if (name == "polynomial-bump") return harness::PhantomKind::PolynomialBump;
  if (name == "multi-bump") return harness::PhantomKind::MultiBump;
  throw InvalidInputError("phantom: unknown kind '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Transverse ray transform toolkit: symmetric tensors, frames, "
            "phantoms, and line-transform evaluation.";

  // Base first so derived translators take precedence.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidInputError>(m, "InvalidInputError", PyExc_ValueError);
  py::register_exception<DegenerateSystemError>(m, "DegenerateSystemError", PyExc_ArithmeticError);
  py::register_exception<ContractViolationError>(m, "ContractViolationError", PyExc_ValueError);
  py::register_exception<TangencyError>(m, "TangencyError", PyExc_RuntimeError);
  py::register_exception<OutOfDomainError>(m, "OutOfDomainError", PyExc_ValueError);
  py::register_exception<UnsupportedDimensionError>(m, "UnsupportedDimensionError",
                                                    PyExc_ValueError);
  py::register_exception<CoverageError>(m, "CoverageError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<symtensor::SymTensor>(m, "SymTensor")
      .def(py::init<int, int>(), py::arg("order"), py::arg("dim") = 3)
      .def_readonly("order", &symtensor::SymTensor::order)
      .def_readonly("dim", &symtensor::SymTensor::dim)
      .def_property(
          "components", [](const symtensor::SymTensor& t) { return t.c; },
          [](symtensor::SymTensor& t, const std::vector<double>& c) {
            if (c.size() != t.c.size()) {
              throw InvalidInputError("components: expected " + std::to_string(t.c.size()) +
                                      " values, got " + std::to_string(c.size()));
            }
            t.c = c;
          })
      .def("__len__", [](const symtensor::SymTensor& t) { return t.c.size(); })
      .def("__repr__", [](const symtensor::SymTensor& t) {
        return "SymTensor(order=" + std::to_string(t.order) +
               ", dim=" + std::to_string(t.dim) + ")";
      });

  m.def("sym_dim", &symtensor::sym_dim, py::arg("order"), py::arg("dim") = 3);
  m.def(
      "sym_power",
      [](const EVec& theta, int order) { return symtensor::sym_power(from_py(theta), order); },
      py::arg("theta"), py::arg("order"));
  m.def(
      "sym_product",
      [](const std::vector<EVec>& factors) {
        return symtensor::sym_product(from_py_list(factors));
      },
      py::arg("factors"));
  m.def("contract", &symtensor::contract, py::arg("a"), py::arg("b"));
  m.def(
      "polarize",
      [](const symtensor::SymTensor& f, const std::vector<EVec>& thetas) {
        return symtensor::polarize(f, from_py_list(thetas));
      },
      py::arg("tensor"), py::arg("thetas"));
  m.def("polarize_scalar", &symtensor::polarize_scalar, py::arg("values"));
  m.def(
      "is_generic",
      [](const std::vector<EVec>& dirs, int order, double tol) {
        return symtensor::is_generic(from_py_list(dirs), order, tol);
      },
      py::arg("dirs"), py::arg("order"), py::arg("tol") = 1e-6);

  py::class_<geometry::Frame>(m, "Frame")
      .def_readonly("n", &geometry::Frame::n)
      .def_readonly("angles", &geometry::Frame::angles)
      .def_property_readonly("xi",
                             [](const geometry::Frame& f) { return to_py(f.xi); })
      .def_property_readonly("eta", [](const geometry::Frame& f) {
        std::vector<EVec> out;
        out.reserve(f.eta.size());
        for (const Vec& e : f.eta) out.push_back(to_py(e));
        return out;
      });

  m.def(
      "frame_of_direction",
      [](const EVec& xi) { return geometry::frame_of_direction(from_py(xi)); }, py::arg("xi"));
  m.def("frame_from_angles", &geometry::frame_from_angles, py::arg("angles"));
  m.def(
      "angles_from_direction",
      [](const EVec& xi) { return geometry::angles_from_direction(from_py(xi)); },
      py::arg("xi"));
  m.def("great_circles_radius_ok", &geometry::great_circles_radius_ok,
        py::arg("curve_radius"), py::arg("ball_radius"));

  py::class_<xforms::TensorGrid>(m, "TensorGrid")
      .def_readonly("order", &xforms::TensorGrid::order)
      .def_readonly("dim", &xforms::TensorGrid::dim)
      .def_readonly("shape", &xforms::TensorGrid::shape)
      .def("value_at",
           [](const xforms::TensorGrid& g, const EVec& x) {
             return g.value_at(from_py(x)).c;
           },
           py::arg("x"))
      .def("save",
           [](const xforms::TensorGrid& g, const std::string& path) {
             xforms::save_tensor_grid(path, g);
           },
           py::arg("path"))
      .def_static("load", &xforms::load_tensor_grid, py::arg("path"));

  m.def(
      "make_phantom",
      [](const std::string& kind, int order, std::uint64_t seed, int resolution,
         double radius) {
        const geometry::Ball ball{Vec3::Zero(), radius};
        const harness::Phantom spec =
            harness::make_phantom_spec(kind_from_name(kind), order, ball, seed);
        return harness::make_phantom(spec, resolution);
      },
      py::arg("kind"), py::arg("order"), py::arg("seed"), py::arg("resolution"),
      py::arg("radius") = 1.0);

  m.def(
      "trt_tensor",
      [](const xforms::TensorGrid& f, const EVec& a, const EVec& xi, int channel, double step,
         bool half_line) {
        return xforms::trt_tensor(f, from_py(a), from_py(xi), channel, step,
                                  half_line ? xforms::LineDomain::HalfLine
                                            : xforms::LineDomain::FullLine);
      },
      py::arg("field"), py::arg("a"), py::arg("xi"), py::arg("channel"),
      py::arg("step") = 0.01, py::arg("half_line") = false);
  m.def(
      "trt_extended",
      [](const xforms::TensorGrid& f, const EVec& x, const EVec& xi, int channel, double step) {
        return xforms::trt_extended(f, from_py(x), from_py(xi), channel, step);
      },
      py::arg("field"), py::arg("x"), py::arg("xi"), py::arg("channel"),
      py::arg("step") = 0.01);
}
