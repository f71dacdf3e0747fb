#include <trt/harness.hpp>

#include <trt/errors.hpp>
#include <trt/recon.hpp>
#include <trt/rng.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace trt::harness {

namespace {

using nlohmann::json;

// Smooth radial cutoff: 1 at the ball center, 0 with all derivatives at the
// boundary.
double cutoff(double q) {
  if (q >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - q * q));
}

double envelope(PhantomKind kind, double q) {
  if (kind == PhantomKind::PolynomialBump) {
    const double s = std::max(0.0, 1.0 - q * q);
    return s * s * s;
  }
  return std::exp(-q * q);
}

void check_spec(const Phantom& spec) {
  if (spec.dim != 3) throw InvalidInputError("phantom: only dimension 3 is supported");
  if (spec.order < 0 || spec.order > symtensor::kMaxOrder) {
    throw InvalidInputError("phantom: order out of range");
  }
  if (spec.support.radius <= 0.0) throw InvalidInputError("phantom: support radius must be positive");
  if (spec.bumps.empty()) throw InvalidInputError("phantom: bump list is empty");
  const std::size_t ncomp = symtensor::sym_dim(spec.order, 3);
  for (const Bump& b : spec.bumps) {
    if ((b.center - spec.support.center).norm() >= spec.support.radius) {
      throw InvalidInputError("phantom: bump center lies outside the support ball");
    }
    if (b.width <= 0.0) throw InvalidInputError("phantom: bump width must be positive");
    if (b.tensor.c.size() != ncomp || b.tensor.order != spec.order) {
      throw InvalidInputError("phantom: bump tensor does not match the field order");
    }
  }
}

std::string component_label(const symtensor::SymIndexTable& table, std::size_t k) {
  if (table.order == 0) return "scalar";
  static const char* names = "xyz";
  std::string label;
  for (int j = 0; j < table.order; ++j) label.push_back(names[table.tuples[k][j]]);
  return label;
}

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw InvalidInputError("config: expected a 3-vector");
  return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

PhantomKind kind_from_name(const std::string& name) {
  if (name == "gaussian-bump") return PhantomKind::GaussianBump;
  if (name == "polynomial-bump") return PhantomKind::PolynomialBump;
  if (name == "multi-bump") return PhantomKind::MultiBump;
  throw InvalidInputError("config: unknown phantom kind '" + name + "'");
}

}  // namespace

Phantom make_phantom_spec(PhantomKind kind, int order, const geometry::Ball& support,
                          std::uint64_t seed) {
  Phantom spec;
  spec.kind = kind;
  spec.order = order;
  spec.support = support;
  spec.seed = seed;

  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
  const int count = kind == PhantomKind::MultiBump ? 3 : 1;
  for (int b = 0; b < count; ++b) {
    Bump bump;
    if (count > 1 || b > 0) {
      const Vec dir = rng.unit_vector(3);
      const double radius = 0.45 * support.radius * rng.uniform01();
      bump.center = support.center + radius * to_vec3(dir);
    } else {
      bump.center = support.center;
    }
    bump.width = support.radius * rng.uniform(0.25, 0.4);
    bump.tensor = symtensor::SymTensor(order, 3);
    double peak = 0.0;
    for (double& c : bump.tensor.c) {
      c = rng.normal();
      peak = std::max(peak, std::abs(c));
    }
    for (double& c : bump.tensor.c) c /= peak;
    spec.bumps.push_back(std::move(bump));
  }
  check_spec(spec);
  return spec;
}

symtensor::SymTensor phantom_value(const Phantom& spec, const Vec3& x) {
  check_spec(spec);
  symtensor::SymTensor out(spec.order, 3);
  const double q = (x - spec.support.center).norm() / spec.support.radius;
  const double chi = cutoff(q);
  if (chi == 0.0) return out;
  for (const Bump& b : spec.bumps) {
    const double e = envelope(spec.kind, (x - b.center).norm() / b.width);
    for (std::size_t k = 0; k < out.c.size(); ++k) out.c[k] += e * b.tensor.c[k];
  }
  for (double& c : out.c) c *= chi;
  return out;
}

xforms::TensorGrid make_phantom(const Phantom& spec, int resolution, xforms::Interp interp) {
  check_spec(spec);
  if (resolution < 2) throw InvalidInputError("make_phantom: resolution must be at least 2");
  xforms::Box box;
  box.lo = to_vec(spec.support.center - Vec3::Constant(spec.support.radius));
  box.hi = to_vec(spec.support.center + Vec3::Constant(spec.support.radius));
  const std::vector<int> shape{resolution, resolution, resolution};
  return xforms::make_tensor_grid(
      spec.order, box, shape,
      [&](const Vec& x) { return phantom_value(spec, to_vec3(x)); }, spec.support, interp);
}

std::string ErrorReport::to_text() const {
  std::ostringstream out;
  out << "order: " << order << '\n';
  out << "relative_l2: " << rel_l2 << '\n';
  out << "max_abs_error: " << max_abs << '\n';
  const auto& table = symtensor::index_table(order, 3);
  for (std::size_t k = 0; k < component_rel_l2.size(); ++k) {
    out << "component_" << component_label(table, k) << ": " << component_rel_l2[k] << '\n';
  }
  if (!provenance.empty()) out << "grids: " << provenance << '\n';
  for (const auto& [stage, seconds] : seconds_per_stage) {
    out << "seconds_" << stage << ": " << seconds << '\n';
  }
  out << "probe_count: " << probes.size() << '\n';
  return out.str();
}

std::string ErrorReport::to_csv() const {
  std::ostringstream out;
  if (!probes.empty()) {
    out << "x,y,z,truth_norm,estimate_norm,abs_error\n";
    for (const ProbeRow& row : probes) {
      out << row.x.x() << ',' << row.x.y() << ',' << row.x.z() << ',' << row.truth_norm << ','
          << row.estimate_norm << ',' << row.abs_error << '\n';
    }
    return out.str();
  }
  out << "component,relative_l2\n";
  const auto& table = symtensor::index_table(order, 3);
  for (std::size_t k = 0; k < component_rel_l2.size(); ++k) {
    out << component_label(table, k) << ',' << component_rel_l2[k] << '\n';
  }
  out << "aggregate," << rel_l2 << '\n';
  return out.str();
}

namespace {

double tensor_norm(const symtensor::SymTensor& t) {
  return std::sqrt(std::max(0.0, symtensor::contract(t, t)));
}

ProbeRow probe_row(const xforms::TensorGrid& truth, const Vec3& x,
                   const symtensor::SymTensor& estimate) {
  ProbeRow row;
  row.x = x;
  const symtensor::SymTensor t = truth.value_at(to_vec(x));
  symtensor::SymTensor diff = t;
  for (std::size_t k = 0; k < diff.c.size(); ++k) diff.c[k] -= estimate.c[k];
  row.truth_norm = tensor_norm(t);
  row.estimate_norm = tensor_norm(estimate);
  row.abs_error = tensor_norm(diff);
  return row;
}

}  // namespace

ErrorReport error_metrics(const xforms::TensorGrid& truth, const xforms::TensorGrid& estimate,
                          const std::vector<Vec3>& probes) {
  if (truth.order != estimate.order || truth.dim != estimate.dim) {
    throw InvalidInputError("error_metrics: tensor order or dimension mismatch");
  }
  if (truth.shape != estimate.shape || (truth.box.lo - estimate.box.lo).norm() > 1e-9 ||
      (truth.box.hi - estimate.box.hi).norm() > 1e-9) {
    throw InvalidInputError("error_metrics: grid geometry mismatch");
  }

  const auto& table = symtensor::index_table(truth.order, truth.dim);
  const std::size_t ncomp = truth.components();
  std::vector<double> num(ncomp, 0.0), den(ncomp, 0.0);
  double num_all = 0.0, den_all = 0.0, max_abs = 0.0;

  const int n = truth.box.dim();
  const std::size_t total = truth.sample_count();
  for (std::size_t idx = 0; idx < total; ++idx) {
    Vec x(n);
    std::size_t rem = idx;
    for (int a = n - 1; a >= 0; --a) {
      const int i = static_cast<int>(rem % truth.shape[a]);
      rem /= truth.shape[a];
      x[a] = truth.box.lo[a] + i * (truth.box.hi[a] - truth.box.lo[a]) / (truth.shape[a] - 1);
    }
    if ((to_vec3(x) - truth.support.center).norm() > truth.support.radius) continue;
    for (std::size_t k = 0; k < ncomp; ++k) {
      const double t = truth.values[idx * ncomp + k];
      const double e = estimate.values[idx * ncomp + k];
      const double d = e - t;
      num[k] += d * d;
      den[k] += t * t;
      num_all += table.mult[k] * d * d;
      den_all += table.mult[k] * t * t;
      max_abs = std::max(max_abs, std::abs(d));
    }
  }

  ErrorReport report;
  report.order = truth.order;
  report.component_rel_l2.resize(ncomp);
  for (std::size_t k = 0; k < ncomp; ++k) {
    report.component_rel_l2[k] =
        den[k] > 0.0 ? std::sqrt(num[k] / den[k]) : std::sqrt(num[k]);
  }
  report.rel_l2 = den_all > 0.0 ? std::sqrt(num_all / den_all) : std::sqrt(num_all);
  report.max_abs = max_abs;
  for (const Vec3& x : probes) {
    report.probes.push_back(probe_row(truth, x, estimate.value_at(to_vec(x))));
  }
  return report;
}

ErrorReport error_metrics(const xforms::TensorGrid& truth,
                          const std::vector<std::pair<Vec3, symtensor::SymTensor>>& estimate) {
  if (estimate.empty()) throw InvalidInputError("error_metrics: empty probe list");
  const auto& table = symtensor::index_table(truth.order, truth.dim);
  ErrorReport report;
  report.order = truth.order;
  report.component_rel_l2.assign(truth.components(), 0.0);
  std::vector<double> num(truth.components(), 0.0), den(truth.components(), 0.0);
  double num_all = 0.0, den_all = 0.0;
  for (const auto& [x, est] : estimate) {
    if (est.order != truth.order) {
      throw InvalidInputError("error_metrics: probe tensor order mismatch");
    }
    report.probes.push_back(probe_row(truth, x, est));
    const symtensor::SymTensor t = truth.value_at(to_vec(x));
    for (std::size_t k = 0; k < truth.components(); ++k) {
      const double d = est.c[k] - t.c[k];
      num[k] += d * d;
      den[k] += t.c[k] * t.c[k];
      num_all += table.mult[k] * d * d;
      den_all += table.mult[k] * t.c[k] * t.c[k];
      report.max_abs = std::max(report.max_abs, std::abs(d));
    }
  }
  for (std::size_t k = 0; k < truth.components(); ++k) {
    report.component_rel_l2[k] = den[k] > 0.0 ? std::sqrt(num[k] / den[k]) : std::sqrt(num[k]);
  }
  report.rel_l2 = den_all > 0.0 ? std::sqrt(num_all / den_all) : std::sqrt(num_all);
  return report;
}

double RunConfig::effective_p_max() const {
  return p_max > 0.0 ? p_max : 1.1 * phantom.support.radius;
}

std::string RunConfig::provenance() const {
  std::ostringstream out;
  out << "field " << field_resolution << "^3, sphere " << sphere_polar << "x" << sphere_azimuth
      << ", p " << p_count << ", lambda " << lambda_count << ", circle " << circle_nodes;
  return out.str();
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw IoError("config '" + path + "' is not valid JSON");

  RunConfig cfg;
  const std::size_t slash = path.find_last_of('/');
  cfg.base_dir = slash == std::string::npos ? "." : path.substr(0, slash);

  if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();

  if (doc.contains("phantom")) {
    const json& ph = doc.at("phantom");
    const std::string kind = ph.value("kind", std::string("gaussian-bump"));
    const int order = ph.value("order", 1);
    geometry::Ball ball{Vec3::Zero(), 1.0};
    if (ph.contains("support")) {
      const json& sup = ph.at("support");
      if (sup.contains("center")) ball.center = vec3_from_json(sup.at("center"));
      ball.radius = sup.value("radius", 1.0);
    }
    const std::uint64_t seed = ph.value("seed", cfg.seed);
    cfg.phantom = make_phantom_spec(kind_from_name(kind), order, ball, seed);
    if (ph.contains("bumps")) {
      cfg.phantom.bumps.clear();
      for (const json& jb : ph.at("bumps")) {
        Bump b;
        b.center = vec3_from_json(jb.at("center"));
        b.width = jb.at("width").get<double>();
        b.tensor = symtensor::SymTensor(order, 3);
        const json& comps = jb.at("components");
        if (comps.size() != b.tensor.c.size()) {
          throw InvalidInputError("config: bump component count does not match the order");
        }
        for (std::size_t k = 0; k < b.tensor.c.size(); ++k) {
          b.tensor.c[k] = comps.at(k).get<double>();
        }
        cfg.phantom.bumps.push_back(std::move(b));
      }
      check_spec(cfg.phantom);
    }
  }

  if (doc.contains("curve")) {
    const json& cv = doc.at("curve");
    const std::string kind = cv.value("kind", std::string("three-circles"));
    if (kind != "three-circles") {
      throw InvalidInputError("config: unknown curve kind '" + kind + "'");
    }
    cfg.curve_radius = cv.value("radius", cfg.curve_radius);
  }

  if (doc.contains("grids")) {
    const json& g = doc.at("grids");
    cfg.field_resolution = g.value("field", cfg.field_resolution);
    cfg.dataset_polar = g.value("dataset_polar", cfg.dataset_polar);
    cfg.dataset_azimuth = g.value("dataset_azimuth", cfg.dataset_azimuth);
    cfg.lambda_count = g.value("lambda", cfg.lambda_count);
    cfg.sphere_polar = g.value("sphere_polar", cfg.sphere_polar);
    cfg.sphere_azimuth = g.value("sphere_azimuth", cfg.sphere_azimuth);
    cfg.p_count = g.value("p", cfg.p_count);
    cfg.circle_nodes = g.value("circle_nodes", cfg.circle_nodes);
  }

  if (doc.contains("steps")) {
    const json& s = doc.at("steps");
    cfg.ray_step = s.value("ray", cfg.ray_step);
    cfg.h_xi = s.value("h_xi", cfg.h_xi);
    cfg.h_p = s.value("h_p", cfg.h_p);
    cfg.h_lambda = s.value("h_lambda", cfg.h_lambda);
  }

  cfg.branch_count = doc.value("branches", cfg.branch_count);
  cfg.p_max = doc.value("p_max", cfg.p_max);
  if (doc.contains("interp")) {
    const std::string name = doc.at("interp").get<std::string>();
    if (name == "linear") {
      cfg.interp = xforms::Interp::Linear;
    } else if (name == "cubic") {
      cfg.interp = xforms::Interp::Cubic;
    } else {
      throw InvalidInputError("config: unknown interpolation '" + name + "'");
    }
  }

  if (doc.contains("probes")) {
    for (const json& jp : doc.at("probes")) cfg.probes.push_back(vec3_from_json(jp));
  }

  if (doc.contains("outputs")) {
    const json& o = doc.at("outputs");
    cfg.field_name = o.value("field", cfg.field_name);
    cfg.dataset_name = o.value("dataset", cfg.dataset_name);
    cfg.wfield_name = o.value("wfield", cfg.wfield_name);
    cfg.estimate_name = o.value("estimate", cfg.estimate_name);
    cfg.report_name = o.value("report", cfg.report_name);
  }

  // Validate the curve/support pairing eagerly so misconfigured runs fail
  // before any compute.
  config_curve(cfg);
  return cfg;
}

std::shared_ptr<const geometry::Curve> config_curve(const RunConfig& cfg) {
  if (!geometry::great_circles_radius_ok(cfg.curve_radius, cfg.phantom.support.radius)) {
    std::ostringstream msg;
    msg << "config: the three-circle curve requires R > sqrt(3) * r; got R = "
        << cfg.curve_radius << ", r = " << cfg.phantom.support.radius;
    throw ContractViolationError(msg.str());
  }
  return geometry::great_circles_curve(cfg.curve_radius);
}

bool SelftestReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const SelftestCheck& c) { return c.pass; });
}

std::string SelftestReport::to_text() const {
  std::ostringstream out;
  for (const SelftestCheck& c : checks) {
    out << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << ": measured=" << c.measured
        << " tolerance=" << c.tolerance;
    if (!c.note.empty()) out << " (" << c.note << ")";
    out << '\n';
  }
  out << (all_pass() ? "selftest: all checks passed" : "selftest: FAILURES PRESENT") << '\n';
  return out.str();
}

namespace {

using symtensor::SymTensor;

SymTensor random_tensor(Rng& rng, int order) {
  SymTensor t(order, 3);
  for (double& c : t.c) c = rng.normal();
  return t;
}

void check_polarization(SelftestReport& report, Rng& rng) {
  double worst = 0.0;
  for (int m = 1; m <= 4; ++m) {
    for (int trial = 0; trial < 25; ++trial) {
      const SymTensor f = random_tensor(rng, m);
      std::vector<Vec> thetas;
      for (int j = 0; j < m; ++j) thetas.push_back(rng.unit_vector(3));
      const double lhs = symtensor::polarize(f, thetas);
      const double rhs = symtensor::contract(f, symtensor::sym_product(thetas));
      const double scale = std::max(1.0, std::abs(rhs));
      worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
  }
  report.checks.push_back({"polarization-oracle", worst <= 1e-9, worst, 1e-9, ""});
}

// Polarization sum evaluated through the weighted-contraction seam; a
// corrupted multiplicity table must push it past the oracle tolerance.
double polarize_with_weights(const SymTensor& f, const std::vector<Vec>& thetas,
                             const double* weights) {
  const auto plan = symtensor::polarization_plan(f.order);
  double acc = 0.0;
  for (const auto& term : plan) {
    Vec sum = Vec::Zero(3);
    for (int j = 0; j < f.order; ++j) {
      if (term.subset & (1u << j)) sum += thetas[j];
    }
    acc += term.coeff *
           symtensor::detail::contract_weighted(f, symtensor::sym_power(sum, f.order), weights);
  }
  return acc;
}

void check_mutation(SelftestReport& report, Rng& rng) {
  const int m = 3;
  const auto& table = symtensor::index_table(m, 3);
  std::vector<double> clean_w = table.mult;
  std::vector<double> bad_w = table.mult;
  bad_w[1] *= 1.0 + 1e-3;

  double clean = 0.0, corrupted = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const SymTensor f = random_tensor(rng, m);
    std::vector<Vec> thetas;
    for (int j = 0; j < m; ++j) thetas.push_back(rng.unit_vector(3));
    const double rhs = symtensor::contract(f, symtensor::sym_product(thetas));
    const double scale = std::max(1.0, std::abs(rhs));
    clean = std::max(clean, std::abs(polarize_with_weights(f, thetas, clean_w.data()) - rhs) / scale);
    corrupted = std::max(
        corrupted, std::abs(polarize_with_weights(f, thetas, bad_w.data()) - rhs) / scale);
  }
  const bool detected = clean <= 1e-9 && corrupted > 1e-9;
  report.checks.push_back({"polarization-mutation", detected, corrupted, 1e-9,
                           "corrupted weights must exceed the tolerance"});
}

void check_frames(SelftestReport& report, Rng& rng) {
  double worst_gram = 0.0;
  double worst_round = 0.0;
  for (int n = 3; n <= 5; ++n) {
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<double> angles(n - 1);
      for (int k = 0; k < n - 2; ++k) angles[k] = rng.uniform(0.05, std::numbers::pi - 0.05);
      angles[n - 2] = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const geometry::Frame frame = geometry::frame_from_angles(angles);

      Mat rows(n, n);
      rows.col(0) = frame.xi;
      for (int j = 0; j < n - 1; ++j) rows.col(j + 1) = frame.eta[j];
      worst_gram = std::max(
          worst_gram,
          (rows.transpose() * rows - Mat::Identity(n, n)).cwiseAbs().maxCoeff());

      const std::vector<double> back = geometry::angles_from_direction(frame.xi);
      const geometry::Frame again = geometry::frame_from_angles(back);
      worst_round = std::max(worst_round, (again.xi - frame.xi).norm());
    }
  }
  report.checks.push_back({"frame-gram", worst_gram <= 1e-12, worst_gram, 1e-12, ""});
  report.checks.push_back({"frame-roundtrip", worst_round <= 1e-10, worst_round, 1e-10, ""});
}

xforms::ScalarGrid gaussian_grid(double width, int resolution) {
  xforms::Box box;
  return xforms::make_scalar_grid(
      box, {resolution, resolution, resolution},
      [&](const Vec& x) { return std::exp(-x.squaredNorm() / (width * width)); },
      xforms::Interp::Linear);
}

void check_radon(SelftestReport& report, Rng& rng) {
  const double width = 0.35;
  const xforms::ScalarGrid g = gaussian_grid(width, 64);

  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    geometry::PlaneCoords plane;
    plane.omega = to_vec3(rng.unit_vector(3));
    plane.p = rng.uniform(-0.5, 0.5);
    const double got = xforms::radon_forward(g, plane, 64);
    const double want = std::numbers::pi * width * width *
                        std::exp(-plane.p * plane.p / (width * width));
    worst = std::max(worst, std::abs(got - want) / want);
  }
  report.checks.push_back({"radon-analytic", worst <= 2e-2, worst, 2e-2, ""});

  const xforms::SphereGrid grid = xforms::sphere_grid(3, 12, 24);
  const xforms::Sinogram sino = xforms::radon_sinogram(g, grid, 64, 1.2, 48);
  const xforms::RadonInverter inverter(sino);
  double num = 0.0, den = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 x = 0.5 * to_vec3(rng.unit_vector(3)) * rng.uniform01();
    const double want = std::exp(-x.squaredNorm() / (width * width));
    const double got = inverter.at(to_vec(x));
    num += (got - want) * (got - want);
    den += want * want;
  }
  const double rel = std::sqrt(num / den);
  report.checks.push_back({"radon-inverse", rel <= 5e-2, rel, 5e-2, ""});
}

void check_cramer(SelftestReport& report, Rng& rng) {
  double worst = 0.0;
  for (int m = 1; m <= 3; ++m) {
    for (int trial = 0; trial < 40; ++trial) {
      const Vec normal = rng.unit_vector(3);
      const geometry::Frame plane = geometry::frame_of_direction(normal);
      std::vector<Vec> dirs;
      while (static_cast<int>(dirs.size()) < m + 1) {
        const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const Vec cand =
            to_vec(std::cos(ang) * plane.alpha() + std::sin(ang) * plane.beta());
        bool ok = true;
        for (const Vec& d : dirs) {
          if (symtensor::pair_independence_margin({d, cand}) < 0.05) ok = false;
        }
        if (ok) dirs.push_back(cand);
      }
      const symtensor::BasisSystem sys = symtensor::basis_system(dirs, m);
      const Vec theta = rng.unit_vector(3);
      const Eigen::VectorXd coeffs = symtensor::cramer_coefficients(sys, theta);
      const SymTensor want = symtensor::sym_power(theta, m);
      std::vector<double> got(want.c.size(), 0.0);
      for (std::size_t j = 0; j < sys.columns.size(); ++j) {
        for (std::size_t k = 0; k < got.size(); ++k) {
          got[k] += coeffs[static_cast<Eigen::Index>(j)] * sys.columns[j].c[k];
        }
      }
      for (std::size_t k = 0; k < got.size(); ++k) {
        worst = std::max(worst, std::abs(got[k] - want.c[k]));
      }
    }
  }
  report.checks.push_back({"cramer-roundtrip", worst <= 1e-10, worst, 1e-10, ""});
}

void check_algebraic(SelftestReport& report, Rng& rng) {
  const std::shared_ptr<const geometry::Curve> curve = geometry::great_circles_curve(3.0);
  double worst = 0.0;
  for (int m = 1; m <= 2; ++m) {
    const Phantom spec = make_phantom_spec(PhantomKind::MultiBump, m, {Vec3::Zero(), 1.0}, 17);
    for (int trial = 0; trial < 20; ++trial) {
      const Vec3 x = 0.6 * to_vec3(rng.unit_vector(3)) * rng.uniform01();
      const SymTensor truth = phantom_value(spec, x);
      const recon::ReferenceSystem ref = recon::reference_system_at(*curve, x, m);
      const auto provider = [&](int channel, int slot) {
        for (std::size_t k = 0; k < ref.sys.labels.size(); ++k) {
          if (ref.sys.labels[k].first == channel && ref.sys.labels[k].second == slot) {
            return symtensor::contract(truth, ref.sys.columns[k]);
          }
        }
        throw InvalidInputError("selftest: unknown basis label");
      };
      const SymTensor got = recon::recover_tensor_components(ref, provider);
      for (std::size_t k = 0; k < got.c.size(); ++k) {
        worst = std::max(worst, std::abs(got.c[k] - truth.c[k]));
      }
    }
  }
  report.checks.push_back({"algebraic-exactness", worst <= 1e-9, worst, 1e-9, ""});
}

// Brute-force weighted plane integral: the field contracted with the frame
// tensor of the view direction from the branch anchor, integrated over the
// plane patch covering the grid box.
double weighted_plane_integral(const xforms::TensorGrid& f, const geometry::Curve& curve,
                               const Vec3& omega, double p, int branch, int channel,
                               int resolution) {
  const geometry::IntersectionSet isect =
      geometry::plane_curve_intersections(curve, {omega, p});
  if (branch >= static_cast<int>(isect.points.size())) {
    throw CoverageError("selftest: oracle plane lost the branch");
  }
  const Vec3 gamma0 = isect.points[branch].point;
  const geometry::Frame plane_frame = geometry::frame_of_direction(to_vec(omega));
  const Vec3 e1 = plane_frame.alpha();
  const Vec3 e2 = plane_frame.beta();
  const Vec3 foot = p * omega;
  const double L = f.box.half_diagonal();

  const int m = f.order;
  double acc = 0.0;
  const double cell = 2.0 * L / resolution;
  std::vector<double> comps(f.components());
  for (int iu = 0; iu < resolution; ++iu) {
    for (int iv = 0; iv < resolution; ++iv) {
      const double u = -L + (iu + 0.5) * cell;
      const double v = -L + (iv + 0.5) * cell;
      const Vec3 y = foot + u * e1 + v * e2;
      f.components_at(to_vec(y), comps.data());
      bool zero = true;
      for (double c : comps) {
        if (c != 0.0) zero = false;
      }
      if (zero) continue;
      const Vec3 xi = (y - gamma0).normalized();
      const geometry::Frame view = geometry::frame_of_direction(to_vec(xi));
      std::vector<Vec> factors;
      for (int i = 0; i < channel; ++i) factors.push_back(to_vec(view.alpha()));
      for (int i = channel; i < m; ++i) factors.push_back(to_vec(view.beta()));
      const SymTensor weight = symtensor::sym_product(factors);
      SymTensor fx(m, 3);
      fx.c.assign(comps.begin(), comps.end());
      acc += symtensor::contract(fx, weight);
    }
  }
  return acc * cell * cell;
}

void check_w_identity(SelftestReport& report) {
  const Phantom spec = make_phantom_spec(PhantomKind::GaussianBump, 1, {Vec3::Zero(), 1.0}, 5);
  const auto field = std::make_shared<const xforms::TensorGrid>(make_phantom(spec, 48));
  const std::shared_ptr<const geometry::Curve> curve = geometry::great_circles_curve(3.0);

  recon::TRTDataset data;
  data.curve = curve;
  data.field = field;
  data.order = 1;
  data.channel_count = 2;
  data.ray_step = 0.02;

  recon::WOptions opt;
  opt.circle_nodes = 24;
  opt.h_p = 0.02;

  const std::vector<Vec3> dirs = geometry::fibonacci_sphere(6);
  const int channel = 1;
  const int branch = 0;
  double num = 0.0, den = 0.0;
  for (const Vec3& omega : dirs) {
    for (int ip = 0; ip < 6; ++ip) {
      const double p = -0.45 + 0.18 * ip;
      double sample = 0.0;
      try {
        sample = recon::weighted_data_W(data, {omega, p}, channel, branch, opt).value;
      } catch (const Error&) {
        continue;
      }
      const double h = 0.02;
      const double g0 = weighted_plane_integral(*field, *curve, omega, p - h, branch, channel, 48);
      const double g1 = weighted_plane_integral(*field, *curve, omega, p, branch, channel, 48);
      const double g2 = weighted_plane_integral(*field, *curve, omega, p + h, branch, channel, 48);
      const double oracle = (g0 - 2.0 * g1 + g2) / (h * h);
      num += (sample - oracle) * (sample - oracle);
      den += oracle * oracle;
    }
  }
  const double rel = den > 0.0 ? std::sqrt(num / den) : 0.0;
  report.checks.push_back({"w-identity", rel <= 5e-2, rel, 5e-2,
                           "data-side functional vs second offset derivative of the forward "
                           "weighted plane integrals"});
}

void check_end_to_end(SelftestReport& report) {
  const Phantom spec = make_phantom_spec(PhantomKind::GaussianBump, 1, {Vec3::Zero(), 1.0}, 11);
  const auto field = std::make_shared<const xforms::TensorGrid>(make_phantom(spec, 48));
  const std::shared_ptr<const geometry::Curve> curve = geometry::great_circles_curve(3.0);

  recon::TRTDataset data;
  data.curve = curve;
  data.field = field;
  data.order = 1;
  data.channel_count = 2;
  data.ray_step = 0.025;

  recon::WOptions opt;
  opt.circle_nodes = 32;

  const xforms::SphereGrid grid = xforms::sphere_grid(3, 16, 32);
  const recon::WField w = recon::build_w_field(data, grid, 64, 1.1, 2, opt);

  Rng rng(23);
  std::vector<std::pair<Vec3, SymTensor>> estimates;
  for (int trial = 0; trial < 30; ++trial) {
    const Vec3 x = 0.6 * to_vec3(rng.unit_vector(3)) * rng.uniform01();
    try {
      const recon::ReferenceSystem ref = recon::reference_system_at(*curve, x, 1);
      const Vec v = recon::recover_vector_numeric(ref, w, x);
      SymTensor est(1, 3);
      for (int k = 0; k < 3; ++k) est.c[k] = v[k];
      estimates.emplace_back(x, est);
    } catch (const Error&) {
      continue;
    }
  }
  double measured = 1.0;
  if (!estimates.empty()) {
    const xforms::TensorGrid truth = make_phantom(spec, 48);
    measured = error_metrics(truth, estimates).rel_l2;
  }
  report.checks.push_back({"end-to-end-m1", measured <= 0.15, measured, 0.15,
                           "order-1 reconstruction at probe points"});
}

}  // namespace

SelftestReport selftest_suite(SelftestLevel level) {
  SelftestReport report;
  Rng rng(0x5e1f7e57u);
  check_polarization(report, rng);
  check_mutation(report, rng);
  check_frames(report, rng);
  check_radon(report, rng);
  check_cramer(report, rng);
  check_algebraic(report, rng);
  check_w_identity(report);
  if (level == SelftestLevel::Full) check_end_to_end(report);
  return report;
}

}  // namespace trt::harness
