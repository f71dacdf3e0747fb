#pragma once

#include <trt/geometry.hpp>
#include <trt/linalg.hpp>
#include <trt/symtensor.hpp>
#include <trt/xforms.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

/// Phantom generation, error metrics, run configuration, and the self-test
/// suite behind the command-line pipeline.
namespace trt::harness {

enum class PhantomKind { GaussianBump, PolynomialBump, MultiBump };

/// One smooth bump: a constant direction tensor scaled by a radial envelope.
struct Bump {
  Vec3 center = Vec3::Zero();
  double width = 0.3;
  symtensor::SymTensor tensor;
};

/// Compactly supported symmetric tensor field: a sum of bumps multiplied by a
/// smooth cutoff that vanishes at the support ball boundary.
struct Phantom {
  PhantomKind kind = PhantomKind::GaussianBump;
  int order = 1;
  int dim = 3;
  geometry::Ball support{Vec3::Zero(), 1.0};
  std::vector<Bump> bumps;
  std::uint64_t seed = 0;
};

/// Fills the bump list deterministically from the seed: one bump for the
/// single-bump kinds, three for the multi-bump kind.
Phantom make_phantom_spec(PhantomKind kind, int order, const geometry::Ball& support,
                          std::uint64_t seed);

/// Exact field value at x; numerically zero outside the support ball.
symtensor::SymTensor phantom_value(const Phantom& spec, const Vec3& x);

/// Samples the phantom onto a cube grid circumscribing the support ball.
xforms::TensorGrid make_phantom(const Phantom& spec, int resolution,
                                xforms::Interp interp = xforms::Interp::Linear);

struct ProbeRow {
  Vec3 x = Vec3::Zero();
  double truth_norm = 0.0;
  double estimate_norm = 0.0;
  double abs_error = 0.0;
};

struct ErrorReport {
  int order = 0;
  std::vector<double> component_rel_l2;
  double rel_l2 = 0.0;
  double max_abs = 0.0;
  std::vector<ProbeRow> probes;
  std::string provenance;
  std::map<std::string, double> seconds_per_stage;

  std::string to_text() const;
  std::string to_csv() const;
};

/// Relative L2 metrics restricted to the truth's support ball, optionally
/// with a probe table.
ErrorReport error_metrics(const xforms::TensorGrid& truth, const xforms::TensorGrid& estimate,
                          const std::vector<Vec3>& probes = {});

/// Probe-list variant for reconstructions evaluated pointwise.
ErrorReport error_metrics(const xforms::TensorGrid& truth,
                          const std::vector<std::pair<Vec3, symtensor::SymTensor>>& estimate);

/// Single-document JSON run description; all contained file names resolve
/// relative to the directory the config was loaded from.
struct RunConfig {
  Phantom phantom;
  double curve_radius = 3.0;

  int field_resolution = 64;
  int dataset_polar = 16;
  int dataset_azimuth = 32;
  int lambda_count = 512;
  int sphere_polar = 32;
  int sphere_azimuth = 64;
  int p_count = 128;
  int circle_nodes = 64;
  int branch_count = 2;

  double ray_step = 0.02;
  double h_xi = 1e-3;
  double h_p = 1e-2;
  double h_lambda = 1e-3;
  double p_max = 0.0;  // 0 selects 1.1 x support radius

  xforms::Interp interp = xforms::Interp::Linear;
  std::vector<Vec3> probes;
  std::uint64_t seed = 0;

  std::string field_name = "phantom.tgrid";
  std::string dataset_name = "dataset.trt";
  std::string wfield_name = "wfield.bin";
  std::string estimate_name = "estimate.tgrid";
  std::string report_name = "report";

  std::string base_dir = ".";

  double effective_p_max() const;
  std::string provenance() const;
};

RunConfig load_run_config(const std::string& path);

/// Builds the acquisition curve described by the config; enforces the
/// radius inequality required by the three-circle geometry.
std::shared_ptr<const geometry::Curve> config_curve(const RunConfig& cfg);

enum class SelftestLevel { Quick, Full };

struct SelftestCheck {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string note;
};

struct SelftestReport {
  std::vector<SelftestCheck> checks;

  bool all_pass() const;
  std::string to_text() const;
};

/// Seeded identity checks across the modules, including a mutation arm that
/// corrupts a multiplicity weight and expects the polarization oracle to
/// notice. Full level appends the end-to-end order-1 reconstruction.
SelftestReport selftest_suite(SelftestLevel level);

}  // namespace trt::harness
