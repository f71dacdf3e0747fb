// Command-line front end: simulate -> reconstruct -> validate plus the
// geometry certificate and the identity self-test.

#include <trt/errors.hpp>
#include <trt/harness.hpp>
#include <trt/recon.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

namespace fs = std::filesystem;
using namespace trt;

namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

int run_simulate(const std::string& config_path, const std::string& out_dir) {
  const harness::RunConfig cfg = harness::load_run_config(config_path);
  fs::create_directories(out_dir);

  Stopwatch phantom_clock;
  const xforms::TensorGrid field =
      harness::make_phantom(cfg.phantom, cfg.field_resolution, cfg.interp);
  xforms::save_tensor_grid((fs::path(out_dir) / cfg.field_name).string(), field);
  std::cout << "stage phantom: " << phantom_clock.seconds() << " s\n";

  Stopwatch dataset_clock;
  const auto field_ptr = std::make_shared<const xforms::TensorGrid>(field);
  const auto curve = harness::config_curve(cfg);
  const xforms::SphereGrid directions =
      xforms::sphere_grid(3, cfg.dataset_polar, cfg.dataset_azimuth);
  recon::TRTDataset data =
      recon::acquire_dataset(field_ptr, curve, cfg.lambda_count, directions, cfg.ray_step);
  data.seed = cfg.seed;
  recon::save_dataset((fs::path(out_dir) / cfg.dataset_name).string(), data);
  std::cout << "stage dataset: " << dataset_clock.seconds() << " s\n";

  std::cout << "simulate: wrote " << cfg.field_name << " and " << cfg.dataset_name << " to "
            << out_dir << '\n';
  return 0;
}

int run_reconstruct(const std::string& config_path, const std::string& data_dir,
                    const std::string& out_dir) {
  const harness::RunConfig cfg = harness::load_run_config(config_path);
  fs::create_directories(out_dir);

  const auto truth = std::make_shared<const xforms::TensorGrid>(
      xforms::load_tensor_grid((fs::path(data_dir) / cfg.field_name).string()));
  recon::TRTDataset data =
      recon::load_dataset((fs::path(data_dir) / cfg.dataset_name).string(), truth);

  recon::WOptions opt;
  opt.circle_nodes = cfg.circle_nodes;
  opt.h_p = cfg.h_p;
  opt.h_lambda = cfg.h_lambda;
  opt.h_xi = cfg.h_xi;

  Stopwatch w_clock;
  const xforms::SphereGrid grid = xforms::sphere_grid(3, cfg.sphere_polar, cfg.sphere_azimuth);
  const recon::WField w = recon::build_w_field(data, grid, cfg.p_count, cfg.effective_p_max(),
                                               cfg.branch_count, opt);
  recon::save_w_field((fs::path(out_dir) / cfg.wfield_name).string(), w);
  std::cout << "stage wfield: " << w_clock.seconds() << " s\n";

  Stopwatch recon_clock;
  const int m = truth->order;
  xforms::TensorGrid estimate;
  estimate.order = m;
  estimate.dim = 3;
  estimate.box = truth->box;
  estimate.shape = truth->shape;
  estimate.support = truth->support;
  estimate.interp = truth->interp;
  estimate.values.assign(truth->values.size(), 0.0);

  const std::size_t ncomp = estimate.components();
  const std::size_t total = estimate.sample_count();
  const auto& curve = *data.curve;
  std::size_t recovered = 0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    Vec x(3);
    std::size_t rem = idx;
    for (int a = 2; a >= 0; --a) {
      const int i = static_cast<int>(rem % estimate.shape[a]);
      rem /= estimate.shape[a];
      x[a] = estimate.box.lo[a] +
             i * (estimate.box.hi[a] - estimate.box.lo[a]) / (estimate.shape[a] - 1);
    }
    const Vec3 x3 = to_vec3(x);
    if ((x3 - estimate.support.center).norm() > estimate.support.radius) continue;
    try {
      symtensor::SymTensor value(m, 3);
      if (m == 0) {
        value.c[0] = recon::recover_A_component(w, x3, 0, 0);
      } else {
        const recon::ReferenceSystem ref = recon::reference_system_at(curve, x3, m);
        value = recon::recover_tensor_components(ref, [&](int channel, int slot) {
          return recon::recover_A_component(w, x3, channel, slot - 1);
        });
      }
      std::copy(value.c.begin(), value.c.end(), estimate.values.begin() + idx * ncomp);
      ++recovered;
    } catch (const Error&) {
      // Uncovered or degenerate nodes stay zero.
    }
  }
  xforms::save_tensor_grid((fs::path(out_dir) / cfg.estimate_name).string(), estimate);
  std::cout << "stage reconstruct: " << recon_clock.seconds() << " s (" << recovered << " of "
            << total << " nodes)\n";

  harness::ErrorReport report = harness::error_metrics(*truth, estimate, cfg.probes);
  report.provenance = cfg.provenance();
  write_text(fs::path(out_dir) / (cfg.report_name + ".csv"), report.to_csv());
  write_text(fs::path(out_dir) / (cfg.report_name + ".txt"), report.to_text());
  std::cout << "relative_l2: " << report.rel_l2 << '\n';
  return 0;
}

int run_validate(const std::string& truth_path, const std::string& estimate_path,
                 const std::string& report_path) {
  const xforms::TensorGrid truth = xforms::load_tensor_grid(truth_path);
  const xforms::TensorGrid estimate = xforms::load_tensor_grid(estimate_path);
  const harness::ErrorReport report = harness::error_metrics(truth, estimate);
  write_text(report_path + ".csv", report.to_csv());
  write_text(report_path + ".txt", report.to_text());
  std::cout << report.to_text();
  return 0;
}

int run_check_curve(const std::string& config_path) {
  const harness::RunConfig cfg = harness::load_run_config(config_path);
  const auto curve = harness::config_curve(cfg);

  const geometry::EncompassReport enc = geometry::encompasses(*curve, cfg.phantom.support);
  std::cout << "encompasses: " << (enc.encompassed ? "yes" : "no") << '\n';
  if (!enc.encompassed && enc.has_witness) {
    std::cout << "witness_point: (" << enc.witness_point.x() << ", " << enc.witness_point.y()
              << ", " << enc.witness_point.z() << ")\n";
  }

  const geometry::KTReport kt =
      geometry::kirillov_tuy_report(*curve, cfg.phantom.support, cfg.phantom.order);
  std::cout << kt.to_text();
  return (enc.encompassed && kt.pass()) ? 0 : 1;
}

int run_selftest(bool full) {
  const harness::SelftestReport report =
      harness::selftest_suite(full ? harness::SelftestLevel::Full : harness::SelftestLevel::Quick);
  std::cout << report.to_text();
  return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transverse ray transform simulation and reconstruction"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir;
  std::string truth_path, estimate_path, report_path;
  bool full = false;

  CLI::App* simulate = app.add_subcommand("simulate", "Sample a phantom and acquire its dataset");
  simulate->add_option("--config", config_path, "Run configuration (JSON)")->required();
  simulate->add_option("--out", out_dir, "Output directory")->required();

  CLI::App* reconstruct =
      app.add_subcommand("reconstruct", "Recover the field from an acquired dataset");
  reconstruct->add_option("--config", config_path, "Run configuration (JSON)")->required();
  reconstruct->add_option("--data", data_dir, "Directory holding simulate outputs")->required();
  reconstruct->add_option("--out", out_dir, "Output directory")->required();

  CLI::App* validate = app.add_subcommand("validate", "Compare an estimate against ground truth");
  validate->add_option("--truth", truth_path, "Ground-truth tensor grid")->required();
  validate->add_option("--estimate", estimate_path, "Estimated tensor grid")->required();
  validate->add_option("--report", report_path, "Report base path (.csv/.txt appended)")
      ->required();

  CLI::App* check_curve =
      app.add_subcommand("check-curve", "Certify the acquisition geometry for the config");
  check_curve->add_option("--config", config_path, "Run configuration (JSON)")->required();

  CLI::App* selftest = app.add_subcommand("selftest", "Run the identity self-test suite");
  selftest->add_flag("--full", full, "Include the end-to-end reconstruction check");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return run_simulate(config_path, out_dir);
    if (reconstruct->parsed()) return run_reconstruct(config_path, data_dir, out_dir);
    if (validate->parsed()) return run_validate(truth_path, estimate_path, report_path);
    if (check_curve->parsed()) return run_check_curve(config_path);
    if (selftest->parsed()) return run_selftest(full);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
