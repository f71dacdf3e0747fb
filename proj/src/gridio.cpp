// Grid containers share one on-disk layout: a single-line JSON header, a
// newline, then the sample payload as raw little-endian float64 in the same
// row-major order the in-memory containers use.

#include <trt/errors.hpp>
#include <trt/recon.hpp>
#include <trt/xforms.hpp>

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
using trt::IoError;
using trt::Vec;

json vec_to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vec vec_from_json(const json& j) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

void write_container(const std::string& path, const json& header,
                     const std::vector<double>& payload) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << header.dump() << '\n';
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(double)));
  if (!out) throw IoError("short write to '" + path + "'");
}

json read_header(std::ifstream& in, const std::string& path, const char* kind) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("cannot read header line from '" + path + "'");
  const json header = json::parse(line, nullptr, false);
  if (header.is_discarded()) throw IoError("malformed header in '" + path + "'");
  if (header.value("kind", std::string()) != kind) {
    throw IoError("'" + path + "' does not hold a " + kind + " container");
  }
  return header;
}

std::vector<double> read_payload(std::ifstream& in, const std::string& path, std::size_t count) {
  std::vector<double> payload(count);
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double)) {
    throw IoError("truncated payload in '" + path + "'");
  }
  return payload;
}

std::string interp_name(trt::xforms::Interp interp) {
  return interp == trt::xforms::Interp::Cubic ? "cubic" : "linear";
}

trt::xforms::Interp interp_from_name(const std::string& name, const std::string& path) {
  if (name == "linear") return trt::xforms::Interp::Linear;
  if (name == "cubic") return trt::xforms::Interp::Cubic;
  throw IoError("'" + path + "' names unknown interpolation '" + name + "'");
}

}  // namespace

namespace trt::xforms {

void save_scalar_grid(const std::string& path, const ScalarGrid& g) {
  json header;
  header["kind"] = "scalar_grid";
  header["box_lo"] = vec_to_json(g.box.lo);
  header["box_hi"] = vec_to_json(g.box.hi);
  header["shape"] = g.shape;
  header["interp"] = interp_name(g.interp);
  header["count"] = g.values.size();
  write_container(path, header, g.values);
}

ScalarGrid load_scalar_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  const json header = read_header(in, path, "scalar_grid");
  ScalarGrid g;
  g.box.lo = vec_from_json(header.at("box_lo"));
  g.box.hi = vec_from_json(header.at("box_hi"));
  g.shape = header.at("shape").get<std::vector<int>>();
  g.interp = interp_from_name(header.at("interp").get<std::string>(), path);
  g.values = read_payload(in, path, header.at("count").get<std::size_t>());
  return g;
}

void save_tensor_grid(const std::string& path, const TensorGrid& g) {
  json header;
  header["kind"] = "tensor_grid";
  header["order"] = g.order;
  header["dim"] = g.dim;
  header["box_lo"] = vec_to_json(g.box.lo);
  header["box_hi"] = vec_to_json(g.box.hi);
  header["shape"] = g.shape;
  header["support_center"] = {g.support.center.x(), g.support.center.y(), g.support.center.z()};
  header["support_radius"] = g.support.radius;
  header["interp"] = interp_name(g.interp);
  header["count"] = g.values.size();
  write_container(path, header, g.values);
}

TensorGrid load_tensor_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  const json header = read_header(in, path, "tensor_grid");
  TensorGrid g;
  g.order = header.at("order").get<int>();
  g.dim = header.at("dim").get<int>();
  g.box.lo = vec_from_json(header.at("box_lo"));
  g.box.hi = vec_from_json(header.at("box_hi"));
  g.shape = header.at("shape").get<std::vector<int>>();
  const auto& c = header.at("support_center");
  g.support.center = Vec3(c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>());
  g.support.radius = header.at("support_radius").get<double>();
  g.interp = interp_from_name(header.at("interp").get<std::string>(), path);
  g.values = read_payload(in, path, header.at("count").get<std::size_t>());
  return g;
}

void save_sinogram(const std::string& path, const Sinogram& s) {
  json header;
  header["kind"] = "sinogram";
  header["n"] = s.grid.n;
  header["polar"] = s.grid.polar_count;
  header["azimuth"] = s.grid.azimuth_count;
  header["p_min"] = s.p_min;
  header["p_max"] = s.p_max;
  header["p_count"] = s.p_count;
  header["count"] = s.values.size();
  write_container(path, header, s.values);
}

Sinogram load_sinogram(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  const json header = read_header(in, path, "sinogram");
  Sinogram s;
  s.grid = sphere_grid(header.at("n").get<int>(), header.at("polar").get<int>(),
                       header.at("azimuth").get<int>());
  s.p_min = header.at("p_min").get<double>();
  s.p_max = header.at("p_max").get<double>();
  s.p_count = header.at("p_count").get<int>();
  s.values = read_payload(in, path, header.at("count").get<std::size_t>());
  return s;
}

}  // namespace trt::xforms

namespace trt::recon {

void save_dataset(const std::string& path, const TRTDataset& data) {
  const auto* circles = dynamic_cast<const geometry::GreatCirclesCurve*>(data.curve.get());
  if (circles == nullptr) {
    throw InvalidInputError("save_dataset: only the three-circle curve is serializable");
  }
  json header;
  header["kind"] = "trt_dataset";
  header["curve"] = "three-circles";
  header["radius"] = circles->radius();
  header["order"] = data.order;
  header["channels"] = data.channel_count;
  header["lambda_count"] = data.lambda_count;
  header["polar"] = data.directions.polar_count;
  header["azimuth"] = data.directions.azimuth_count;
  header["ray_step"] = data.ray_step;
  header["seed"] = data.seed;
  header["count"] = data.values.size();
  write_container(path, header, data.values);
}

TRTDataset load_dataset(const std::string& path,
                        std::shared_ptr<const xforms::TensorGrid> field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  const json header = read_header(in, path, "trt_dataset");
  if (header.value("curve", std::string()) != "three-circles") {
    throw IoError("'" + path + "' names an unknown acquisition curve");
  }
  TRTDataset data;
  data.curve = geometry::great_circles_curve(header.at("radius").get<double>());
  data.field = std::move(field);
  data.order = header.at("order").get<int>();
  data.channel_count = header.at("channels").get<int>();
  data.lambda_count = header.at("lambda_count").get<int>();
  data.directions = xforms::sphere_grid(3, header.at("polar").get<int>(),
                                        header.at("azimuth").get<int>());
  data.ray_step = header.at("ray_step").get<double>();
  data.seed = header.at("seed").get<std::uint64_t>();
  data.values = read_payload(in, path, header.at("count").get<std::size_t>());
  if (data.field && data.field->order != data.order) {
    throw InvalidInputError("load_dataset: supplied field order does not match the dataset");
  }
  return data;
}

void save_w_field(const std::string& path, const WField& w) {
  json header;
  header["kind"] = "wfield";
  header["n"] = w.grid.n;
  header["polar"] = w.grid.polar_count;
  header["azimuth"] = w.grid.azimuth_count;
  header["p_min"] = w.p_min;
  header["p_max"] = w.p_max;
  header["p_count"] = w.p_count;
  header["order"] = w.order;
  header["branch_count"] = w.branch_count;
  header["count"] = w.values.size();
  // Validity flags ride behind the samples as 0/1 doubles.
  std::vector<double> payload = w.values;
  payload.reserve(w.values.size() * 2);
  for (std::uint8_t flag : w.valid) payload.push_back(flag ? 1.0 : 0.0);
  write_container(path, header, payload);
}

WField load_w_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  const json header = read_header(in, path, "wfield");
  WField w;
  w.grid = xforms::sphere_grid(header.at("n").get<int>(), header.at("polar").get<int>(),
                               header.at("azimuth").get<int>());
  w.p_min = header.at("p_min").get<double>();
  w.p_max = header.at("p_max").get<double>();
  w.p_count = header.at("p_count").get<int>();
  w.order = header.at("order").get<int>();
  w.branch_count = header.at("branch_count").get<int>();
  const std::size_t count = header.at("count").get<std::size_t>();
  const std::vector<double> payload = read_payload(in, path, count * 2);
  w.values.assign(payload.begin(), payload.begin() + static_cast<std::ptrdiff_t>(count));
  w.valid.resize(count);
  for (std::size_t i = 0; i < count; ++i) w.valid[i] = payload[count + i] != 0.0 ? 1 : 0;
  return w;
}

}  // namespace trt::recon
