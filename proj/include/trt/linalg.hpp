#pragma once

#include <Eigen/Dense>

#include <initializer_list>

namespace trt {

// Small dense vector with inline storage; geometry dimensions stay <= 8.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 8, 1>;
using Vec3 = Eigen::Vector3d;
using Mat = Eigen::MatrixXd;

inline Vec make_vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline Vec to_vec(const Vec3& x) {
  Vec v(3);
  v[0] = x[0];
  v[1] = x[1];
  v[2] = x[2];
  return v;
}

inline Vec3 to_vec3(const Vec& x) { return Vec3(x[0], x[1], x[2]); }

}  // namespace trt
