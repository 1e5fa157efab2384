// Copyright 2026 The brnash Authors
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

#include "brnash/frenet.hpp"

#include <cmath>
#include <stdexcept>

namespace brnash {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg25 = 25.0 * kPi / 180.0;
}  // namespace

Bounds Bounds::benchmark() {
  Bounds b;
  b.x_lo = Vec(4);
  b.x_hi = Vec(4);
  b.u_lo = Vec(2);
  b.u_hi = Vec(2);
  b.x_lo << 0.0, -kPi, 0.0, -0.5;
  b.x_hi << 2.0, kPi, 3.5 * kPi / 2.0, 0.5;
  b.u_lo << -2.0, -kDeg25;
  b.u_hi << 2.0, kDeg25;
  b.d_safe = 0.25;
  return b;
}

double wrap_angle(double a) {
  if (a >= -kPi && a <= kPi) return a;
  double w = std::fmod(a + kPi, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  return w - kPi;
}

double slip_angle(double delta, const VehicleParams& vp) {
  if (!(std::abs(delta) < kPi / 2.0))
    throw std::domain_error("slip_angle: |delta| must be < pi/2");
  return std::atan(vp.lf / vp.wheelbase() * std::tan(delta));
}

double slip_angle_derivative(double delta, const VehicleParams& vp) {
  if (!(std::abs(delta) < kPi / 2.0))
    throw std::domain_error("slip_angle_derivative: |delta| must be < pi/2");
  const double rf = vp.lf / vp.wheelbase();
  const double td = std::tan(delta);
  const double sec2 = 1.0 + td * td;
  return rf * sec2 / (1.0 + rf * rf * td * td);
}

Eigen::Vector4d frenet_derivative(const Eigen::Vector4d& x, const Eigen::Vector2d& u,
                                  const TrackParams& tp, const VehicleParams& vp,
                                  Mat* Jx, Mat* Ju) {
  const double v = x[FS_V];
  const double psi = x[FS_PSI];
  const double t = x[FS_T];
  const double delta = u[FU_DELTA];

  const double D = 1.0 - tp.kappa * t;
  if (D <= 0.0) throw std::domain_error("frenet_derivative: 1 - kappa*t <= 0");

  const double beta = slip_angle(delta, vp);
  const double c = std::cos(psi + beta);
  const double sn = std::sin(psi + beta);
  const double sb = std::sin(beta);
  const double cb = std::cos(beta);

  Eigen::Vector4d f;
  f[FS_V] = u[FU_A];
  f[FS_PSI] = v * sb / vp.lr - tp.kappa * v * c / D;
  f[FS_S] = v * c / D;
  f[FS_T] = v * sn;

  if (Jx != nullptr) {
    Jx->setZero(4, 4);
    (*Jx)(FS_PSI, FS_V) = sb / vp.lr - tp.kappa * c / D;
    (*Jx)(FS_PSI, FS_PSI) = tp.kappa * v * sn / D;
    (*Jx)(FS_PSI, FS_T) = -tp.kappa * tp.kappa * v * c / (D * D);
    (*Jx)(FS_S, FS_V) = c / D;
    (*Jx)(FS_S, FS_PSI) = -v * sn / D;
    (*Jx)(FS_S, FS_T) = v * c * tp.kappa / (D * D);
    (*Jx)(FS_T, FS_V) = sn;
    (*Jx)(FS_T, FS_PSI) = v * c;
  }
  if (Ju != nullptr) {
    const double dbeta = slip_angle_derivative(delta, vp);
    Ju->setZero(4, 2);
    (*Ju)(FS_V, FU_A) = 1.0;
    // beta enters sin(beta)/lr directly and (psi+beta) through c and sn.
    (*Ju)(FS_PSI, FU_DELTA) = (v * cb / vp.lr + tp.kappa * v * sn / D) * dbeta;
    (*Ju)(FS_S, FU_DELTA) = -v * sn / D * dbeta;
    (*Ju)(FS_T, FU_DELTA) = v * c * dbeta;
  }
  return f;
}

Eigen::Vector4d euler_step(const Eigen::Vector4d& x, const Eigen::Vector2d& u, double dt,
                           const TrackParams& tp, const VehicleParams& vp,
                           Mat* A, Mat* B) {
  Mat Jx, Ju;
  Eigen::Vector4d f = frenet_derivative(x, u, tp, vp, A != nullptr ? &Jx : nullptr,
                                        B != nullptr ? &Ju : nullptr);
  Eigen::Vector4d xn = x + dt * f;
  xn[FS_PSI] = wrap_angle(xn[FS_PSI]);
  if (A != nullptr) *A = Mat::Identity(4, 4) + dt * Jx;
  if (B != nullptr) *B = dt * Ju;
  return xn;
}

Eigen::Vector2d frenet_to_cartesian(double s, double t, const TrackParams& tp, Mat* J) {
  const double theta = s / tp.R;
  const double st = std::sin(theta);
  const double ct = std::cos(theta);
  Eigen::Vector2d p;
  p[0] = (tp.R - t) * st;
  p[1] = tp.R * (1.0 - ct) + t * ct;
  if (J != nullptr) {
    J->resize(2, 2);
    (*J)(0, 0) = (tp.R - t) * ct / tp.R;  // dX/ds
    (*J)(0, 1) = -st;                     // dX/dt
    (*J)(1, 0) = (tp.R - t) * st / tp.R;  // dY/ds
    (*J)(1, 1) = ct;                      // dY/dt
  }
  return p;
}

Eigen::Vector2d cartesian_position(const Eigen::Vector4d& x, const TrackParams& tp) {
  return frenet_to_cartesian(x[FS_S], x[FS_T], tp);
}

std::pair<double, double> collision_margin(const Eigen::Vector4d& x1, const Eigen::Vector4d& x2,
                                           const TrackParams& tp, const Bounds& bounds) {
  const Eigen::Vector2d d = cartesian_position(x1, tp) - cartesian_position(x2, tp);
  const double dist = d.norm();
  return {dist - bounds.d_safe, d.squaredNorm() - bounds.d_safe * bounds.d_safe};
}

double collision_constraint_sq(const Eigen::Vector4d& x1, const Eigen::Vector4d& x2,
                               const TrackParams& tp, double d_safe,
                               Eigen::Vector2d* g1, Eigen::Vector2d* g2) {
  Mat J1, J2;
  const Eigen::Vector2d p1 =
      frenet_to_cartesian(x1[FS_S], x1[FS_T], tp, g1 != nullptr ? &J1 : nullptr);
  const Eigen::Vector2d p2 =
      frenet_to_cartesian(x2[FS_S], x2[FS_T], tp, g2 != nullptr ? &J2 : nullptr);
  const Eigen::Vector2d d = p1 - p2;
  const double c = d_safe * d_safe - d.squaredNorm();
  if (g1 != nullptr) *g1 = -2.0 * J1.transpose() * d;
  if (g2 != nullptr) *g2 = 2.0 * J2.transpose() * d;
  return c;
}

}  // namespace brnash
