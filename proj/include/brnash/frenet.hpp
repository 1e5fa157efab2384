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

#pragma once

#include <utility>

#include "brnash/types.hpp"

namespace brnash {

// State layout of the Frenet-frame kinematic bicycle: (v, psi, s, t) with
// speed v [m/s], heading psi relative to the track tangent [rad], centerline
// progress s [m], and lateral offset t [m]. Inputs are (a, delta):
// longitudinal acceleration [m/s^2] and steering angle [rad].
enum FrenetIdx { FS_V = 0, FS_PSI = 1, FS_S = 2, FS_T = 3 };
enum ControlIdx { FU_A = 0, FU_DELTA = 1 };

struct FrenetState {
  double v = 0.0;
  double psi = 0.0;
  double s = 0.0;
  double t = 0.0;

  Eigen::Vector4d vec() const { return {v, psi, s, t}; }
  static FrenetState from(const Eigen::Vector4d& x) { return {x[0], x[1], x[2], x[3]}; }
};

struct ControlInput {
  double a = 0.0;
  double delta = 0.0;

  Eigen::Vector2d vec() const { return {a, delta}; }
  static ControlInput from(const Eigen::Vector2d& u) { return {u[0], u[1]}; }
};

// Quarter-circle track of constant curvature kappa = 1/R and arc length
// s_max = R*pi/2.
struct TrackParams {
  double R = 3.5;
  double kappa = 1.0 / 3.5;
  double s_max = 3.5 * 1.5707963267948966;

  static TrackParams benchmark() { return {}; }
};

struct VehicleParams {
  double lf = 0.13;  // distance from CoG to front axle [m]
  double lr = 0.13;  // distance from CoG to rear axle [m]

  double wheelbase() const { return lf + lr; }
  static VehicleParams benchmark() { return {}; }
};

// Component-wise state/input boxes plus the minimum safe inter-vehicle
// distance. The benchmark values: v in [0,2], psi in [-pi,pi] (wrap domain),
// s in [0, R*pi/2], t in [-0.5,0.5], a in [-2,2], delta in [-25deg,25deg],
// d_safe = 0.25.
struct Bounds {
  Vec x_lo, x_hi;  // size 4
  Vec u_lo, u_hi;  // size 2
  double d_safe = 0.25;

  static Bounds benchmark();
};

// Wrap an angle into [-pi, pi].
double wrap_angle(double a);

// Kinematic slip angle beta = arctan(lf/(lf+lr) * tan(delta)). Requires
// |delta| < pi/2; throws std::domain_error otherwise.
double slip_angle(double delta, const VehicleParams& vp);

// d beta / d delta for the same map.
double slip_angle_derivative(double delta, const VehicleParams& vp);

// Continuous-time Frenet bicycle dynamics xdot = F(x, u):
//   vdot   = a
//   psidot = v sin(beta)/lr - kappa v cos(psi+beta) / (1 - kappa t)
//   sdot   = v cos(psi+beta) / (1 - kappa t)
//   tdot   = v sin(psi+beta)
// Optional Jx (4x4) and Ju (4x2) receive the analytic Jacobians of F.
// Throws std::domain_error if 1 - kappa*t <= 0 (unreachable inside bounds:
// for |t| <= 0.5 and R = 3.5 the denominator stays in [6/7, 8/7]).
Eigen::Vector4d frenet_derivative(const Eigen::Vector4d& x, const Eigen::Vector2d& u,
                                  const TrackParams& tp, const VehicleParams& vp,
                                  Mat* Jx = nullptr, Mat* Ju = nullptr);

// Forward-Euler step x+ = x + dt*F(x,u) with psi wrapped to [-pi, pi].
// Optional A = I + dt*dF/dx and B = dt*dF/du; the wrap is treated as the
// identity in these Jacobians (the benchmark horizon never straddles +-pi
// by design, see README).
Eigen::Vector4d euler_step(const Eigen::Vector4d& x, const Eigen::Vector2d& u, double dt,
                           const TrackParams& tp, const VehicleParams& vp,
                           Mat* A = nullptr, Mat* B = nullptr);

// Centerline-relative position to Cartesian: theta = s/R,
//   X = (R - t) sin(theta),  Y = R (1 - cos(theta)) + t cos(theta).
// Optional J (2x2) receives d(X,Y)/d(s,t).
Eigen::Vector2d frenet_to_cartesian(double s, double t, const TrackParams& tp,
                                    Mat* J = nullptr);

// Cartesian position of a Frenet state.
Eigen::Vector2d cartesian_position(const Eigen::Vector4d& x, const TrackParams& tp);

// Safety margins between two vehicles: first = ||p1-p2|| - d_safe (distance
// form, used for ex-post checks), second = ||p1-p2||^2 - d_safe^2 (squared
// form, matching the in-solver constraint). Both are >= 0 iff safe.
std::pair<double, double> collision_margin(const Eigen::Vector4d& x1, const Eigen::Vector4d& x2,
                                           const TrackParams& tp, const Bounds& bounds);

// Gradient of the squared-form collision constraint value
// c = d_safe^2 - ||p1 - p2||^2 with respect to (s1, t1) and (s2, t2).
// Returns c and fills g1, g2 (each size 2: d c/d(s,t)).
double collision_constraint_sq(const Eigen::Vector4d& x1, const Eigen::Vector4d& x2,
                               const TrackParams& tp, double d_safe,
                               Eigen::Vector2d* g1 = nullptr, Eigen::Vector2d* g2 = nullptr);

}  // namespace brnash
