#include "rigcal/loss.hpp"

#include <cmath>

#include "rigcal/errors.hpp"
#include "rigcal/triangulation.hpp"

namespace rigcal {

namespace {

// Central-difference step for the pose-delta gradient. Small enough that the
// O(h^2) truncation bias near the reprojection smoothing core stays far below
// the gradient scale (the bias pumps the otherwise-flat gauge directions over
// thousands of iterations), while loss values near 1e-4 still leave the
// difference quotient ~6 decades above rounding noise.
constexpr double kFdStep = 1e-7;

struct SetContext {
  int cam_a = 0;  // index of set.camera_i in the rig
  int cam_b = 0;  // index of set.camera_j
  SE3Pose pose_i;
  SE3Pose pose_j;
  Intrinsics k_i;
  Intrinsics k_j;
};

SetContext make_context(const DeviceTrajectory& traj, const RigModel& rig,
                        const MatchSet& set) {
  SetContext ctx;
  ctx.cam_a = rig.camera_index(set.camera_i);
  ctx.cam_b = rig.camera_index(set.camera_j);
  ctx.pose_i = effective_pose(traj, rig, set.frame_i, ctx.cam_a);
  ctx.pose_j = effective_pose(traj, rig, set.frame_j, ctx.cam_b);
  ctx.k_i = rig.cameras[ctx.cam_a].effective_intrinsics();
  ctx.k_j = rig.cameras[ctx.cam_b].effective_intrinsics();
  return ctx;
}

// d(K^{-1})/d(fx, fy, cx, cy) for one parameter index.
Mat3 d_kinv(const Intrinsics& k, int param) {
  Mat3 d = Mat3::Zero();
  switch (param) {
    case 0:  // fx
      d(0, 0) = -1.0 / (k.fx * k.fx);
      d(0, 2) = k.cx / (k.fx * k.fx);
      break;
    case 1:  // fy
      d(1, 1) = -1.0 / (k.fy * k.fy);
      d(1, 2) = k.cy / (k.fy * k.fy);
      break;
    case 2:  // cx
      d(0, 2) = -1.0 / k.fx;
      break;
    default:  // cy
      d(1, 2) = -1.0 / k.fy;
      break;
  }
  return d;
}

// d(canonical ray K^{-1} x~)/d(param): closed form of d_kinv * x~.
Vec3 d_canonical(const Vec3& canonical, const Intrinsics& k, int param) {
  switch (param) {
    case 0: return {-canonical.x() / k.fx, 0.0, 0.0};
    case 1: return {0.0, -canonical.y() / k.fy, 0.0};
    case 2: return {-1.0 / k.fx, 0.0, 0.0};
    default: return {0.0, -1.0 / k.fy, 0.0};
  }
}

// Mean Sampson gradient of one set w.r.t. both cameras' (fx, fy, cx, cy).
// F satisfies x_j^T F x_i = 0 and factors as K_j^{-T} [t]x R K_i^{-1}.
void sampson_intrinsic_grad(const MatchSet& set, const FundamentalMatrix& f,
                            const Intrinsics& k_i, const Intrinsics& k_j,
                            Vec4& grad_ki, Vec4& grad_kj) {
  Mat3 g_sum = Mat3::Zero();
  int evaluated = 0;
  for (Eigen::Index m = 0; m < set.size(); ++m) {
    const Vec3 xi(set.pixels_i(m, 0), set.pixels_i(m, 1), 1.0);
    const Vec3 xj(set.pixels_j(m, 0), set.pixels_j(m, 1), 1.0);
    const Vec3 l = f.matrix * xi;
    const Vec3 lt = f.matrix.transpose() * xj;
    const double denom = l[0] * l[0] + l[1] * l[1] + lt[0] * lt[0] + lt[1] * lt[1];
    if (denom == 0.0) continue;
    const double e = xj.dot(l);
    Mat3 d_denom = Mat3::Zero();
    d_denom.row(0) += 2.0 * l[0] * xi.transpose();
    d_denom.row(1) += 2.0 * l[1] * xi.transpose();
    d_denom.col(0) += 2.0 * lt[0] * xj;
    d_denom.col(1) += 2.0 * lt[1] * xj;
    g_sum += (2.0 * e / denom) * (xj * xi.transpose()) -
             (e * e / (denom * denom)) * d_denom;
    ++evaluated;
  }
  if (evaluated == 0) return;
  const Mat3 g_mean = g_sum / evaluated;

  const Mat3 a = f.matrix * k_i.matrix();               // K_j^{-T} [t]x R
  const Mat3 b = k_j.matrix().transpose() * f.matrix;   // [t]x R K_i^{-1}
  for (int p = 0; p < 4; ++p) {
    grad_ki[p] += g_mean.cwiseProduct(a * d_kinv(k_i, p)).sum();
    grad_kj[p] += g_mean.cwiseProduct(d_kinv(k_j, p).transpose() * b).sum();
  }
}

struct Ray {
  Vec3 canonical;  // K^{-1} x~, z = 1
  double norm = 0.0;
  Vec3 unit_cam;   // canonical / norm
  Vec3 dir_world;  // unit bearing
  Mat3 perp;       // (I - u u^T)/norm with u = unit_cam: d(unit)/d(canonical)
};

Ray make_ray(double u, double v, const Intrinsics& k, const SE3Pose& pose) {
  Ray r;
  r.canonical = Vec3((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
  r.norm = r.canonical.norm();
  r.unit_cam = r.canonical / r.norm;
  r.dir_world = (pose.R * r.canonical) / r.norm;
  r.perp = (Mat3::Identity() - r.unit_cam * r.unit_cam.transpose()) / r.norm;
  return r;
}

// Mean reprojection gradient of one set w.r.t. both cameras' intrinsics,
// differentiating through the rays, the line-intersection depths, and the
// final projection. Mirrors the forward pass of reprojection_loss exactly.
void reproj_intrinsic_grad(const MatchSet& set, const SE3Pose& pose_i,
                           const SE3Pose& pose_j, const Intrinsics& k_i,
                           const Intrinsics& k_j, Vec4& grad_ki, Vec4& grad_kj) {
  const SE3Pose i_to_j = compose(pose_j.inverse(), pose_i);
  const SE3Pose j_to_i = i_to_j.inverse();
  Vec4 sum_ki = Vec4::Zero();
  Vec4 sum_kj = Vec4::Zero();
  int accepted = 0;

  for (Eigen::Index m = 0; m < set.size(); ++m) {
    const Ray ray_i = make_ray(set.pixels_i(m, 0), set.pixels_i(m, 1), k_i, pose_i);
    const Ray ray_j = make_ray(set.pixels_j(m, 0), set.pixels_j(m, 1), k_j, pose_j);
    const TriangulationResult tri =
        triangulate_line_intersection(pose_i.t, ray_i.dir_world, pose_j.t, ray_j.dir_world);
    if (!tri.accepted()) continue;

    const Vec3 p_cam_i = (tri.t / ray_i.norm) * ray_i.canonical;
    const Vec3 p_cam_j = (tri.s / ray_j.norm) * ray_j.canonical;
    Vec3 in_j, in_i;
    PixelCoord px_j{}, px_i{};
    try {
      in_j = i_to_j.apply(p_cam_i);
      in_i = j_to_i.apply(p_cam_j);
      px_j = project_camera_point({in_j.x(), in_j.y(), in_j.z()}, k_j);
      px_i = project_camera_point({in_i.x(), in_i.y(), in_i.z()}, k_i);
    } catch (const BehindCameraError&) {
      continue;
    }
    ++accepted;

    // Closest-approach sensitivities in world coordinates (unit directions).
    const Vec3 x21 = pose_j.t - pose_i.t;
    const double b = ray_i.dir_world.dot(ray_j.dir_world);
    const double p = x21.dot(ray_i.dir_world);
    const double q = x21.dot(ray_j.dir_world);
    const double d0 = 1.0 - b * b;
    const Vec3 dt_ddi = (x21 - q * ray_j.dir_world + 2.0 * b * tri.t * ray_j.dir_world) / d0;
    const Vec3 dt_ddj = (-q * ray_i.dir_world - b * x21 + 2.0 * b * tri.t * ray_i.dir_world) / d0;
    const Vec3 ds_ddi = (p * ray_j.dir_world + b * x21 + 2.0 * b * tri.s * ray_j.dir_world) / d0;
    const Vec3 ds_ddj = (p * ray_i.dir_world - x21 + 2.0 * b * tri.s * ray_i.dir_world) / d0;

    const Vec2 res_j(px_j.u - set.pixels_j(m, 0), px_j.v - set.pixels_j(m, 1));
    const Vec2 res_i(px_i.u - set.pixels_i(m, 0), px_i.v - set.pixels_i(m, 1));
    const double norm_j = res_j.norm();
    const double norm_i = res_i.norm();

    const Eigen::Matrix<double, 2, 3> jp_j =
        point_jacobian({in_j.x(), in_j.y(), in_j.z()}, k_j);
    const Eigen::Matrix<double, 2, 3> jp_i =
        point_jacobian({in_i.x(), in_i.y(), in_i.z()}, k_i);
    const Eigen::Matrix<double, 2, 4> ji_j = intrinsic_jacobian({in_j.x(), in_j.y(), in_j.z()});
    const Eigen::Matrix<double, 2, 4> ji_i = intrinsic_jacobian({in_i.x(), in_i.y(), in_i.z()});

    for (int param = 0; param < 4; ++param) {
      const Vec3 dc_i = d_canonical(ray_i.canonical, k_i, param);
      const Vec3 dc_j = d_canonical(ray_j.canonical, k_j, param);
      const Vec3 du_i = ray_i.perp * dc_i;  // d(unit_cam_i)/d(k_i param)
      const Vec3 du_j = ray_j.perp * dc_j;
      const Vec3 dd_i = pose_i.R * du_i;    // d(dir_world_i)/d(k_i param)
      const Vec3 dd_j = pose_j.R * du_j;

      const double dt_dki = dt_ddi.dot(dd_i);
      const double dt_dkj = dt_ddj.dot(dd_j);
      const double ds_dki = ds_ddi.dot(dd_i);
      const double ds_dkj = ds_ddj.dot(dd_j);

      // Direction i->j: point t * unit_cam_i seen by camera j. The smoothed
      // norm sqrt(n^2 + d^2) - d differentiates to res / sqrt(n^2 + d^2),
      // well-defined even at a zero residual.
      const Vec3 dpcam_i_dki = dt_dki * ray_i.unit_cam + tri.t * du_i;
      const Vec3 dpcam_i_dkj = dt_dkj * ray_i.unit_cam;
      {
        const Vec2 ghat = res_j / std::hypot(norm_j, kResidualSmoothing);
        sum_ki[param] += ghat.dot(jp_j * (i_to_j.R * dpcam_i_dki));
        sum_kj[param] += ghat.dot(jp_j * (i_to_j.R * dpcam_i_dkj) + ji_j.col(param));
      }
      // Direction j->i: point s * unit_cam_j seen by camera i.
      const Vec3 dpcam_j_dkj = ds_dkj * ray_j.unit_cam + tri.s * du_j;
      const Vec3 dpcam_j_dki = ds_dki * ray_j.unit_cam;
      {
        const Vec2 ghat = res_i / std::hypot(norm_i, kResidualSmoothing);
        sum_kj[param] += ghat.dot(jp_i * (j_to_i.R * dpcam_j_dkj));
        sum_ki[param] += ghat.dot(jp_i * (j_to_i.R * dpcam_j_dki) + ji_i.col(param));
      }
    }
  }

  if (accepted == 0) return;
  grad_ki += sum_ki / accepted;
  grad_kj += sum_kj / accepted;
}

}  // namespace

SetGeometry eval_set_geometry(const MatchSet& set, const SE3Pose& pose_i,
                              const SE3Pose& pose_j, const Intrinsics& k_i,
                              const Intrinsics& k_j, const LossToggles& toggles) {
  SetGeometry out;
  if (toggles.epipolar) {
    const FundamentalMatrix f = fundamental_from_poses(pose_j, pose_i, k_j, k_i);
    out.sampson = sampson_loss(set, f).loss;
  }
  if (toggles.reproj) {
    try {
      out.reproj = reprojection_loss(set, pose_i, pose_j, k_i, k_j).loss;
    } catch (const NoAcceptedMatchesError&) {
      out.reproj = 0.0;  // fully gated set: no reprojection contribution
    }
  }
  return out;
}

void accumulate_set_gradient(const DeviceTrajectory& traj, const RigModel& rig,
                             const MatchSet& set, const LossWeights& weights,
                             const LossToggles& toggles, const ParamLayout& layout,
                             double scale, VecX& grad) {
  if (!toggles.epipolar && !toggles.reproj) return;
  const SetContext ctx = make_context(traj, rig, set);

  // Local copies of the four (or three) parameter blocks this set touches.
  TangentDelta phi_i = traj.frames[set.frame_i].phi;
  TangentDelta phi_j = traj.frames[set.frame_j].phi;
  TangentDelta rho_a = rig.cameras[ctx.cam_a].rho;
  TangentDelta rho_b = rig.cameras[ctx.cam_b].rho;
  const SE3Pose& hat_i = traj.frames[set.frame_i].pose_hat;
  const SE3Pose& hat_j = traj.frames[set.frame_j].pose_hat;
  const SE3Pose& ext_a = rig.cameras[ctx.cam_a].extrinsic;
  const SE3Pose& ext_b = rig.cameras[ctx.cam_b].extrinsic;
  const bool same_camera = ctx.cam_a == ctx.cam_b;

  SetGeometry base;
  try {
    base = eval_set_geometry(set, ctx.pose_i, ctx.pose_j, ctx.k_i, ctx.k_j, toggles);
  } catch (const DegenerateBaselineError&) {
    return;  // set is degenerate at the current state; contributes nothing
  }
  const auto weighted = [&](const SetGeometry& g) {
    return weights.lambda_epi * g.sampson + weights.lambda_reproj * g.reproj;
  };

  const auto eval = [&]() -> double {
    const SE3Pose pi = compose(apply_right_delta(hat_i, phi_i),
                               apply_right_delta(ext_a, rho_a));
    const SE3Pose pj = compose(apply_right_delta(hat_j, phi_j),
                               apply_right_delta(ext_b, same_camera ? rho_a : rho_b));
    SetGeometry g = base;
    try {
      g = eval_set_geometry(set, pi, pj, ctx.k_i, ctx.k_j, toggles);
    } catch (const DegenerateBaselineError&) {
      g = base;  // gate flip under an FD probe: treat as locally flat
    }
    return weighted(g);
  };

  const auto probe_block = [&](TangentDelta& block, int offset) {
    for (int k = 0; k < 6; ++k) {
      double* slot = k < 3 ? &block.rot[k] : &block.trans[k - 3];
      const double saved = *slot;
      *slot = saved + kFdStep;
      const double plus = eval();
      *slot = saved - kFdStep;
      const double minus = eval();
      *slot = saved;
      grad[offset + k] += scale * (plus - minus) / (2.0 * kFdStep);
    }
  };

  probe_block(phi_i, layout.phi_offset(set.frame_i));
  probe_block(phi_j, layout.phi_offset(set.frame_j));
  probe_block(rho_a, layout.rho_offset(ctx.cam_a));
  if (!same_camera) probe_block(rho_b, layout.rho_offset(ctx.cam_b));

  if (toggles.intrinsics_learnable && layout.intrinsics) {
    Vec4 epi_ki = Vec4::Zero(), epi_kj = Vec4::Zero();
    Vec4 rp_ki = Vec4::Zero(), rp_kj = Vec4::Zero();
    if (toggles.epipolar) {
      const FundamentalMatrix f = fundamental_from_poses(ctx.pose_j, ctx.pose_i, ctx.k_j, ctx.k_i);
      sampson_intrinsic_grad(set, f, ctx.k_i, ctx.k_j, epi_ki, epi_kj);
    }
    if (toggles.reproj) {
      reproj_intrinsic_grad(set, ctx.pose_i, ctx.pose_j, ctx.k_i, ctx.k_j, rp_ki, rp_kj);
    }
    for (int p = 0; p < 4; ++p) {
      grad[layout.intrinsic_offset(ctx.cam_a) + p] +=
          scale * (weights.lambda_epi * epi_ki[p] + weights.lambda_reproj * rp_ki[p]);
      grad[layout.intrinsic_offset(ctx.cam_b) + p] +=
          scale * (weights.lambda_epi * epi_kj[p] + weights.lambda_reproj * rp_kj[p]);
    }
  }
}

double barrier_loss(const DeviceTrajectory& traj, const RigModel& rig,
                    const BarrierSpec& bounds, double temperature,
                    const LossWeights& weights, const ParamLayout& layout, VecX* grad) {
  double value = 0.0;
  const auto term = [&](double x, const Interval& iv, int index) {
    value += barrier_value(x, iv.lower, iv.upper, temperature);
    if (grad != nullptr) {
      (*grad)[index] +=
          weights.lambda_barrier * barrier_gradient(x, iv.lower, iv.upper, temperature);
    }
  };
  for (int f = 0; f < layout.num_frames; ++f) {
    const TangentDelta& phi = traj.frames[f].phi;
    for (int k = 0; k < 3; ++k) {
      term(phi.rot[k], bounds.phi_rot, layout.phi_offset(f) + k);
      term(phi.trans[k], bounds.phi_trans, layout.phi_offset(f) + 3 + k);
    }
  }
  for (int c = 0; c < layout.num_cameras; ++c) {
    const TangentDelta& rho = rig.cameras[c].rho;
    for (int k = 0; k < 3; ++k) {
      term(rho.rot[k], bounds.rho_rot, layout.rho_offset(c) + k);
      term(rho.trans[k], bounds.rho_trans, layout.rho_offset(c) + 3 + k);
    }
  }
  if (layout.intrinsics) {
    for (int c = 0; c < layout.num_cameras; ++c) {
      const Intrinsics& base = rig.cameras[c].intrinsics;
      const double initial[4] = {base.fx, base.fy, base.cx, base.cy};
      for (int p = 0; p < 4; ++p) {
        term(rig.cameras[c].intrinsic_delta[p], bounds.intrinsic_interval(initial[p]),
             layout.intrinsic_offset(c) + p);
      }
    }
  }
  return value;
}

TotalLoss total_loss(const DeviceTrajectory& traj, const RigModel& rig,
                     const std::vector<MatchSet>& matches, const LossWeights& weights,
                     const BarrierSpec& bounds, double temperature,
                     const LossToggles& toggles, bool with_gradient) {
  const ParamLayout layout(traj, rig, toggles.intrinsics_learnable);
  TotalLoss out;
  if (with_gradient) out.gradient = VecX::Zero(layout.size());

  const double set_scale = matches.empty() ? 0.0 : 1.0 / static_cast<double>(matches.size());
  for (const MatchSet& set : matches) {
    const SetContext ctx = make_context(traj, rig, set);
    SetGeometry g;
    try {
      g = eval_set_geometry(set, ctx.pose_i, ctx.pose_j, ctx.k_i, ctx.k_j, toggles);
    } catch (const DegenerateBaselineError&) {
      continue;  // no epipolar geometry at this state; skip the set
    }
    out.epipolar += set_scale * g.sampson;
    out.reproj += set_scale * g.reproj;
    if (with_gradient) {
      accumulate_set_gradient(traj, rig, set, weights, toggles, layout, set_scale,
                              out.gradient);
    }
  }
  if (toggles.barrier) {
    out.barrier = barrier_loss(traj, rig, bounds, temperature, weights, layout,
                               with_gradient ? &out.gradient : nullptr);
  }
  out.value = weights.lambda_epi * out.epipolar + weights.lambda_reproj * out.reproj +
              weights.lambda_barrier * out.barrier;
  return out;
}

GeometricMetrics geometric_metrics(const DeviceTrajectory& traj, const RigModel& rig,
                                   const std::vector<MatchSet>& matches) {
  GeometricMetrics out;
  double ep_sum = 0.0;
  double rp_sum = 0.0;
  for (const MatchSet& set : matches) {
    try {
      const SetContext ctx = make_context(traj, rig, set);
      const FundamentalMatrix f = fundamental_from_poses(ctx.pose_j, ctx.pose_i, ctx.k_j, ctx.k_i);
      const double ep = epipolar_line_error(set, f);
      const double rp =
          reprojection_loss(set, ctx.pose_i, ctx.pose_j, ctx.k_i, ctx.k_j).metric / 2.0;
      ep_sum += ep;
      rp_sum += rp;
      ++out.sets_evaluated;
    } catch (const NoAcceptedMatchesError&) {
      ++out.sets_skipped;
    } catch (const DegenerateBaselineError&) {
      ++out.sets_skipped;
    }
  }
  if (out.sets_evaluated > 0) {
    out.ep_e = ep_sum / out.sets_evaluated;
    out.rp_e = rp_sum / out.sets_evaluated;
  }
  return out;
}

}  // namespace rigcal
