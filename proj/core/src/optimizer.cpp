#include "rigcal/optimizer.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <thread>

#include "rigcal/errors.hpp"
#include "rigcal/triangulation.hpp"

namespace rigcal {

namespace {

constexpr double kInteriorMargin = 1e-6;  // fraction of range kept off the bound

// Uniform draw in [0, n) using only mt19937_64 outputs, so subsampling is
// reproducible for a given binary and seed regardless of the standard
// library's distribution implementations.
uint64_t bounded_rand(std::mt19937_64& rng, uint64_t n) { return rng() % n; }

// Draws round(fraction * M) match rows (at least 4, at most M) without
// replacement via a partial Fisher-Yates shuffle.
MatchSet subsample_matches(const MatchSet& set, double fraction, std::mt19937_64& rng) {
  const Eigen::Index m_total = set.size();
  const Eigen::Index want = std::clamp<Eigen::Index>(
      static_cast<Eigen::Index>(std::lround(fraction * static_cast<double>(m_total))),
      std::min<Eigen::Index>(4, m_total), m_total);
  if (want == m_total) return set;

  std::vector<Eigen::Index> idx(static_cast<size_t>(m_total));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index k = 0; k < want; ++k) {
    const Eigen::Index j =
        k + static_cast<Eigen::Index>(bounded_rand(rng, static_cast<uint64_t>(m_total - k)));
    std::swap(idx[static_cast<size_t>(k)], idx[static_cast<size_t>(j)]);
  }

  MatchSet out;
  out.frame_i = set.frame_i;
  out.frame_j = set.frame_j;
  out.camera_i = set.camera_i;
  out.camera_j = set.camera_j;
  out.pixels_i.resize(want, 2);
  out.pixels_j.resize(want, 2);
  for (Eigen::Index k = 0; k < want; ++k) {
    out.pixels_i.row(k) = set.pixels_i.row(idx[static_cast<size_t>(k)]);
    out.pixels_j.row(k) = set.pixels_j.row(idx[static_cast<size_t>(k)]);
  }
  return out;
}

// Triangulates a few matches per set under the current state to obtain world
// points plus the views they are seen from, feeding the preconditioner.
void gather_precondition_samples(const DeviceTrajectory& traj, const RigModel& rig,
                                 const std::vector<MatchSet>& matches, int max_points,
                                 std::vector<Vec3>& points, std::vector<SampleView>& views) {
  for (const MatchSet& set : matches) {
    if (static_cast<int>(points.size()) >= max_points) break;
    const int cam_a = rig.camera_index(set.camera_i);
    const int cam_b = rig.camera_index(set.camera_j);
    const SE3Pose pose_i = effective_pose(traj, rig, set.frame_i, cam_a);
    const SE3Pose pose_j = effective_pose(traj, rig, set.frame_j, cam_b);
    const Intrinsics k_i = rig.cameras[cam_a].effective_intrinsics();
    const Intrinsics k_j = rig.cameras[cam_b].effective_intrinsics();
    const Eigen::Index take = std::min<Eigen::Index>(2, set.size());
    for (Eigen::Index m = 0; m < take; ++m) {
      const Vec3 di = ray_direction({set.pixels_i(m, 0), set.pixels_i(m, 1)}, k_i, pose_i);
      const Vec3 dj = ray_direction({set.pixels_j(m, 0), set.pixels_j(m, 1)}, k_j, pose_j);
      const TriangulationResult tri = triangulate_line_intersection(pose_i.t, di, pose_j.t, dj);
      if (!tri.accepted()) continue;
      points.push_back(tri.midpoint);
      views.emplace_back(set.frame_i, cam_a);
      views.emplace_back(set.frame_j, cam_b);
    }
  }
  // Deduplicate views so the Jacobian average is not dominated by one frame.
  std::sort(views.begin(), views.end());
  views.erase(std::unique(views.begin(), views.end()), views.end());
}

// Per-scalar feasibility intervals in flatten_params order.
std::vector<Interval> scalar_intervals(const RigModel& rig, const ParamLayout& layout,
                                       const std::vector<ParamGroupId>& groups,
                                       const BarrierSpec& bounds) {
  std::vector<Interval> intervals(groups.size());
  for (size_t i = 0; i < groups.size(); ++i) {
    switch (groups[i]) {
      case ParamGroupId::kPhiRot:
      case ParamGroupId::kPhiTrans:
      case ParamGroupId::kRhoRot:
      case ParamGroupId::kRhoTrans:
        intervals[i] = bounds.pose_interval(groups[i]);
        break;
      default: {
        const int cam = static_cast<int>((static_cast<int>(i) -
                                          layout.intrinsic_offset(0)) / 4);
        const int p = (static_cast<int>(i) - layout.intrinsic_offset(cam));
        const Intrinsics& base = rig.cameras[cam].intrinsics;
        const double initial[4] = {base.fx, base.fy, base.cx, base.cy};
        intervals[i] = bounds.intrinsic_interval(initial[p]);
        break;
      }
    }
  }
  return intervals;
}

std::array<double, kNumParamGroups> utilization(const VecX& params,
                                                const std::vector<ParamGroupId>& groups,
                                                const std::vector<Interval>& intervals) {
  std::array<double, kNumParamGroups> out{};
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const Interval& iv = intervals[static_cast<size_t>(i)];
    const double u = std::abs(params[i] - iv.midpoint()) / (0.5 * iv.range());
    auto& slot = out[static_cast<int>(groups[static_cast<size_t>(i)])];
    slot = std::max(slot, u);
  }
  return out;
}

}  // namespace

RefineResult run_refinement(DeviceTrajectory traj, RigModel rig,
                            const std::vector<MatchSet>& matches,
                            const RefineOptions& options) {
  const ParamLayout layout(traj, rig, options.toggles.intrinsics_learnable);
  FlatParams flat = flatten_params(traj, rig, options.toggles.intrinsics_learnable);
  VecX params = flat.values;
  VecX velocity = VecX::Zero(params.size());
  const std::vector<Interval> intervals = scalar_intervals(rig, layout, flat.groups, options.bounds);
  const bool barrier_active = options.toggles.barrier && options.weights.lambda_barrier > 0.0;
  const TemperatureSchedule temp_schedule{options.t_start, options.t_end, options.max_iter};

  PreconditionedRates rates;
  if (options.precondition) {
    std::vector<Vec3> points;
    std::vector<SampleView> views;
    gather_precondition_samples(traj, rig, matches, 100, points, views);
    rates = compute_preconditioner(traj, rig, points, views);
  }

  // Stochastic gradient: every set contributes every iteration (so no single
  // iteration sees a stiff set at boosted weight — subsampling whole sets
  // instead makes the random per-iteration curvature product unstable at the
  // default learning rates), while the per-set match rows are subsampled to a
  // budget of `batch_size` full sets' worth of work. batch_size <= 0 uses all
  // matches.
  std::mt19937_64 rng(options.seed);
  const int total_sets = static_cast<int>(matches.size());
  const double sample_fraction =
      options.batch_size <= 0
          ? 1.0
          : std::min(1.0, static_cast<double>(options.batch_size) / total_sets);
  // The geometric objective is a mean over sets; each set's subsample
  // estimates that set's own mean, so the scale is always 1/total_sets.
  const double batch_scale = total_sets > 0 ? 1.0 / total_sets : 1.0;

  RefineResult result;
  result.rates = rates;

  const auto record = [&](int iter) {
    IterationRecord rec;
    rec.iter = iter;
    rec.temperature = temperature(temp_schedule, std::min(iter, options.max_iter));
    rec.lr_factor = cosine_restart_factor(std::min(iter, options.max_iter - 1), options.max_iter);
    const TotalLoss full = total_loss(traj, rig, matches, options.weights, options.bounds,
                                      rec.temperature, options.toggles, false);
    rec.loss = full.value;
    rec.epipolar = full.epipolar;
    rec.reproj = full.reproj;
    rec.barrier = full.barrier;
    const GeometricMetrics metrics = geometric_metrics(traj, rig, matches);
    rec.ep_e = metrics.ep_e;
    rec.rp_e = metrics.rp_e;
    rec.bound_utilization = utilization(params, flat.groups, intervals);
    result.history.push_back(rec);
  };

  result.max_utilization = utilization(params, flat.groups, intervals);

  for (int iter = 0; iter < options.max_iter; ++iter) {
    if (iter % options.log_every == 0) record(iter);

    const double temp = temperature(temp_schedule, iter);
    VecX grad = VecX::Zero(params.size());
    double batch_geom = 0.0;

    // Materialize every set's subsample up front so the RNG stream does not
    // depend on the thread count.
    std::vector<MatchSet> subsets;
    if (sample_fraction < 1.0) {
      subsets.reserve(matches.size());
      for (const MatchSet& set : matches) {
        subsets.push_back(subsample_matches(set, sample_fraction, rng));
      }
    }

    // Weighted geometric term of one set, gradient added into grad_out.
    // Reads only shared state; safe to run concurrently per set.
    const auto set_term = [&](int index, VecX& grad_out) -> double {
      const MatchSet& set = sample_fraction < 1.0 ? subsets[static_cast<size_t>(index)]
                                                  : matches[static_cast<size_t>(index)];
      const int cam_a = rig.camera_index(set.camera_i);
      const int cam_b = rig.camera_index(set.camera_j);
      SetGeometry g;
      try {
        g = eval_set_geometry(set, effective_pose(traj, rig, set.frame_i, cam_a),
                              effective_pose(traj, rig, set.frame_j, cam_b),
                              rig.cameras[cam_a].effective_intrinsics(),
                              rig.cameras[cam_b].effective_intrinsics(), options.toggles);
      } catch (const DegenerateBaselineError&) {
        return 0.0;
      }
      accumulate_set_gradient(traj, rig, set, options.weights, options.toggles, layout,
                              batch_scale, grad_out);
      return options.weights.lambda_epi * g.sampson +
             options.weights.lambda_reproj * g.reproj;
    };

    const int workers = std::max(1, std::min(options.threads, total_sets));
    if (workers == 1) {
      for (int index = 0; index < total_sets; ++index) batch_geom += set_term(index, grad);
    } else {
      std::vector<VecX> grads(static_cast<size_t>(workers), VecX::Zero(params.size()));
      std::vector<double> geoms(static_cast<size_t>(workers), 0.0);
      std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
      std::vector<std::thread> pool;
      pool.reserve(static_cast<size_t>(workers));
      for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (int b = w; b < total_sets; b += workers) {
              geoms[w] += set_term(b, grads[w]);
            }
          } catch (...) {
            errors[static_cast<size_t>(w)] = std::current_exception();
          }
        });
      }
      for (std::thread& t : pool) t.join();
      for (const std::exception_ptr& e : errors) {
        if (e) std::rethrow_exception(e);
      }
      // Fixed reduction order keeps runs reproducible at a given thread count.
      for (int w = 0; w < workers; ++w) {
        grad += grads[static_cast<size_t>(w)];
        batch_geom += geoms[static_cast<size_t>(w)];
      }
    }

    double barrier_term = 0.0;
    if (barrier_active) {
      barrier_term = barrier_loss(traj, rig, options.bounds, temp, options.weights, layout, &grad);
    }
    const double batch_loss = batch_scale * batch_geom +
                              options.weights.lambda_barrier * barrier_term;
    if (!std::isfinite(batch_loss) || !grad.allFinite()) {
      throw DivergedError(fmt::format("non-finite loss at iteration {}", iter));
    }

    const double factor = cosine_restart_factor(iter, options.max_iter);
    for (Eigen::Index i = 0; i < params.size(); ++i) {
      const ParamGroupId group = flat.groups[static_cast<size_t>(i)];
      const double lr = base_lr_for_group(options.lr, group) * rates[group] * factor;
      velocity[i] = options.momentum * velocity[i] - lr * grad[i];
      params[i] += velocity[i];
      if (barrier_active) {
        const Interval& iv = intervals[static_cast<size_t>(i)];
        const double margin = kInteriorMargin * iv.range();
        if (params[i] <= iv.lower + margin) {
          params[i] = iv.lower + margin;
          velocity[i] = 0.0;
        } else if (params[i] >= iv.upper - margin) {
          params[i] = iv.upper - margin;
          velocity[i] = 0.0;
        }
      }
    }
    unflatten_params(params, options.toggles.intrinsics_learnable, traj, rig);

    const auto util = utilization(params, flat.groups, intervals);
    for (int g = 0; g < kNumParamGroups; ++g) {
      result.max_utilization[g] = std::max(result.max_utilization[g], util[g]);
    }
  }

  record(options.max_iter);
  result.traj = std::move(traj);
  result.rig = std::move(rig);
  result.iterations = options.max_iter;
  return result;
}

SE3Pose test_time_adapt(const DeviceTrajectory& refined_traj, const RigModel& refined_rig,
                        const SE3Pose& new_frame_pose,
                        const std::vector<MatchSet>& matches_to_refined,
                        const AdaptOptions& options) {
  const int new_index = static_cast<int>(refined_traj.frames.size());
  Eigen::Index total_matches = 0;
  for (const MatchSet& set : matches_to_refined) {
    if (set.frame_i != new_index && set.frame_j != new_index) {
      throw IndexMismatchError(
          fmt::format("match set ({}, {}) does not reference the new frame {}",
                      set.frame_i, set.frame_j, new_index));
    }
    total_matches += set.size();
  }
  if (total_matches < options.min_matches) {
    throw InsufficientMatchesError(fmt::format("{} matches to refined frames, need at least {}",
                                               total_matches, options.min_matches));
  }

  const LossToggles toggles{true, true, false, false};
  TangentDelta phi;
  TangentDelta velocity;

  const auto eval = [&](const TangentDelta& candidate) {
    const SE3Pose adapted = apply_right_delta(new_frame_pose, candidate);
    double value = 0.0;
    for (const MatchSet& set : matches_to_refined) {
      const int cam_a = refined_rig.camera_index(set.camera_i);
      const int cam_b = refined_rig.camera_index(set.camera_j);
      const bool new_is_i = set.frame_i == new_index;
      const SE3Pose pose_i =
          new_is_i ? compose(adapted, apply_right_delta(refined_rig.cameras[cam_a].extrinsic,
                                                        refined_rig.cameras[cam_a].rho))
                   : effective_pose(refined_traj, refined_rig, set.frame_i, cam_a);
      const SE3Pose pose_j =
          !new_is_i ? compose(adapted, apply_right_delta(refined_rig.cameras[cam_b].extrinsic,
                                                         refined_rig.cameras[cam_b].rho))
                    : effective_pose(refined_traj, refined_rig, set.frame_j, cam_b);
      SetGeometry g;
      try {
        g = eval_set_geometry(set, pose_i, pose_j,
                              refined_rig.cameras[cam_a].effective_intrinsics(),
                              refined_rig.cameras[cam_b].effective_intrinsics(), toggles);
      } catch (const DegenerateBaselineError&) {
        continue;
      }
      value += options.weights.lambda_epi * g.sampson +
               options.weights.lambda_reproj * g.reproj;
    }
    return value;
  };

  constexpr double kStep = 1e-6;
  for (int iter = 0; iter < options.iterations; ++iter) {
    TangentDelta grad;
    for (int k = 0; k < 6; ++k) {
      TangentDelta probe = phi;
      double* slot = k < 3 ? &probe.rot[k] : &probe.trans[k - 3];
      const double saved = *slot;
      *slot = saved + kStep;
      const double plus = eval(probe);
      *slot = saved - kStep;
      const double minus = eval(probe);
      double* g = k < 3 ? &grad.rot[k] : &grad.trans[k - 3];
      *g = (plus - minus) / (2.0 * kStep);
      if (!std::isfinite(*g)) {
        throw DivergedError(fmt::format("non-finite adaptation gradient at iteration {}", iter));
      }
    }
    velocity.rot = options.momentum * velocity.rot - options.lr * grad.rot;
    velocity.trans = options.momentum * velocity.trans - options.lr * grad.trans;
    phi.rot += velocity.rot;
    phi.trans += velocity.trans;
  }

  return apply_right_delta(new_frame_pose, phi);
}

}  // namespace rigcal
