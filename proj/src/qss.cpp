#include "raceline/qss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "raceline/error.hpp"

namespace raceline {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSweepTol = 1e-6;
constexpr int kMaxLaps = 10;

// Largest q = u^2 at a sample of curvature k with u^2 - w^2 <= 2 a ds s(u), where
// s(u) is the longitudinal share left at that sample. The left side grows and
// s shrinks with u, so the feasible set is an interval and the answer is
// monotone in w, a and the lateral limit.
double implicit_step(double w, double k, double ds, double accel, double cap,
                     const TractionEllipse& te) {
  const double w2 = w * w;
  const auto excess = [&](double q) {
    const double r = q * std::abs(k) / te.lateral_limit(k);
    return q - w2 - 2.0 * accel * ds * std::sqrt(std::max(0.0, 1.0 - r * r));
  };
  double hi = w2 + 2.0 * accel * ds;
  if (std::isfinite(cap)) {
    hi = std::min(hi, cap * cap);
  }
  if (hi <= w2) {
    return std::sqrt(hi);
  }
  if (excess(hi) <= 0.0) {
    return std::sqrt(hi);
  }
  double lo = w2;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) <= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::sqrt(lo);
}

}  // namespace

void TractionEllipse::validate() const {
  if (!(a_acc_max > 0.0) || !(a_dec_max > 0.0) || !(a_lat_left > 0.0) || !(a_lat_right > 0.0)) {
    throw ArgumentError(fmt::format(
        "traction ellipse limits must be positive (acc {}, dec {}, left {}, right {})", a_acc_max,
        a_dec_max, a_lat_left, a_lat_right));
  }
  if (v_max && !(*v_max > 0.0)) {
    throw ArgumentError(fmt::format("v_max must be positive, got {}", *v_max));
  }
}

double corner_speed(double k, const TractionEllipse& te) {
  const double cap = te.v_max.value_or(kInf);
  if (k == 0.0) {
    return cap;
  }
  return std::min(cap, std::sqrt(te.lateral_limit(k) / std::abs(k)));
}

std::vector<std::size_t> find_bottlenecks(std::span<const double> curvatures,
                                          const TractionEllipse& te, bool closed) {
  const std::size_t m = curvatures.size();
  if (m < 3) {
    throw ArgumentError(fmt::format("need at least 3 samples, got {}", m));
  }
  const double cap = te.v_max.value_or(kInf);
  const auto mag = [&](std::size_t i) { return std::abs(curvatures[i]); };
  std::vector<std::size_t> out;

  const bool flat = std::all_of(curvatures.begin(), curvatures.end(),
                                [&](double k) { return std::abs(k) == mag(0); });
  if (flat) {
    if (corner_speed(curvatures[0], te) < cap) {
      out.push_back(0);
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      const bool has_prev = closed || i > 0;
      const std::size_t prev = (i + m - 1) % m;
      if (has_prev && mag(prev) == mag(i)) {
        continue;
      }
      std::size_t j = i;
      bool has_next = true;
      while (true) {
        if (!closed && j + 1 == m) {
          has_next = false;
          break;
        }
        const std::size_t next = (j + 1) % m;
        if (mag(next) != mag(i)) {
          break;
        }
        j = next;
      }
      const bool above_prev = !has_prev || mag(prev) < mag(i);
      const bool above_next = !has_next || mag((j + 1) % m) < mag(i);
      if (above_prev && above_next && corner_speed(curvatures[i], te) < cap) {
        out.push_back(i);
      }
    }
  }
  if (out.empty()) {
    if (!te.v_max) {
      throw ArgumentError("no curvature bottleneck found; set v_max for straight trajectories");
    }
    out.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      out[i] = i;
    }
  }
  return out;
}

VelocityProfile qss_profile(const DiscretizationSet& disc, const TractionEllipse& te) {
  te.validate();
  const std::size_t m = disc.size();
  const auto& k = disc.curvatures;
  VelocityProfile prof;
  prof.bottlenecks = find_bottlenecks(k, te, disc.closed);

  std::vector<double> cap(m);
  for (std::size_t i = 0; i < m; ++i) {
    cap[i] = corner_speed(k[i], te);
  }
  std::vector<double> ds(m, 0.0);
  for (std::size_t i = 0; i < disc.num_segments(); ++i) {
    ds[i] = disc.segment_length(i);
  }

  // Seed at the slowest bottleneck.
  std::size_t seed = prof.bottlenecks.front();
  for (std::size_t b : prof.bottlenecks) {
    if (cap[b] < cap[seed]) {
      seed = b;
    }
  }

  std::vector<double> fwd = cap;
  std::vector<double> bwd = cap;
  if (disc.closed) {
    const auto sweep = [&](auto&& step) {
      for (int lap = 0; lap < kMaxLaps; ++lap) {
        if (step() < kSweepTol) {
          return;
        }
      }
      throw NumericalError(fmt::format("speed profile did not converge in {} laps", kMaxLaps));
    };
    sweep([&] {
      double change = 0.0;
      for (std::size_t n = 0; n < m; ++n) {
        const std::size_t i = (seed + n) % m;
        const std::size_t j = (i + 1) % m;
        const double cand =
            std::min(fwd[j], implicit_step(fwd[i], k[j], ds[i], te.a_acc_max, cap[j], te));
        if (cand < fwd[j]) {
          change = std::max(change, std::isfinite(fwd[j]) ? fwd[j] - cand : kInf);
          fwd[j] = cand;
        }
      }
      return change;
    });
    sweep([&] {
      double change = 0.0;
      for (std::size_t n = 0; n < m; ++n) {
        const std::size_t j = (seed + m - n) % m;
        const std::size_t i = (j + m - 1) % m;
        const double cand =
            std::min(bwd[i], implicit_step(bwd[j], k[i], ds[i], te.a_dec_max, cap[i], te));
        if (cand < bwd[i]) {
          change = std::max(change, std::isfinite(bwd[i]) ? bwd[i] - cand : kInf);
          bwd[i] = cand;
        }
      }
      return change;
    });
  } else {
    if (!std::isfinite(fwd.front()) || !std::isfinite(bwd.back())) {
      // Flying start and finish at the slowest bottleneck speed.
      fwd.front() = std::min(fwd.front(), cap[seed]);
      bwd.back() = std::min(bwd.back(), cap[seed]);
    }
    for (std::size_t i = 0; i + 1 < m; ++i) {
      fwd[i + 1] = std::min(
          fwd[i + 1], implicit_step(fwd[i], k[i + 1], ds[i], te.a_acc_max, cap[i + 1], te));
    }
    for (std::size_t i = m - 1; i-- > 0;) {
      bwd[i] = std::min(bwd[i], implicit_step(bwd[i + 1], k[i], ds[i], te.a_dec_max, cap[i], te));
    }
  }

  prof.v.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    prof.v[i] = std::min(fwd[i], bwd[i]);
    if (!std::isfinite(prof.v[i]) || !(prof.v[i] > 0.0)) {
      throw NumericalError(fmt::format("speed at sample {} is not finite and positive", i));
    }
  }
  prof.a_lon.assign(m, 0.0);
  prof.a_lat.resize(m);
  prof.t_cum.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    prof.a_lat[i] = prof.v[i] * prof.v[i] * k[i];
  }
  double t = 0.0;
  for (std::size_t i = 0; i < disc.num_segments(); ++i) {
    const std::size_t j = (i + 1) % m;
    prof.a_lon[i] = (prof.v[j] * prof.v[j] - prof.v[i] * prof.v[i]) / (2.0 * ds[i]);
    const double dt = 2.0 * ds[i] / (prof.v[i] + prof.v[j]);
    if (j != 0) {
      prof.t_cum[j] = t + dt;
    }
    t += dt;
  }
  prof.lap_time = t;
  return prof;
}

LapMetrics lap_metrics(const VelocityProfile& profile, const DiscretizationSet& disc) {
  if (profile.v.size() != disc.size() || profile.v.empty()) {
    throw ArgumentError("profile and discretization sizes differ");
  }
  LapMetrics m;
  m.lap_time = profile.lap_time;
  const double length =
      disc.closed ? disc.total_length : disc.arc.back() - disc.arc.front();
  m.avg_speed = length / profile.lap_time;
  const auto [vmin, vmax] = std::minmax_element(profile.v.begin(), profile.v.end());
  m.min_speed = *vmin;
  m.max_speed = *vmax;
  for (double a : profile.a_lat) {
    m.max_lat_g = std::max(m.max_lat_g, std::abs(a));
  }
  for (double a : profile.a_lon) {
    m.max_throttle = std::max(m.max_throttle, a);
    m.max_braking = std::min(m.max_braking, a);
  }
  m.max_braking += 0.0;
  return m;
}

double max_ellipse_usage(const VelocityProfile& profile, std::span<const double> curvatures,
                         const TractionEllipse& te) {
  const std::size_t m = profile.v.size();
  double worst = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double lat = profile.a_lat[i] / te.lateral_limit(curvatures[i]);
    const double braking = std::min(profile.a_lon[i], 0.0) / te.a_dec_max;
    const double throttle = std::max(profile.a_lon[(i + m - 1) % m], 0.0) / te.a_acc_max;
    const double lon = std::max(std::abs(braking), throttle);
    worst = std::max(worst, lon * lon + lat * lat);
  }
  return worst;
}

}  // namespace raceline
