#include "affpipe/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

namespace affpipe {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kThetaGrid = 720;
constexpr int kRefinedMinima = 6;
constexpr double kZeroLength = 1e-12;
constexpr double kCoincident = 1e-9;

double wrap_positive(double angle) {
  double w = std::fmod(angle, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

// Displacements of the mean track from its first point, on a shared clock.
struct ProfileProblem {
  std::vector<double> t;
  std::vector<Eigen::Vector2d> d;
};

struct ProfileSolution {
  double sse = 0.0;
  Eigen::Vector4d z = Eigen::Vector4d::Zero();
};

ProfileSolution solve_profile(const ProfileProblem& prob, double theta) {
  const auto n = static_cast<Eigen::Index>(prob.t.size());
  Eigen::MatrixXd a(2 * n, 4);
  Eigen::VectorXd rhs(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ti = prob.t[static_cast<std::size_t>(i)];
    const double c = std::cos(theta * ti) - 1.0;
    const double s = std::sin(theta * ti);
    a.row(2 * i) << c, -s, ti, 0.0;
    a.row(2 * i + 1) << s, c, 0.0, ti;
    rhs(2 * i) = prob.d[static_cast<std::size_t>(i)].x();
    rhs(2 * i + 1) = prob.d[static_cast<std::size_t>(i)].y();
  }
  ProfileSolution sol;
  sol.z = a.completeOrthogonalDecomposition().solve(rhs);
  sol.sse = (a * sol.z - rhs).squaredNorm();
  return sol;
}

struct Candidate {
  double theta;
  ProfileSolution sol;
};

// Lower residual wins; near-ties go to the smaller rotation.
bool better(const Candidate& lhs, const Candidate& rhs) {
  const double tol = 1e-12 * (1.0 + std::min(lhs.sol.sse, rhs.sol.sse));
  if (lhs.sol.sse < rhs.sol.sse - tol) return true;
  if (rhs.sol.sse < lhs.sol.sse - tol) return false;
  return std::abs(lhs.theta) < std::abs(rhs.theta);
}

}  // namespace

void TrackSet::validate() const {
  if (timestamps.size() < 2) {
    throw Error(ErrorCode::InvalidInput, "tracks need at least 2 time steps");
  }
  if (tracks.empty()) throw Error(ErrorCode::InvalidInput, "no tracks");
  if (timestamps.front() != 0.0) {
    throw Error(ErrorCode::InvalidInput, "first timestamp must be 0");
  }
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    if (!(timestamps[i] > timestamps[i - 1])) {
      throw Error(ErrorCode::InvalidInput, "timestamps must strictly increase");
    }
  }
  if (timestamps.back() > 1.0 + 1e-12) {
    throw Error(ErrorCode::InvalidInput, "timestamps must lie in [0, 1]");
  }
  for (const auto& track : tracks) {
    if (track.size() != timestamps.size()) {
      throw Error(ErrorCode::InvalidInput,
                  "track length differs from the number of timestamps");
    }
    if (!std::all_of(track.begin(), track.end(), is_finite)) {
      throw Error(ErrorCode::InvalidInput, "track contains non-finite points");
    }
  }
}

TrajectoryParams TrajectoryParams::canonical() const {
  TrajectoryParams c = *this;
  if (c.a < 0.0) {
    c.a = -c.a;
    c.psi += std::numbers::pi;
  }
  if (c.b < 0.0) {
    c.b = -c.b;
    c.phi += std::numbers::pi;
  }
  c.psi = wrap_positive(c.psi);
  c.phi = wrap_positive(c.phi);
  if (c.a < kZeroLength) {
    c.a = 0.0;
    c.psi = 0.0;
    c.theta = 0.0;
  }
  if (c.b < kZeroLength) {
    c.b = 0.0;
    c.phi = 0.0;
  }
  return c;
}

Point2 eval_trajectory(const TrajectoryParams& p, double t) {
  const double c = std::cos(p.theta * t);
  const double s = std::sin(p.theta * t);
  const double vx = std::cos(p.psi);
  const double vy = std::sin(p.psi);
  const double rx = (c - 1.0) * vx - s * vy;
  const double ry = s * vx + (c - 1.0) * vy;
  return {p.x0.x + p.a * rx + p.b * std::cos(p.phi) * t,
          p.x0.y + p.a * ry + p.b * std::sin(p.phi) * t};
}

std::vector<Point2> sample_trajectory(const TrajectoryParams& p, int samples) {
  if (samples < 2) throw Error(ErrorCode::InvalidInput, "need at least 2 samples");
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    out.push_back(eval_trajectory(p, static_cast<double>(i) / (samples - 1)));
  }
  return out;
}

TrajectoryFit fit_trajectory(const TrackSet& tracks, std::uint64_t /*seed*/) {
  tracks.validate();
  const std::size_t n = tracks.steps();
  const auto k = static_cast<double>(tracks.tracks.size());

  std::vector<Eigen::Vector2d> mean(n, Eigen::Vector2d::Zero());
  for (const auto& track : tracks.tracks) {
    for (std::size_t i = 0; i < n; ++i) mean[i] += Eigen::Vector2d(track[i].x, track[i].y);
  }
  for (auto& m : mean) m /= k;

  TrajectoryFit fit;
  fit.params.x0 = {mean[0].x(), mean[0].y()};

  // Spread of individual tracks around the mean track; the model cannot
  // remove it.
  double spread = 0.0;
  bool coincident = true;
  for (const auto& track : tracks.tracks) {
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Vector2d p(track[i].x, track[i].y);
      spread += (p - mean[i]).squaredNorm();
      if ((p - mean[0]).norm() > kCoincident) coincident = false;
    }
  }
  const double count = k * static_cast<double>(n);
  if (coincident) {
    fit.degenerate = true;
    fit.residual = std::sqrt(spread / count);
    return fit;
  }

  ProfileProblem prob;
  prob.t = tracks.timestamps;
  prob.d.reserve(n);
  for (const auto& m : mean) prob.d.push_back(m - mean[0]);

  const double lo = -kTwoPi;
  const double step = 2.0 * kTwoPi / kThetaGrid;
  std::vector<Candidate> grid;
  grid.reserve(kThetaGrid);
  for (int j = 0; j < kThetaGrid; ++j) {
    const double theta = lo + (j + 0.5) * step;
    grid.push_back({theta, solve_profile(prob, theta)});
  }

  std::vector<std::size_t> minima;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double v = grid[j].sol.sse;
    const bool left = j == 0 || v <= grid[j - 1].sol.sse;
    const bool right = j + 1 == grid.size() || v <= grid[j + 1].sol.sse;
    if (left && right) minima.push_back(j);
  }
  std::sort(minima.begin(), minima.end(), [&](std::size_t x, std::size_t y) {
    return better(grid[x], grid[y]);
  });
  if (minima.size() > static_cast<std::size_t>(kRefinedMinima)) {
    minima.resize(kRefinedMinima);
  }

  Candidate best = grid[minima.front()];
  auto objective = [&](double theta) { return solve_profile(prob, theta).sse; };
  for (std::size_t j : minima) {
    const double a = std::max(grid[j].theta - step, lo + 1e-9);
    const double b = std::min(grid[j].theta + step, kTwoPi - 1e-9);
    boost::uintmax_t max_iter = 200;
    const auto [theta, value] = boost::math::tools::brent_find_minima(
        objective, a, b, std::numeric_limits<double>::digits / 2, max_iter);
    (void)value;
    Candidate refined{theta, solve_profile(prob, theta)};
    if (better(grid[j], refined)) refined = grid[j];
    if (better(refined, best)) best = refined;
  }

  fit.params.theta = best.theta;
  fit.params.a = std::hypot(best.sol.z(0), best.sol.z(1));
  fit.params.psi = std::atan2(best.sol.z(1), best.sol.z(0));
  fit.params.b = std::hypot(best.sol.z(2), best.sol.z(3));
  fit.params.phi = std::atan2(best.sol.z(3), best.sol.z(2));
  fit.params = fit.params.canonical();
  fit.residual = std::sqrt((spread + k * best.sol.sse) / count);
  return fit;
}

TrackSet project_tracks(const TrackSet& raw, std::span<const Homography> per_frame) {
  if (per_frame.size() != raw.steps()) {
    throw Error(ErrorCode::LengthMismatch,
                "need one homography per track frame: have " +
                    std::to_string(per_frame.size()) + ", tracks have " +
                    std::to_string(raw.steps()));
  }
  TrackSet out;
  out.timestamps = raw.timestamps;
  out.tracks.reserve(raw.tracks.size());
  for (const auto& track : raw.tracks) {
    if (track.size() != per_frame.size()) {
      throw Error(ErrorCode::LengthMismatch, "track length differs from timestamps");
    }
    std::vector<Point2> projected;
    projected.reserve(track.size());
    for (std::size_t i = 0; i < track.size(); ++i) {
      projected.push_back(per_frame[i].apply(track[i]));
    }
    out.tracks.push_back(std::move(projected));
  }
  return out;
}

EncodedParams encode_params(const TrajectoryParams& p, double diag) {
  if (!(diag > 0.0)) throw Error(ErrorCode::InvalidInput, "diagonal must be positive");
  if (p.a < 0.0 || p.a > diag || p.b < 0.0 || p.b > diag) {
    throw Error(ErrorCode::OutOfRange, "a and b must lie in [0, diag]");
  }
  auto unit = [](double v) { return (v + 1.0) / 2.0; };
  EncodedParams e;
  e.values = {unit(std::cos(p.theta)), unit(std::sin(p.theta)),
              unit(std::cos(p.psi)),   unit(std::sin(p.psi)),
              unit(std::cos(p.phi)),   unit(std::sin(p.phi)),
              p.a / diag,              p.b / diag};
  return e;
}

TrajectoryParams decode_params(const EncodedParams& e, double diag) {
  if (!(diag > 0.0)) throw Error(ErrorCode::InvalidInput, "diagonal must be positive");
  auto angle = [&](std::size_t i) {
    return std::atan2(2.0 * e.values[i + 1] - 1.0, 2.0 * e.values[i] - 1.0);
  };
  TrajectoryParams p;
  p.theta = angle(0);
  p.psi = angle(2);
  p.phi = angle(4);
  p.a = std::clamp(e.values[6], 0.0, 1.0) * diag;
  p.b = std::clamp(e.values[7], 0.0, 1.0) * diag;
  return p;
}

std::vector<Point2> normalize_points(std::span<const Point2> pts) {
  std::vector<Point2> out;
  if (pts.empty()) return out;
  out.reserve(pts.size());
  double max_norm = 0.0;
  for (const auto& p : pts) {
    out.push_back(p - pts.front());
    max_norm = std::max(max_norm, norm(out.back()));
  }
  if (max_norm < kZeroLength) {
    std::fill(out.begin(), out.end(), Point2{});
    return out;
  }
  for (auto& p : out) p = {p.x / max_norm, p.y / max_norm};
  return out;
}

std::vector<Point2> normalize_for_eval(const TrajectoryParams& p, int samples) {
  return normalize_points(sample_trajectory(p, samples));
}

double angle_difference(double a, double b) {
  double d = std::remainder(a - b, kTwoPi);
  if (d <= -std::numbers::pi) d += kTwoPi;
  return d;
}

}  // namespace affpipe
