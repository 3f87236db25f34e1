#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>

namespace oracle {

using affpipe::Point2;
using affpipe::TrajectoryParams;

Mat3 multiply(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a[i][k] * b[k][j];
      c[i][j] = s;
    }
  }
  return c;
}

Mat3 from_homography(const affpipe::Homography& h) {
  Mat3 m{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m[i][j] = h(i, j);
  }
  return m;
}

Mat3 canonical(Mat3 m) {
  const double s = m[2][2];
  for (auto& row : m) {
    for (auto& v : row) v /= s;
  }
  return m;
}

namespace {

double dist(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

void enumerate(const std::vector<Point2>& a, const std::vector<Point2>& b, std::size_t i,
               std::size_t j, double acc, double& best) {
  acc += dist(a[i], b[j]);
  if (i + 1 == a.size() && j + 1 == b.size()) {
    best = std::min(best, acc);
    return;
  }
  if (i + 1 < a.size()) enumerate(a, b, i + 1, j, acc, best);
  if (j + 1 < b.size()) enumerate(a, b, i, j + 1, acc, best);
  if (i + 1 < a.size() && j + 1 < b.size()) enumerate(a, b, i + 1, j + 1, acc, best);
}

// Direct transcription of the motion model, written independently of the
// library version.
Point2 model(const std::array<double, 5>& q, Point2 x0, double t) {
  const double theta = q[0], a = q[1], psi = q[2], b = q[3], phi = q[4];
  const double ct = std::cos(theta * t), st = std::sin(theta * t);
  const double vx = std::cos(psi), vy = std::sin(psi);
  const double rx = ct * vx - st * vy - vx;
  const double ry = st * vx + ct * vy - vy;
  return {x0.x + a * rx + b * std::cos(phi) * t, x0.y + a * ry + b * std::sin(phi) * t};
}

double sse(const std::array<double, 5>& q, const std::vector<Point2>& pts,
           const std::vector<double>& t) {
  double s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Point2 f = model(q, pts[0], t[i]);
    s += (f.x - pts[i].x) * (f.x - pts[i].x) + (f.y - pts[i].y) * (f.y - pts[i].y);
  }
  return s;
}

using Vec5 = std::array<double, 5>;

Vec5 nelder_mead(const std::function<double(const Vec5&)>& f, Vec5 start, double scale,
                 int iters) {
  std::array<Vec5, 6> simplex;
  std::array<double, 6> value{};
  simplex[0] = start;
  for (int i = 0; i < 5; ++i) {
    simplex[i + 1] = start;
    simplex[i + 1][i] += scale;
  }
  for (int i = 0; i < 6; ++i) value[i] = f(simplex[i]);
  for (int it = 0; it < iters; ++it) {
    std::array<int, 6> order{0, 1, 2, 3, 4, 5};
    std::sort(order.begin(), order.end(), [&](int x, int y) { return value[x] < value[y]; });
    const int best = order[0], worst = order[5], second = order[4];
    Vec5 centroid{};
    for (int i = 0; i < 5; ++i) {
      for (int d = 0; d < 5; ++d) centroid[d] += simplex[order[i]][d] / 5.0;
    }
    auto along = [&](double coef) {
      Vec5 p;
      for (int d = 0; d < 5; ++d) p[d] = centroid[d] + coef * (simplex[worst][d] - centroid[d]);
      return p;
    };
    const Vec5 reflected = along(-1.0);
    const double fr = f(reflected);
    if (fr < value[best]) {
      const Vec5 expanded = along(-2.0);
      const double fe = f(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        value[worst] = fe;
      } else {
        simplex[worst] = reflected;
        value[worst] = fr;
      }
    } else if (fr < value[second]) {
      simplex[worst] = reflected;
      value[worst] = fr;
    } else {
      const Vec5 contracted = along(0.5);
      const double fc = f(contracted);
      if (fc < value[worst]) {
        simplex[worst] = contracted;
        value[worst] = fc;
      } else {
        for (int i = 0; i < 6; ++i) {
          if (i == best) continue;
          for (int d = 0; d < 5; ++d) {
            simplex[i][d] = simplex[best][d] + 0.5 * (simplex[i][d] - simplex[best][d]);
          }
          value[i] = f(simplex[i]);
        }
      }
    }
  }
  const auto it = std::min_element(value.begin(), value.end());
  return simplex[static_cast<std::size_t>(it - value.begin())];
}

}  // namespace

double brute_force_dtw(const std::vector<Point2>& a, const std::vector<Point2>& b) {
  double best = std::numeric_limits<double>::infinity();
  enumerate(a, b, 0, 0, 0.0, best);
  return best;
}

CurveFit grid_search_fit(const std::vector<Point2>& pts, const std::vector<double>& t) {
  constexpr double pi = std::numbers::pi;
  double extent = 0.0;
  for (const auto& p : pts) extent = std::max(extent, dist(p, pts[0]));
  extent = std::max(extent, 1e-3);

  Vec5 best{};
  double best_value = std::numeric_limits<double>::infinity();
  for (int it = -16; it <= 16; ++it) {
    const double theta = it * pi / 8.0;
    for (int ia = 0; ia <= 8; ++ia) {
      const double a = extent * ia / 4.0;
      for (int ip = 0; ip < 16; ++ip) {
        const double psi = ip * pi / 8.0;
        for (int ib = 0; ib <= 8; ++ib) {
          const double b = extent * ib / 4.0;
          for (int iphi = 0; iphi < 16; ++iphi) {
            const Vec5 q{theta, a, psi, b, iphi * pi / 8.0};
            const double v = sse(q, pts, t);
            if (v < best_value) {
              best_value = v;
              best = q;
            }
          }
        }
      }
    }
  }
  auto f = [&](const Vec5& q) { return sse(q, pts, t); };
  double scale = 0.2;
  for (int round = 0; round < 12; ++round) {
    best = nelder_mead(f, best, scale, 1500);
    scale *= 0.5;
  }
  CurveFit out;
  out.params = {best[0], best[1], best[2], best[3], best[4], pts[0]};
  out.rms = std::sqrt(f(best) / static_cast<double>(pts.size()));
  return out;
}

double curve_rms(const TrajectoryParams& p, const TrajectoryParams& q, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    const Point2 a = model({p.theta, p.a, p.psi, p.b, p.phi}, p.x0, t);
    const Point2 b = model({q.theta, q.a, q.psi, q.b, q.phi}, q.x0, t);
    s += (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y);
  }
  return std::sqrt(s / n);
}

Point2 sample_mean(const std::vector<Point2>& pts) {
  double x = 0.0, y = 0.0;
  for (const auto& p : pts) {
    x += p.x;
    y += p.y;
  }
  return {x / static_cast<double>(pts.size()), y / static_cast<double>(pts.size())};
}

affpipe::Homography random_homography(std::uint64_t seed, double projective) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(-0.3, 0.3);
  std::uniform_real_distribution<double> scale(0.8, 1.2);
  std::uniform_real_distribution<double> shift(-20.0, 20.0);
  std::uniform_real_distribution<double> small(-1.0, 1.0);
  const double a = angle(rng), s = scale(rng);
  Eigen::Matrix3d m;
  m << s * std::cos(a) + 0.05 * small(rng), -s * std::sin(a) + 0.05 * small(rng), shift(rng),
       s * std::sin(a) + 0.05 * small(rng), s * std::cos(a) + 0.05 * small(rng), shift(rng),
       projective * small(rng), projective * small(rng), 1.0;
  return affpipe::Homography(m);
}

}  // namespace oracle
