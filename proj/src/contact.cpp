#include "affpipe/contact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace affpipe {

namespace {

double log_gaussian(Point2 p, Point2 mean, const Eigen::Matrix2d& cov) {
  const double det = cov.determinant();
  const Eigen::Vector2d d(p.x - mean.x, p.y - mean.y);
  const double maha = d.dot(cov.inverse() * d);
  return -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * maha;
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Built from three scalars so the off-diagonal entries are bit-identical.
Eigen::Matrix2d symmetric(double xx, double xy, double yy) {
  Eigen::Matrix2d m;
  m << xx, xy, xy, yy;
  return m;
}

Eigen::Matrix2d scatter(std::span<const Point2> pts, Point2 mean) {
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : pts) {
    const double dx = p.x - mean.x, dy = p.y - mean.y;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  const double n = static_cast<double>(pts.size());
  return symmetric(sxx / n, sxy / n, syy / n);
}

// k-means++ centers.
std::vector<Point2> seed_centers(std::span<const Point2> pts, int k,
                                 std::mt19937_64& rng) {
  std::vector<Point2> centers;
  std::uniform_int_distribution<std::size_t> first(0, pts.size() - 1);
  centers.push_back(pts[first(rng)]);
  std::vector<double> d2(pts.size(), std::numeric_limits<double>::infinity());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Point2 diff = pts[i] - centers.back();
      d2[i] = std::min(d2[i], diff.x * diff.x + diff.y * diff.y);
      total += d2[i];
    }
    std::size_t chosen = 0;
    if (total <= 0.0) {
      chosen = first(rng);
    } else {
      const double target = unit(rng) * total;
      double acc = 0.0;
      chosen = pts.size() - 1;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        acc += d2[i];
        if (target < acc) {
          chosen = i;
          break;
        }
      }
    }
    centers.push_back(pts[chosen]);
  }
  return centers;
}

}  // namespace

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count_if(
      bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

std::pair<int, int> Heatmap::argmax() const {
  const auto it = std::max_element(values.begin(), values.end());
  const auto idx = static_cast<int>(std::distance(values.begin(), it));
  return {idx % width, idx / width};
}

double GaussianMixture::log_density(Point2 p) const {
  std::vector<double> terms;
  terms.reserve(k());
  for (std::size_t j = 0; j < k(); ++j) {
    if (weights[j] <= 0.0) continue;
    terms.push_back(std::log(weights[j]) + log_gaussian(p, means[j], covariances[j]));
  }
  if (terms.empty()) return -std::numeric_limits<double>::infinity();
  return log_sum_exp(terms);
}

double GaussianMixture::mean_log_likelihood(std::span<const Point2> pts) const {
  double s = 0.0;
  for (const auto& p : pts) s += log_density(p);
  return s / static_cast<double>(pts.size());
}

std::vector<Point2> intersect_mask_bbox(const BinaryMask& mask, const BBox& box) {
  std::vector<Point2> out;
  for (int row = 0; row < mask.height; ++row) {
    for (int col = 0; col < mask.width; ++col) {
      const Point2 p{static_cast<double>(col), static_cast<double>(row)};
      if (mask.at(col, row) && box.contains(p)) out.push_back(p);
    }
  }
  if (out.empty()) {
    throw Error(ErrorCode::EmptyIntersection,
                "segmentation mask does not intersect the object box");
  }
  return out;
}

std::vector<Point2> project_region(std::span<const Point2> pts,
                                   const Homography& h, int width, int height) {
  if (pts.empty()) {
    throw Error(ErrorCode::InvalidInput, "project_region needs a nonempty region");
  }
  std::vector<Point2> out;
  out.reserve(pts.size());
  for (const auto& p : project_points(h, pts)) {
    if (p.x >= -0.5 && p.x < width - 0.5 && p.y >= -0.5 && p.y < height - 0.5) {
      out.push_back(p);
    }
  }
  if (out.empty()) {
    throw Error(ErrorCode::AllPointsOutOfFrame,
                "every projected contact point falls outside the frame");
  }
  return out;
}

GmmFit fit_gmm_traced(std::span<const Point2> pts, int k, int max_iters,
                      std::uint64_t seed) {
  if (k < 1) throw Error(ErrorCode::InvalidInput, "GMM needs k >= 1");
  if (pts.size() < static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::TooFewPoints,
                "GMM with k=" + std::to_string(k) + " needs at least k points, got " +
                    std::to_string(pts.size()));
  }
  const auto n = pts.size();
  const auto kk = static_cast<std::size_t>(k);
  const Eigen::Matrix2d floor = kCovarianceFloor * Eigen::Matrix2d::Identity();

  std::mt19937_64 rng(seed);
  GmmFit fit;
  GaussianMixture& g = fit.mixture;
  g.means = seed_centers(pts, k, rng);
  Point2 global_mean{};
  for (const auto& p : pts) global_mean = global_mean + p;
  global_mean = (1.0 / static_cast<double>(n)) * global_mean;
  const Eigen::Matrix2d global_cov = scatter(pts, global_mean) + floor;
  g.weights.assign(kk, 1.0 / k);
  g.covariances.assign(kk, global_cov);

  // resp is n x k, row-major.
  std::vector<double> resp(n * kk);
  std::vector<double> row(kk);
  auto e_step = [&]() {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < kk; ++j) {
        row[j] = g.weights[j] > 0.0
                     ? std::log(g.weights[j]) + log_gaussian(pts[i], g.means[j], g.covariances[j])
                     : -std::numeric_limits<double>::infinity();
      }
      const double lse = log_sum_exp(row);
      ll += lse;
      for (std::size_t j = 0; j < kk; ++j) resp[i * kk + j] = std::exp(row[j] - lse);
    }
    return ll / static_cast<double>(n);
  };

  double ll = e_step();
  fit.log_likelihood.push_back(ll);
  for (int it = 0; it < max_iters; ++it) {
    for (std::size_t j = 0; j < kk; ++j) {
      double nk = 0.0;
      Point2 mean{};
      for (std::size_t i = 0; i < n; ++i) {
        const double r = resp[i * kk + j];
        nk += r;
        mean = mean + r * pts[i];
      }
      g.weights[j] = nk / static_cast<double>(n);
      if (nk < 1e-10 * static_cast<double>(n)) continue;  // starved component
      mean = (1.0 / nk) * mean;
      double sxx = 0.0, sxy = 0.0, syy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = resp[i * kk + j];
        const double dx = pts[i].x - mean.x, dy = pts[i].y - mean.y;
        sxx += r * dx * dx;
        sxy += r * dx * dy;
        syy += r * dy * dy;
      }
      g.means[j] = mean;
      g.covariances[j] = symmetric(sxx / nk, sxy / nk, syy / nk) + floor;
    }
    double wsum = 0.0;
    for (double w : g.weights) wsum += w;
    for (double& w : g.weights) w /= wsum;

    const double next = e_step();
    fit.log_likelihood.push_back(next);
    fit.iterations = it + 1;
    const double gain = next - ll;
    ll = next;
    if (gain < kEmTolerance) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

std::vector<Point2> sample_contact_points(const GaussianMixture& g, int n,
                                          std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::InvalidInput, "sample count must be >= 1");
  if (g.k() == 0) throw Error(ErrorCode::InvalidInput, "empty mixture");
  std::vector<Eigen::Matrix2d> chol;
  chol.reserve(g.k());
  for (const auto& c : g.covariances) chol.emplace_back(c.llt().matrixL());
  std::vector<double> cumulative(g.k());
  double acc = 0.0;
  for (std::size_t j = 0; j < g.k(); ++j) {
    acc += g.weights[j];
    cumulative[j] = acc;
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    const double u = unit(rng) * acc;
    std::size_t j = 0;
    while (j + 1 < g.k() && !(u < cumulative[j])) ++j;
    const double z0 = gauss(rng);
    const double z1 = gauss(rng);
    const Eigen::Vector2d d = chol[j] * Eigen::Vector2d(z0, z1);
    out.push_back({g.means[j].x + d.x(), g.means[j].y + d.y()});
  }
  return out;
}

Heatmap rasterize_heatmap(std::span<const Point2> pts, int width, int height,
                          double sigma) {
  if (pts.empty()) throw Error(ErrorCode::InvalidInput, "no points to rasterize");
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidInput, "blur sigma must be > 0");
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::InvalidInput, "heatmap dimensions must be positive");
  }
  const double radius = 3.0 * sigma;
  const double r2 = radius * radius;
  const double inv = 1.0 / (2.0 * sigma * sigma);
  std::vector<double> acc(static_cast<std::size_t>(width) * height, 0.0);
  for (const auto& p : pts) {
    const int c0 = std::max(0, static_cast<int>(std::ceil(p.x - radius)));
    const int c1 = std::min(width - 1, static_cast<int>(std::floor(p.x + radius)));
    const int r0 = std::max(0, static_cast<int>(std::ceil(p.y - radius)));
    const int r1 = std::min(height - 1, static_cast<int>(std::floor(p.y + radius)));
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        const double dx = c - p.x;
        const double dy = r - p.y;
        const double d2 = dx * dx + dy * dy;
        if (d2 <= r2) acc[static_cast<std::size_t>(r) * width + c] += std::exp(-d2 * inv);
      }
    }
  }
  Heatmap h(width, height);
  const double peak = *std::max_element(acc.begin(), acc.end());
  if (peak <= 0.0) return h;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    h.values[i] = static_cast<float>(acc[i] / peak);
  }
  return h;
}

}  // namespace affpipe
