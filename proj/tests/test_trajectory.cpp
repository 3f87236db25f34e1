#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "affpipe/error.hpp"
#include "affpipe/trajectory.hpp"
#include "oracles.hpp"

using namespace affpipe;
using std::numbers::pi;

namespace {

std::vector<double> uniform_times(int n) {
  std::vector<double> t;
  for (int i = 0; i < n; ++i) t.push_back(static_cast<double>(i) / (n - 1));
  return t;
}

TrackSet single_track(const std::vector<Point2>& pts) {
  TrackSet ts;
  ts.tracks = {pts};
  ts.timestamps = uniform_times(static_cast<int>(pts.size()));
  return ts;
}

}  // namespace

TEST_CASE("eval_trajectory closed forms") {
  TrajectoryParams p{0.7, 3.0, 1.1, 4.0, -0.3, {12.5, -3.0}};
  CHECK(eval_trajectory(p, 0.0) == Point2{12.5, -3.0});

  TrajectoryParams line{0.0, 5.0, 0.3, std::sqrt(2.0), pi / 4, {0, 0}};
  const auto e = eval_trajectory(line, 1.0);
  CHECK(e.x == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(e.y == doctest::Approx(1.0).epsilon(1e-15));

  TrajectoryParams half{pi, 1.0, 0.0, 0.0, 0.0, {0, 0}};
  const auto h1 = eval_trajectory(half, 0.5);
  const auto h2 = eval_trajectory(half, 1.0);
  CHECK(std::abs(h1.x + 1.0) < 1e-15);
  CHECK(std::abs(h1.y - 1.0) < 1e-15);
  CHECK(std::abs(h2.x + 2.0) < 1e-15);
  CHECK(std::abs(h2.y) < 1e-15);
}

TEST_CASE("model properties") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    TrajectoryParams p{u(rng), std::abs(u(rng)) * 5, u(rng), 0.0, u(rng), {u(rng), u(rng)}};
    const Point2 c{p.x0.x - p.a * std::cos(p.psi), p.x0.y - p.a * std::sin(p.psi)};
    for (double t : uniform_times(11)) CHECK(std::abs(distance(eval_trajectory(p, t), c) - p.a) < 1e-12);

    TrajectoryParams lin{0.0, 4.0, u(rng), 6.0, u(rng), {u(rng), u(rng)}};
    const Point2 end = eval_trajectory(lin, 1.0) - lin.x0;
    for (double t : uniform_times(11)) {
      const Point2 d = eval_trajectory(lin, t) - lin.x0;
      CHECK(distance(d, t * end) < 1e-12);
    }
  }
}

TEST_CASE("fit recovers a noiseless line") {
  std::vector<Point2> pts;
  for (int i = 0; i < 20; ++i) pts.push_back({10.0 * i / 19.0, 0.0});
  const auto fit = fit_trajectory(single_track(pts));
  const auto& p = fit.params;
  CHECK_FALSE(fit.degenerate);
  CHECK(std::abs(p.b - 10.0) < 1e-3);
  CHECK(std::abs(angle_difference(p.phi, 0.0)) < 1e-3);
  const Point2 v{std::cos(p.psi), std::sin(p.psi)};
  const Point2 rot{std::cos(p.theta) * v.x - std::sin(p.theta) * v.y - v.x,
                   std::sin(p.theta) * v.x + std::cos(p.theta) * v.y - v.y};
  CHECK(p.a * norm(rot) < 1e-2);
  CHECK(fit.residual < 1e-3);

  const auto ref = oracle::grid_search_fit(pts, single_track(pts).timestamps);
  CHECK(ref.rms < 1e-3);
  CHECK(oracle::curve_rms(p, ref.params) < 1e-3);
}

TEST_CASE("fit recovers a quarter circle") {
  // radius 5 about (0, 5), starting at the origin, counterclockwise
  std::vector<Point2> pts;
  for (int i = 0; i < 20; ++i) {
    const double s = (pi / 2) * i / 19.0;
    pts.push_back({5.0 * std::sin(s), 5.0 - 5.0 * std::cos(s)});
  }
  const auto fit = fit_trajectory(single_track(pts));
  CHECK(std::abs(fit.params.theta - pi / 2) < 1e-2);
  CHECK(std::abs(fit.params.a - 5.0) < 1e-2);
  CHECK(fit.params.b < 1e-2);
  CHECK(fit.residual < 1e-2);

  const auto ref = oracle::grid_search_fit(pts, single_track(pts).timestamps);
  CHECK(ref.rms < 1e-2);
  CHECK(oracle::curve_rms(fit.params, ref.params) < 1e-2);
  CHECK(fit.residual <= ref.rms + 1e-9);
}

TEST_CASE("fit idempotence on random models") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> th(-6.0, 6.0), ang(0.0, 2 * pi), len(0.0, 30.0);
  for (int trial = 0; trial < 25; ++trial) {
    const TrajectoryParams p{th(rng), len(rng), ang(rng), len(rng), ang(rng), {100, 80}};
    TrackSet ts;
    ts.timestamps = uniform_times(20);
    ts.tracks.emplace_back();
    for (double t : ts.timestamps) ts.tracks[0].push_back(eval_trajectory(p, t));
    const auto fit = fit_trajectory(ts);
    CHECK(oracle::curve_rms(p, fit.params) < 1e-3);
    CHECK(fit.residual < 1e-3);
    CHECK(std::abs(fit.params.theta) < 2 * pi);
  }
}

TEST_CASE("fit uses the mean of first points and all tracks") {
  const TrajectoryParams p{1.2, 8.0, 0.5, 12.0, 2.0, {50, 50}};
  TrackSet ts;
  ts.timestamps = uniform_times(15);
  for (Point2 off : {Point2{0.5, 0}, Point2{-0.5, 0}, Point2{0, 0.25}, Point2{0, -0.25}}) {
    ts.tracks.emplace_back();
    for (double t : ts.timestamps) ts.tracks.back().push_back(eval_trajectory(p, t) + off);
  }
  const auto fit = fit_trajectory(ts);
  CHECK(distance(fit.params.x0, {50, 50}) < 1e-12);
  CHECK(oracle::curve_rms(p, fit.params) < 1e-6);
  // residual is the per-point distance to the shared curve
  CHECK(fit.residual == doctest::Approx(std::sqrt((0.25 + 0.25 + 0.0625 + 0.0625) / 4.0)).epsilon(1e-6));
}

TEST_CASE("degenerate tracks") {
  const auto fit = fit_trajectory(single_track(std::vector<Point2>(10, Point2{3, 4})));
  CHECK(fit.degenerate);
  CHECK(fit.params.a == 0.0);
  CHECK(fit.params.b == 0.0);
  CHECK(fit.params.x0 == Point2{3, 4});

  TrackSet bad;
  bad.timestamps = {0.0};
  bad.tracks = {{{0, 0}}};
  CHECK_THROWS_AS(fit_trajectory(bad), Error);
}

TEST_CASE("TrackSet validation") {
  TrackSet ts;
  ts.timestamps = {0.0, 0.5, 0.4};
  ts.tracks = {{{0, 0}, {1, 1}, {2, 2}}};
  CHECK_THROWS_AS(ts.validate(), Error);
  ts.timestamps = {0.0, 0.5, 1.0};
  ts.tracks = {{{0, 0}, {1, 1}}};
  CHECK_THROWS_AS(ts.validate(), Error);
  ts.tracks = {{{0, 0}, {1, NAN}, {2, 2}}};
  CHECK_THROWS_AS(ts.validate(), Error);
}

TEST_CASE("project_tracks") {
  TrackSet raw;
  raw.timestamps = {0.0, 0.5, 1.0};
  raw.tracks = {{{0, 0}, {1, 2}, {3, 4}}};
  const std::vector<Homography> ident(3);
  CHECK(project_tracks(raw, ident).tracks == raw.tracks);

  const std::vector<Homography> shift(3, Homography::translation(3, 0));
  const auto moved = project_tracks(raw, shift);
  for (std::size_t i = 0; i < 3; ++i) CHECK(moved.tracks[0][i] == raw.tracks[0][i] + Point2{3, 0});
  CHECK(moved.timestamps == raw.timestamps);

  const std::vector<Homography> links{Homography::translation(1, 0), Homography::translation(0, 1)};
  const std::vector<Homography> cumulative{chain_homographies(links)};
  TrackSet origin;
  origin.timestamps = {0.0};
  origin.tracks = {{{0, 0}}};
  CHECK(project_tracks(origin, cumulative).tracks[0][0] == Point2{1, 1});

  CHECK_THROWS_AS(project_tracks(raw, cumulative), Error);
}

TEST_CASE("encode and decode") {
  const TrajectoryParams zero{};
  const auto e0 = encode_params(zero, 100.0);
  CHECK(e0.values[0] == 1.0);
  CHECK(e0.values[1] == 0.5);
  const TrajectoryParams quarter{pi / 2, 50.0, 0.0, 0.0, 0.0, {}};
  const auto eq = encode_params(quarter, 100.0);
  CHECK(std::abs(eq.values[0] - 0.5) < 1e-15);
  CHECK(eq.values[1] == 1.0);
  CHECK(eq.values[6] == 0.5);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ang(-pi, pi), len(0.0, 200.0);
  for (int i = 0; i < 200; ++i) {
    const TrajectoryParams p{ang(rng), len(rng), ang(rng), len(rng), ang(rng), {}};
    const auto e = encode_params(p, 200.0);
    for (double v : e.values) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    const auto d = decode_params(e, 200.0);
    CHECK(std::abs(angle_difference(d.theta, p.theta)) < 1e-9);
    CHECK(std::abs(angle_difference(d.psi, p.psi)) < 1e-9);
    CHECK(std::abs(angle_difference(d.phi, p.phi)) < 1e-9);
    CHECK(std::abs(d.a - p.a) < 1e-9);
    CHECK(std::abs(d.b - p.b) < 1e-9);
  }
  const TrajectoryParams big{0, 201.0, 0, 0, 0, {}};
  CHECK_THROWS_AS(encode_params(big, 200.0), Error);
}

TEST_CASE("canonical form") {
  const TrajectoryParams p{0.8, -3.0, 0.2, -2.0, 7.0, {1, 1}};
  const auto c = p.canonical();
  CHECK(c.a >= 0.0);
  CHECK(c.b >= 0.0);
  CHECK(c.psi >= 0.0);
  CHECK(c.psi < 2 * pi);
  CHECK(c.phi >= 0.0);
  CHECK(c.phi < 2 * pi);
  CHECK(oracle::curve_rms(p, c) < 1e-12);
}

TEST_CASE("normalize_for_eval") {
  const TrajectoryParams line{0, 0, 0, 7.0, 0.0, {3, 9}};
  const auto n = normalize_for_eval(line, 32);
  CHECK(n.front() == Point2{0, 0});
  CHECK(std::abs(n.back().x - 1.0) < 1e-15);
  for (const auto& q : n) CHECK(q.y == 0.0);

  for (const auto& q : normalize_for_eval(TrajectoryParams{}, 8)) CHECK(q == Point2{0, 0});

  const TrajectoryParams half{pi, 2.0, 0.0, 0.0, 0.0, {0, 0}};
  const auto raw = sample_trajectory(half, 32);
  double max_norm = 0.0;
  for (const auto& q : raw) max_norm = std::max(max_norm, norm(q));
  CHECK(std::abs(max_norm - 4.0) < 1e-12);
  const auto hn = normalize_for_eval(half, 32);
  CHECK(std::abs(hn.back().x + 1.0) < 1e-12);
  CHECK(std::abs(hn.back().y) < 1e-12);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 20; ++i) {
    TrajectoryParams p{u(rng), std::abs(u(rng)) * 4, u(rng), std::abs(u(rng)) * 4, u(rng), {u(rng), u(rng)}};
    const auto a = normalize_for_eval(p, 32);
    double m = 0.0;
    for (const auto& q : a) m = std::max(m, norm(q));
    CHECK(std::abs(m - 1.0) <= 2e-16);  // one ulp of rounding in the distance
    TrajectoryParams s = p;
    s.a *= 3.5;
    s.b *= 3.5;
    const auto b = normalize_for_eval(s, 32);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(distance(a[k], b[k]) < 1e-12);
  }
}
