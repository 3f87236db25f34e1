#include "affpipe/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include <Eigen/Core>

#include "affpipe/contact.hpp"
#include "affpipe/io.hpp"
#include "affpipe/pipeline.hpp"

namespace affpipe {

namespace {

Homography random_similarity(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-0.01, 0.01);
  std::uniform_real_distribution<double> scale(0.995, 1.005);
  std::uniform_real_distribution<double> shift(-2.0, 2.0);
  const double a = angle(rng);
  const double s = scale(rng);
  Eigen::Matrix3d m;
  m << s * std::cos(a), -s * std::sin(a), shift(rng),
       s * std::sin(a), s * std::cos(a), shift(rng),
       0.0, 0.0, 1.0;
  return Homography(m);
}

}  // namespace

SyntheticTruth write_synthetic_clip(const std::filesystem::path& dir,
                                    const std::string& clip_id,
                                    const SyntheticOptions& o, std::uint64_t seed) {
  namespace fs = std::filesystem;
  std::mt19937_64 rng(seed);
  fs::create_directories(dir / "frames");

  int track_frames = 0;
  while (static_cast<double>(track_frames) / o.fps <= 1.0 + 1e-9) ++track_frames;
  const int frame_count = o.inter_frame + track_frames;

  SyntheticTruth truth;
  truth.to_obs.assign(static_cast<std::size_t>(frame_count), Homography());
  Homography forward;
  for (int f = 0; f + 1 < frame_count; ++f) {
    truth.links.push_back(random_similarity(rng));
    if (f >= o.obs_frame) {
      const std::array<Homography, 2> step{forward, truth.links.back()};
      forward = chain_homographies(step);
      truth.to_obs[static_cast<std::size_t>(f + 1)] = forward.inverse();
    }
  }

  // Placeholder frames; only their ordering matters to the pipeline.
  for (int f = 0; f < frame_count; ++f) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05d.pgm", f);
    io::write_gray_pgm(dir / "frames" / name, o.width, o.height,
                       std::vector<std::uint8_t>(static_cast<std::size_t>(o.width) * o.height,
                                                 static_cast<std::uint8_t>(f * 7 % 256)));
  }

  // Correspondences: static background under the link homography, gross
  // outliers, and independently moving points inside the hand/object boxes.
  std::uniform_real_distribution<double> ux(0.0, o.width - 1.0);
  std::uniform_real_distribution<double> uy(0.0, o.height - 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> jump(20.0, 60.0);
  std::vector<CorrespondenceSet> links;
  std::map<int, std::vector<BBox>> detections;
  for (int f = 0; f + 1 < frame_count; ++f) {
    const Homography& h = truth.links[static_cast<std::size_t>(f)];
    CorrespondenceSet c;
    c.frame_src = f;
    c.frame_dst = f + 1;
    int placed = 0;
    while (placed < o.background_pairs) {
      const Point2 src{ux(rng), uy(rng)};
      if (o.hand_box.contains(src) || o.object_box.contains(src)) continue;
      Point2 dst = h.apply(src);
      if (unit(rng) < o.outlier_fraction) {
        const double a = 2.0 * std::numbers::pi * unit(rng);
        dst = dst + jump(rng) * Point2{std::cos(a), std::sin(a)};
      }
      c.pairs.push_back({src, dst});
      ++placed;
    }
    std::uniform_real_distribution<double> bx(o.hand_box.x_min, o.hand_box.x_max - 1e-6);
    std::uniform_real_distribution<double> by(o.hand_box.y_min, o.hand_box.y_max - 1e-6);
    for (int i = 0; i < o.moving_pairs; ++i) {
      const Point2 src{bx(rng), by(rng)};
      c.pairs.push_back({src, src + Point2{8.0 + i, -5.0}});
    }
    links.push_back(std::move(c));
    detections[f] = {o.hand_box, o.object_box};
  }
  detections[frame_count - 1] = {o.hand_box, o.object_box};
  io::write_json(dir / "correspondences.json", io::correspondences_to_json(links));
  io::write_json(dir / "detections.json", io::detections_to_json(detections));

  BinaryMask mask(o.width, o.height);
  double cx = 0.0, cy = 0.0;
  std::size_t contact = 0;
  if (!o.empty_mask) {
    for (int r = 0; r < o.height; ++r) {
      for (int col = 0; col < o.width; ++col) {
        const Point2 p{static_cast<double>(col), static_cast<double>(r)};
        if (!o.mask_region.contains(p)) continue;
        mask.set(col, r, true);
        if (o.object_box.contains(p)) {
          cx += p.x;
          cy += p.y;
          ++contact;
        }
      }
    }
  }
  io::write_mask_pgm(dir / "mask_inter.pgm", mask);
  const Homography& inter_to_obs = truth.to_obs[static_cast<std::size_t>(o.inter_frame)];
  if (contact > 0) {
    // Similarities are affine, so the centroid maps to the centroid.
    truth.contact_centroid = inter_to_obs.apply({cx / contact, cy / contact});
  }

  truth.motion = o.motion;
  if (o.anchor_at_contact) truth.motion.x0 = truth.contact_centroid;
  io::RawTracks raw;
  raw.fps = o.fps;
  for (int k = 0; k < o.tracks; ++k) {
    const double a = 2.0 * std::numbers::pi * k / o.tracks;
    const Point2 offset = o.track_jitter * Point2{std::cos(a), std::sin(a)};
    std::vector<Point2> track;
    for (int j = 0; j < track_frames; ++j) {
      const Point2 in_obs = eval_trajectory(truth.motion, j / o.fps) + offset;
      const auto& g = truth.to_obs[static_cast<std::size_t>(o.inter_frame + j)];
      track.push_back(g.inverse().apply(in_obs));
    }
    raw.tracks.push_back(std::move(track));
  }
  io::write_json(dir / "tracks.json", io::tracks_to_json(raw));

  json manifest = {{"clip_id", clip_id},
                   {"frames_dir", "frames"},
                   {"t_obs", o.obs_frame / o.fps},
                   {"t_inter", o.inter_frame / o.fps},
                   {"fps", o.fps},
                   {"description", o.description},
                   {"prev_descriptions", o.prev_descriptions},
                   {"detections", "detections.json"},
                   {"correspondences", "correspondences.json"},
                   {"mask", "mask_inter.pgm"},
                   {"tracks", "tracks.json"}};
  truth.manifest = dir / "manifest.json";
  io::write_json(truth.manifest, manifest);
  return truth;
}

}  // namespace affpipe
