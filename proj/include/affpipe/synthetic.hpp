#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "affpipe/geometry.hpp"
#include "affpipe/trajectory.hpp"

namespace affpipe {

/// Parameters of a generated clip with known camera motion, contact region
/// and hand motion. Pixel boxes are fixed across frames.
struct SyntheticOptions {
  int width = 320;
  int height = 240;
  double fps = 19.0;  // 20 tracked frames inside the one-second window
  int obs_frame = 0;
  int inter_frame = 6;
  int background_pairs = 60;
  double outlier_fraction = 0.15;
  int moving_pairs = 12;
  int tracks = 4;
  /// Zero-mean offset radius of individual tracks around the motion curve.
  double track_jitter = 0.004;
  /// Motion in observation-frame pixels; x0 is replaced by the contact
  /// centroid when `anchor_at_contact` is set.
  TrajectoryParams motion{0.9, 25.0, 0.8, 40.0, -0.5, {0.0, 0.0}};
  bool anchor_at_contact = true;
  BBox hand_box{140, 95, 180, 130, BoxLabel::HandRight};
  BBox object_box{160, 90, 200, 140, BoxLabel::Object};
  /// Segmentation mask in the interaction frame.
  BBox mask_region{150, 100, 175, 125, BoxLabel::HandRight};
  bool empty_mask = false;
  std::string description = "open the drawer";
  std::vector<std::string> prev_descriptions = {"walk to the cabinet"};
};

struct SyntheticTruth {
  std::filesystem::path manifest;
  /// to_obs[f] maps frame f (f >= obs_frame) into the observation frame;
  /// earlier entries are identity.
  std::vector<Homography> to_obs;
  /// Link homographies frame f -> f + 1.
  std::vector<Homography> links;
  /// Centroid of the contact pixels mapped into the observation frame.
  Point2 contact_centroid;
  TrajectoryParams motion;
};

/// Writes frames/, detections.json, correspondences.json, mask_inter.pgm,
/// tracks.json and manifest.json into `dir`.
SyntheticTruth write_synthetic_clip(const std::filesystem::path& dir,
                                    const std::string& clip_id,
                                    const SyntheticOptions& options,
                                    std::uint64_t seed);

}  // namespace affpipe
