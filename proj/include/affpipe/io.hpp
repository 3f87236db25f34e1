#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "affpipe/contact.hpp"
#include "affpipe/geometry.hpp"
#include "affpipe/trajectory.hpp"

namespace affpipe::io {

namespace fs = std::filesystem;
using nlohmann::json;

// Every reader throws Error(Io) for unreadable files and
// Error(InvalidInput) for malformed content.

/// Binary PGM (P5, maxval <= 255); nonzero pixels are mask.
BinaryMask read_mask_pgm(const fs::path& path);
/// Writes 0 / 255.
void write_mask_pgm(const fs::path& path, const BinaryMask& mask);
void write_gray_pgm(const fs::path& path, int width, int height,
                    const std::vector<std::uint8_t>& pixels);

/// Grayscale PFM ("Pf"), rows stored bottom-to-top, negative scale for
/// little-endian.
Heatmap read_heatmap_pfm(const fs::path& path);
void write_heatmap_pfm(const fs::path& path, const Heatmap& heatmap);
/// 8-bit grayscale PNG, value * 255 rounded.
void write_heatmap_png(const fs::path& path, const Heatmap& heatmap);

/// A JSON array, a single object, or one object per line.
std::vector<json> read_json_records(const fs::path& path);
json read_json(const fs::path& path);
/// Pretty-printed with a trailing newline.
void write_json(const fs::path& path, const json& value);

/// {"frame_src", "frame_dst", "pairs": [[sx, sy, dx, dy], ...]} per link.
std::vector<CorrespondenceSet> read_correspondences(const fs::path& path);
json correspondences_to_json(const std::vector<CorrespondenceSet>& links);

/// {"frame", "boxes": [{"label", "xyxy"}]} per frame, keyed by frame.
std::map<int, std::vector<BBox>> read_detections(const fs::path& path);
json detections_to_json(const std::map<int, std::vector<BBox>>& frames);

/// Dense tracker output; tracks[k][j] is track k at frame j, frame 0 being
/// the interaction frame.
struct RawTracks {
  double fps = 0.0;
  std::vector<std::vector<Point2>> tracks;
};
RawTracks read_tracks(const fs::path& path);
json tracks_to_json(const RawTracks& tracks);

json trajectory_to_json(const TrajectoryFit& fit);
TrajectoryFit trajectory_from_json(const json& j);

json point_to_json(Point2 p);
Point2 point_from_json(const json& j);

}  // namespace affpipe::io
