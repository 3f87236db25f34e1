#include "affpipe/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <png.h>

namespace affpipe::io {

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(const std::string& data, std::size_t& pos) {
  for (;;) {
    while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    if (pos < data.size() && data[pos] == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  const std::size_t start = pos;
  while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
  return data.substr(start, pos - start);
}

int parse_int(const std::string& token, const fs::path& path) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidInput, "bad header field '" + token + "' in " + path.string());
  }
}

Point2 point_from_array(const json& j, std::size_t offset = 0) {
  return {j.at(offset).get<double>(), j.at(offset + 1).get<double>()};
}

template <typename F>
auto with_schema_errors(const fs::path& path, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, path.string() + ": " + e.what());
  }
}

}  // namespace

BinaryMask read_mask_pgm(const fs::path& path) {
  const std::string data = read_file(path);
  std::size_t pos = 0;
  if (next_token(data, pos) != "P5") {
    throw Error(ErrorCode::InvalidInput, path.string() + " is not a binary PGM");
  }
  const int width = parse_int(next_token(data, pos), path);
  const int height = parse_int(next_token(data, pos), path);
  const int maxval = parse_int(next_token(data, pos), path);
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255) {
    throw Error(ErrorCode::InvalidInput, "unsupported PGM header in " + path.string());
  }
  ++pos;  // single whitespace before raster
  const auto count = static_cast<std::size_t>(width) * height;
  if (data.size() < pos + count) {
    throw Error(ErrorCode::InvalidInput, "truncated PGM raster in " + path.string());
  }
  BinaryMask mask(width, height);
  for (std::size_t i = 0; i < count; ++i) {
    mask.bits[i] = data[pos + i] != 0 ? 1 : 0;
  }
  return mask;
}

void write_gray_pgm(const fs::path& path, int width, int height,
                    const std::vector<std::uint8_t>& pixels) {
  auto out = open_out(path);
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
}

void write_mask_pgm(const fs::path& path, const BinaryMask& mask) {
  std::vector<std::uint8_t> px(mask.bits.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = mask.bits[i] ? 255 : 0;
  write_gray_pgm(path, mask.width, mask.height, px);
}

Heatmap read_heatmap_pfm(const fs::path& path) {
  const std::string data = read_file(path);
  std::size_t pos = 0;
  if (next_token(data, pos) != "Pf") {
    throw Error(ErrorCode::InvalidInput, path.string() + " is not a grayscale PFM");
  }
  const int width = parse_int(next_token(data, pos), path);
  const int height = parse_int(next_token(data, pos), path);
  const std::string scale_token = next_token(data, pos);
  double scale = 0.0;
  try {
    scale = std::stod(scale_token);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidInput, "bad PFM scale in " + path.string());
  }
  if (width <= 0 || height <= 0 || scale == 0.0) {
    throw Error(ErrorCode::InvalidInput, "unsupported PFM header in " + path.string());
  }
  ++pos;
  const auto count = static_cast<std::size_t>(width) * height;
  if (data.size() < pos + count * 4) {
    throw Error(ErrorCode::InvalidInput, "truncated PFM raster in " + path.string());
  }
  const bool little = scale < 0.0;
  const bool swap = little != (std::endian::native == std::endian::little);
  Heatmap h(width, height);
  for (int row = 0; row < height; ++row) {
    // PFM scanlines run bottom to top.
    const std::size_t src_row = static_cast<std::size_t>(height - 1 - row);
    for (int col = 0; col < width; ++col) {
      std::uint32_t bits = 0;
      std::memcpy(&bits, data.data() + pos + (src_row * width + col) * 4, 4);
      if (swap) bits = __builtin_bswap32(bits);
      h.at(col, row) = std::bit_cast<float>(bits);
    }
  }
  return h;
}

void write_heatmap_pfm(const fs::path& path, const Heatmap& heatmap) {
  auto out = open_out(path);
  out << "Pf\n" << heatmap.width << ' ' << heatmap.height << "\n-1.0\n";
  const bool swap = std::endian::native != std::endian::little;
  for (int row = heatmap.height - 1; row >= 0; --row) {
    for (int col = 0; col < heatmap.width; ++col) {
      auto bits = std::bit_cast<std::uint32_t>(heatmap.at(col, row));
      if (swap) bits = __builtin_bswap32(bits);
      out.write(reinterpret_cast<const char*>(&bits), 4);
    }
  }
}

void write_heatmap_png(const fs::path& path, const Heatmap& heatmap) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::vector<png_byte> px(heatmap.values.size());
  for (std::size_t i = 0; i < px.size(); ++i) {
    const float v = std::clamp(heatmap.values[i], 0.0f, 1.0f);
    px[i] = static_cast<png_byte>(std::lround(v * 255.0f));
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(heatmap.width);
  image.height = static_cast<png_uint_32>(heatmap.height);
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, px.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::Io, "cannot write " + path.string() + ": " + msg);
  }
}

std::vector<json> read_json_records(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<json> out;
  try {
    json whole = json::parse(text);
    if (whole.is_array()) {
      for (auto& r : whole) out.push_back(std::move(r));
    } else {
      out.push_back(std::move(whole));
    }
    return out;
  } catch (const json::parse_error&) {
    // fall through to JSON lines
  }
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::InvalidInput,
                  path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidInput, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& value) {
  auto out = open_out(path);
  out << value.dump(2) << '\n';
}

std::vector<CorrespondenceSet> read_correspondences(const fs::path& path) {
  const auto records = read_json_records(path);
  return with_schema_errors(path, [&] {
    std::vector<CorrespondenceSet> links;
    for (const auto& r : records) {
      CorrespondenceSet c;
      c.frame_src = r.at("frame_src").get<int>();
      c.frame_dst = r.at("frame_dst").get<int>();
      for (const auto& p : r.at("pairs")) {
        if (p.size() != 4) {
          throw Error(ErrorCode::InvalidInput,
                      path.string() + ": correspondence pairs are [sx, sy, dx, dy]");
        }
        c.pairs.push_back({point_from_array(p, 0), point_from_array(p, 2)});
      }
      links.push_back(std::move(c));
    }
    return links;
  });
}

json correspondences_to_json(const std::vector<CorrespondenceSet>& links) {
  json arr = json::array();
  for (const auto& c : links) {
    json pairs = json::array();
    for (const auto& p : c.pairs) pairs.push_back({p.src.x, p.src.y, p.dst.x, p.dst.y});
    arr.push_back({{"frame_src", c.frame_src}, {"frame_dst", c.frame_dst}, {"pairs", pairs}});
  }
  return arr;
}

std::map<int, std::vector<BBox>> read_detections(const fs::path& path) {
  const auto records = read_json_records(path);
  return with_schema_errors(path, [&] {
    std::map<int, std::vector<BBox>> frames;
    for (const auto& r : records) {
      auto& boxes = frames[r.at("frame").get<int>()];
      for (const auto& b : r.at("boxes")) {
        const auto name = b.at("label").get<std::string>();
        const auto label = parse_box_label(name);
        if (!label) {
          throw Error(ErrorCode::InvalidInput, path.string() + ": unknown box label " + name);
        }
        const auto& xy = b.at("xyxy");
        BBox box{xy.at(0).get<double>(), xy.at(1).get<double>(), xy.at(2).get<double>(),
                 xy.at(3).get<double>(), *label};
        if (!box.valid()) {
          throw Error(ErrorCode::InvalidInput, path.string() + ": empty box");
        }
        boxes.push_back(box);
      }
    }
    return frames;
  });
}

json detections_to_json(const std::map<int, std::vector<BBox>>& frames) {
  json arr = json::array();
  for (const auto& [frame, boxes] : frames) {
    json jb = json::array();
    for (const auto& b : boxes) {
      jb.push_back({{"label", std::string(box_label_name(b.label))},
                    {"xyxy", {b.x_min, b.y_min, b.x_max, b.y_max}}});
    }
    arr.push_back({{"frame", frame}, {"boxes", jb}});
  }
  return arr;
}

RawTracks read_tracks(const fs::path& path) {
  const json j = read_json(path);
  return with_schema_errors(path, [&] {
    RawTracks t;
    t.fps = j.at("fps").get<double>();
    if (!(t.fps > 0.0)) throw Error(ErrorCode::InvalidInput, path.string() + ": fps must be > 0");
    for (const auto& track : j.at("tracks")) {
      std::vector<Point2> pts;
      for (const auto& p : track) pts.push_back(point_from_array(p));
      if (!t.tracks.empty() && pts.size() != t.tracks.front().size()) {
        throw Error(ErrorCode::InvalidInput, path.string() + ": tracks differ in length");
      }
      t.tracks.push_back(std::move(pts));
    }
    return t;
  });
}

json tracks_to_json(const RawTracks& tracks) {
  json arr = json::array();
  for (const auto& track : tracks.tracks) {
    json jt = json::array();
    for (const auto& p : track) jt.push_back(point_to_json(p));
    arr.push_back(std::move(jt));
  }
  return {{"fps", tracks.fps}, {"tracks", arr}};
}

json point_to_json(Point2 p) { return json::array({p.x, p.y}); }

Point2 point_from_json(const json& j) { return point_from_array(j); }

json trajectory_to_json(const TrajectoryFit& fit) {
  const auto& p = fit.params;
  return {{"theta", p.theta}, {"a", p.a},         {"psi", p.psi},
          {"b", p.b},         {"phi", p.phi},     {"x0", point_to_json(p.x0)},
          {"residual", fit.residual}, {"degenerate", fit.degenerate}};
}

TrajectoryFit trajectory_from_json(const json& j) {
  try {
    TrajectoryFit fit;
    fit.params.theta = j.at("theta").get<double>();
    fit.params.a = j.at("a").get<double>();
    fit.params.psi = j.at("psi").get<double>();
    fit.params.b = j.at("b").get<double>();
    fit.params.phi = j.at("phi").get<double>();
    fit.params.x0 = point_from_json(j.at("x0"));
    fit.residual = j.value("residual", 0.0);
    fit.degenerate = j.value("degenerate", false);
    return fit;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("trajectory JSON: ") + e.what());
  }
}

}  // namespace affpipe::io
