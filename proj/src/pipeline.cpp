#include "affpipe/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <thread>

#include "affpipe/io.hpp"

namespace affpipe {

namespace {

const std::vector<std::string> kBuiltinTools = {
    "knife",     "spoon",        "fork",        "spatula",     "ladle",
    "whisk",     "tongs",        "peeler",      "grater",      "scissors",
    "chopsticks", "chopstick",   "brush",       "sponge",      "cloth",
    "towel",     "rag",          "scrubber",    "hammer",      "screwdriver",
    "wrench",    "pliers",       "saw",         "drill",       "chisel",
    "trowel",    "shovel",       "spade",       "rake",        "hoe",
    "broom",     "mop",          "pen",         "pencil",      "marker",
    "roller",    "scraper",      "cutter",      "blade",       "razor",
    "needle",    "pestle",      "rolling pin", "cleaver",
    "skewer",    "tweezers",     "strainer",    "colander",    "sieve",
    "funnel",    "squeegee",     "lighter",     "mallet",
    "sandpaper", "crowbar",      "axe",         "hose",        "nozzle",
    "turner",    "masher",       "opener",      "corkscrew",   "paintbrush",
    "toothbrush", "comb",        "stapler",     "ruler",       "trimmer",
};

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalpha(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

// Candidate singular forms for a token, most specific first.
std::vector<std::string> singular_forms(const std::string& w) {
  std::vector<std::string> forms{w};
  auto ends_with = [&](std::string_view suffix) {
    return w.size() > suffix.size() && w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with("ves")) forms.push_back(w.substr(0, w.size() - 3) + "fe");
  if (ends_with("es")) forms.push_back(w.substr(0, w.size() - 2));
  if (ends_with("s")) forms.push_back(w.substr(0, w.size() - 1));
  return forms;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

[[noreturn]] void manifest_error(const std::string& msg) {
  throw Error(ErrorCode::ManifestInvalid, msg);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<fs::path> list_frames(const fs::path& dir) {
  std::vector<fs::path> frames;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file()) frames.push_back(entry.path());
  }
  if (ec) throw Error(ErrorCode::Io, "cannot list frames in " + dir.string());
  std::sort(frames.begin(), frames.end());
  return frames;
}

const CorrespondenceSet& link_for(const std::vector<CorrespondenceSet>& links, int src) {
  for (const auto& c : links) {
    if (c.frame_src == src && c.frame_dst == src + 1) return c;
  }
  throw Error(ErrorCode::InvalidInput, "no correspondences for frames " +
                                           std::to_string(src) + " -> " +
                                           std::to_string(src + 1));
}

bool safe_clip_id(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  return id.find('/') == std::string::npos && id.find('\\') == std::string::npos;
}

BuildOutcome skipped(std::string clip_id, ErrorCode code, std::string detail) {
  BuildOutcome o;
  o.clip_id = std::move(clip_id);
  o.reason = std::string(error_code_name(code));
  o.detail = std::move(detail);
  return o;
}

}  // namespace

std::string_view interaction_kind_name(InteractionKind kind) {
  return kind == InteractionKind::ToolObject ? "tool_object" : "hand_object";
}

std::string_view label_source_name(LabelSource source) {
  switch (source) {
    case LabelSource::External: return "external";
    case LabelSource::LexiconFallback: return "lexicon_fallback";
    case LabelSource::Manual: return "manual";
  }
  return "external";
}

json label_to_json(const InteractionLabel& label) {
  json j = {{"kind", std::string(interaction_kind_name(label.kind))},
            {"source", std::string(label_source_name(label.source))}};
  if (label.kind == InteractionKind::ToolObject) j["tool_name"] = label.tool_name;
  return j;
}

InteractionLabel label_from_json(const json& j, LabelSource source) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidInput, "interaction label must be an object");
  InteractionLabel label;
  label.source = source;
  const auto kind = j.value("kind", std::string{});
  if (kind == "hand_object") {
    label.kind = InteractionKind::HandObject;
  } else if (kind == "tool_object") {
    label.kind = InteractionKind::ToolObject;
  } else {
    throw Error(ErrorCode::InvalidInput, "unknown interaction kind '" + kind + "'");
  }
  if (j.contains("tool_name") && !j["tool_name"].is_null()) {
    label.tool_name = trim(j["tool_name"].get<std::string>());
  }
  if (label.kind == InteractionKind::ToolObject && label.tool_name.empty()) {
    throw Error(ErrorCode::InvalidInput, "tool_object label needs a tool_name");
  }
  if (label.kind == InteractionKind::HandObject && !label.tool_name.empty()) {
    throw Error(ErrorCode::InvalidInput, "hand_object label must not carry a tool_name");
  }
  return label;
}

ToolLexicon::ToolLexicon(std::vector<std::string> entries) {
  for (auto& e : entries) {
    auto w = words_of(e);
    if (w.empty()) continue;
    std::string joined = w.front();
    for (std::size_t i = 1; i < w.size(); ++i) joined += " " + w[i];
    if (std::find(entries_.begin(), entries_.end(), joined) == entries_.end()) {
      entries_.push_back(std::move(joined));
    }
  }
}

const ToolLexicon& ToolLexicon::builtin() {
  static const ToolLexicon lexicon(kBuiltinTools);
  return lexicon;
}

ToolLexicon ToolLexicon::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open lexicon " + path.string());
  std::vector<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    entries.push_back(lower(line));
  }
  return ToolLexicon(std::move(entries));
}

std::optional<std::string> ToolLexicon::find_tool(std::string_view text) const {
  const auto words = words_of(text);
  auto match = [&](const std::string& phrase) -> std::optional<std::string> {
    for (const auto& form : singular_forms(phrase)) {
      if (std::find(entries_.begin(), entries_.end(), form) != entries_.end()) return form;
    }
    return std::nullopt;
  };
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i + 1 < words.size()) {
      if (auto hit = match(words[i] + " " + words[i + 1])) return hit;
    }
    if (auto hit = match(words[i])) return hit;
  }
  return std::nullopt;
}

InteractionLabel classify_interaction(std::string_view description,
                                      std::span<const std::string> previous,
                                      const ToolLexicon& lexicon,
                                      const std::optional<InteractionLabel>& external) {
  if (external) {
    InteractionLabel label = *external;
    label.source = LabelSource::External;
    if (label.kind == InteractionKind::ToolObject && label.tool_name.empty()) {
      throw Error(ErrorCode::InvalidInput, "external tool_object label lacks a tool name");
    }
    if (label.kind == InteractionKind::HandObject) label.tool_name.clear();
    return label;
  }
  if (trim(std::string(description)).empty()) {
    throw Error(ErrorCode::InvalidInput, "action description is empty");
  }
  InteractionLabel label;
  label.source = LabelSource::LexiconFallback;
  auto tool = lexicon.find_tool(description);
  for (std::size_t i = 0; !tool && i < previous.size(); ++i) {
    tool = lexicon.find_tool(previous[i]);
  }
  if (tool) {
    label.kind = InteractionKind::ToolObject;
    label.tool_name = *tool;
  }
  return label;
}

json PipelineConfig::to_json() const {
  json j = {{"gmm_k", gmm_k},
            {"gmm_max_iters", gmm_max_iters},
            {"samples", samples},
            {"sigma", sigma},
            {"ransac_threshold", ransac_threshold},
            {"ransac_iterations", ransac_iterations},
            {"track_window", track_window},
            {"preview", write_preview}};
  if (lexicon) j["lexicon"] = lexicon->string();
  return j;
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidInput, "config must be a JSON object");
  PipelineConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "gmm_k") c.gmm_k = value.get<int>();
      else if (key == "gmm_max_iters") c.gmm_max_iters = value.get<int>();
      else if (key == "samples") c.samples = value.get<int>();
      else if (key == "sigma") c.sigma = value.get<double>();
      else if (key == "ransac_threshold") c.ransac_threshold = value.get<double>();
      else if (key == "ransac_iterations") c.ransac_iterations = value.get<int>();
      else if (key == "track_window") c.track_window = value.get<double>();
      else if (key == "preview") c.write_preview = value.get<bool>();
      else if (key == "lexicon") c.lexicon = fs::path(value.get<std::string>());
      else if (key == "seed" || key == "workers") continue;  // read by the CLI
      else throw Error(ErrorCode::InvalidInput, "unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("config: ") + e.what());
  }
  if (c.gmm_k < 1 || c.samples < 1 || !(c.sigma > 0.0) || !(c.ransac_threshold > 0.0) ||
      c.ransac_iterations < 1 || c.gmm_max_iters < 0 || !(c.track_window > 0.0)) {
    throw Error(ErrorCode::InvalidInput, "config values out of range");
  }
  return c;
}

int ClipManifest::obs_frame() const { return static_cast<int>(std::lround(t_obs * fps)); }
int ClipManifest::inter_frame() const { return static_cast<int>(std::lround(t_inter * fps)); }

ClipManifest parse_manifest(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) manifest_error("manifest entry must be a JSON object");
  ClipManifest m;
  auto resolve = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string()) {
      manifest_error(std::string("manifest field '") + key + "' missing or not a string");
    }
    fs::path p = j[key].get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    return p.lexically_normal();
  };
  try {
    m.clip_id = j.at("clip_id").get<std::string>();
    m.t_obs = j.at("t_obs").get<double>();
    m.t_inter = j.at("t_inter").get<double>();
    m.fps = j.at("fps").get<double>();
    m.description = j.at("description").get<std::string>();
    if (j.contains("prev_descriptions")) {
      m.prev_descriptions = j["prev_descriptions"].get<std::vector<std::string>>();
    }
    if (j.contains("interaction") && !j["interaction"].is_null()) {
      m.interaction = label_from_json(j["interaction"], LabelSource::External);
    }
  } catch (const json::exception& e) {
    manifest_error(std::string("manifest: ") + e.what());
  } catch (const Error& e) {
    manifest_error(std::string("manifest: ") + e.what());
  }
  m.frames_dir = resolve("frames_dir");
  m.detections = resolve("detections");
  m.correspondences = resolve("correspondences");
  m.mask = resolve("mask");
  m.tracks = resolve("tracks");
  return m;
}

void validate_manifest(const ClipManifest& m) {
  if (!safe_clip_id(m.clip_id)) manifest_error("clip_id '" + m.clip_id + "' is not a valid directory name");
  if (!(m.fps > 0.0)) manifest_error("fps must be positive");
  if (!(m.t_obs >= 0.0) || !(m.t_obs < m.t_inter)) manifest_error("need 0 <= t_obs < t_inter");
  if (trim(m.description).empty()) manifest_error("description is empty");
  if (m.prev_descriptions.size() > 2) manifest_error("at most two preceding descriptions");
  if (!fs::is_directory(m.frames_dir)) manifest_error("frames_dir " + m.frames_dir.string() + " does not exist");
  for (const auto* p : {&m.detections, &m.correspondences, &m.mask, &m.tracks}) {
    if (!fs::is_regular_file(*p)) manifest_error("referenced file " + p->string() + " does not exist");
  }
}

json manifest_to_json(const ClipManifest& m) {
  json j = {{"clip_id", m.clip_id},
            {"frames_dir", m.frames_dir.string()},
            {"t_obs", m.t_obs},
            {"t_inter", m.t_inter},
            {"fps", m.fps},
            {"description", m.description},
            {"prev_descriptions", m.prev_descriptions},
            {"detections", m.detections.string()},
            {"correspondences", m.correspondences.string()},
            {"mask", m.mask.string()},
            {"tracks", m.tracks.string()}};
  if (m.interaction) j["interaction"] = label_to_json(*m.interaction);
  return j;
}

std::vector<ManifestSource> load_manifest_sources(const fs::path& path) {
  const auto base = path.parent_path();
  std::vector<ManifestSource> out;
  for (auto& record : io::read_json_records(path)) {
    if (record.is_object() && record.contains("clips") && record["clips"].is_array()) {
      for (auto& clip : record["clips"]) out.push_back({clip, base});
    } else {
      out.push_back({std::move(record), base});
    }
  }
  return out;
}

void write_tuple(const fs::path& dir, const DatasetTuple& t, bool preview) {
  fs::create_directories(dir);
  io::write_heatmap_pfm(dir / kHeatmapFile, t.heatmap);
  if (preview) io::write_heatmap_png(dir / kPreviewFile, t.heatmap);
  io::write_json(dir / kTrajectoryFile, io::trajectory_to_json(t.trajectory));
  json j = {{"clip_id", t.clip_id},
            {"image", t.image},
            {"description", t.description},
            {"heatmap", kHeatmapFile},
            {"trajectory", kTrajectoryFile},
            {"interaction", label_to_json(t.interaction)},
            {"frame_size", {t.width, t.height}},
            {"provenance", t.provenance}};
  if (!t.keypoints.empty()) {
    json kp = json::array();
    for (const auto& p : t.keypoints) kp.push_back(io::point_to_json(p));
    j["keypoints"] = kp;
  }
  io::write_json(dir / kTupleFile, j);
}

DatasetTuple read_tuple(const fs::path& dir) {
  const json j = io::read_json(dir / kTupleFile);
  DatasetTuple t;
  try {
    t.clip_id = j.at("clip_id").get<std::string>();
    t.image = j.at("image").get<std::string>();
    t.description = j.at("description").get<std::string>();
    const auto& label = j.at("interaction");
    LabelSource source = LabelSource::External;
    const auto src = label.value("source", std::string("external"));
    if (src == "lexicon_fallback") source = LabelSource::LexiconFallback;
    else if (src == "manual") source = LabelSource::Manual;
    t.interaction = label_from_json(label, source);
    t.width = j.at("frame_size").at(0).get<int>();
    t.height = j.at("frame_size").at(1).get<int>();
    t.provenance = j.value("provenance", json::object());
    if (j.contains("keypoints")) {
      for (const auto& p : j["keypoints"]) t.keypoints.push_back(io::point_from_json(p));
    }
    t.heatmap = io::read_heatmap_pfm(dir / j.at("heatmap").get<std::string>());
    t.trajectory = io::trajectory_from_json(io::read_json(dir / j.at("trajectory").get<std::string>()));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, (dir / kTupleFile).string() + ": " + e.what());
  }
  return t;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view key, std::uint64_t stream) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : key) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(base ^ h) + stream);
}

BuildOutcome build_tuple(const ClipManifest& m, const PipelineConfig& config,
                         std::uint64_t seed, const fs::path& out_dir) {
  try {
    validate_manifest(m);
  } catch (const Error& e) {
    return skipped(m.clip_id, e.code(), e.what());
  }

  const std::uint64_t clip_seed = derive_seed(seed, m.clip_id);
  try {
    const auto frames = list_frames(m.frames_dir);
    if (frames.empty()) {
      throw Error(ErrorCode::Io, "frames directory " + m.frames_dir.string() + " is empty");
    }
    const int obs = m.obs_frame();
    const int inter = m.inter_frame();
    if (obs >= static_cast<int>(frames.size())) {
      throw Error(ErrorCode::Io, "observation frame " + std::to_string(obs) +
                                     " is missing from " + m.frames_dir.string());
    }

    std::optional<ToolLexicon> custom;
    if (config.lexicon) custom = ToolLexicon::load(*config.lexicon);
    const InteractionLabel label = classify_interaction(
        m.description, m.prev_descriptions, custom ? *custom : ToolLexicon::builtin(),
        m.interaction);

    const auto detections = io::read_detections(m.detections);
    const auto links = io::read_correspondences(m.correspondences);
    const BinaryMask mask = io::read_mask_pgm(m.mask);
    const io::RawTracks raw = io::read_tracks(m.tracks);
    const int width = mask.width;
    const int height = mask.height;

    // Track frames within the window after the interaction frame.
    TrackSet tracks;
    if (raw.tracks.empty()) throw Error(ErrorCode::InvalidInput, "track file has no tracks");
    const std::size_t available = raw.tracks.front().size();
    for (std::size_t j = 0; j < available; ++j) {
      const double t = static_cast<double>(j) / raw.fps;
      if (t > config.track_window + 1e-9) break;
      tracks.timestamps.push_back(t / config.track_window);
    }
    for (const auto& track : raw.tracks) {
      if (track.size() != available) {
        throw Error(ErrorCode::InvalidInput, "tracks have unequal lengths");
      }
      tracks.tracks.emplace_back(track.begin(), track.begin() + static_cast<long>(tracks.steps()));
    }
    const int track_frames = static_cast<int>(tracks.steps());

    // to_obs[i] maps frame obs + i into the observation frame.
    const int last_frame = inter + track_frames - 1;
    std::vector<Homography> to_obs{Homography()};
    Homography forward;
    json inliers = json::array();
    for (int k = obs; k < last_frame; ++k) {
      std::vector<BBox> boxes;
      if (auto it = detections.find(k); it != detections.end()) {
        for (const auto& b : it->second) boxes.push_back(b.clamped(width, height));
      }
      const auto filtered = filter_correspondences(link_for(links, k), boxes);
      const auto fit = ransac_homography(filtered, config.ransac_threshold,
                                         config.ransac_iterations,
                                         derive_seed(clip_seed, "ransac", static_cast<std::uint64_t>(k)));
      inliers.push_back(fit.inliers.size());
      const std::array<Homography, 2> step{forward, fit.model};
      forward = chain_homographies(step);
      to_obs.push_back(forward.inverse());
    }
    const Homography& inter_to_obs = to_obs[static_cast<std::size_t>(inter - obs)];

    // Contact region: mask intersected with the object box that overlaps it most.
    std::vector<Point2> region;
    if (auto it = detections.find(inter); it != detections.end()) {
      for (const auto& b : it->second) {
        if (b.label != BoxLabel::Object) continue;
        try {
          auto pts = intersect_mask_bbox(mask, b.clamped(width, height));
          if (pts.size() > region.size()) region = std::move(pts);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::EmptyIntersection) throw;
        }
      }
    }
    if (region.empty()) {
      throw Error(ErrorCode::EmptyIntersection,
                  "no object box in frame " + std::to_string(inter) + " intersects the mask");
    }
    const auto projected = project_region(region, inter_to_obs, width, height);
    const int k = std::min<int>(config.gmm_k, static_cast<int>(projected.size()));
    const auto gmm = fit_gmm(projected, k, config.gmm_max_iters, derive_seed(clip_seed, "gmm"));
    const auto contacts = sample_contact_points(gmm, config.samples, derive_seed(clip_seed, "sample"));

    std::vector<Homography> per_frame(to_obs.begin() + (inter - obs), to_obs.end());
    const TrackSet in_obs = project_tracks(tracks, per_frame);
    const TrajectoryFit trajectory = fit_trajectory(in_obs, derive_seed(clip_seed, "trajectory"));
    if (trajectory.degenerate) {
      throw Error(ErrorCode::DegenerateTrack, "all tracked points coincide");
    }

    DatasetTuple t;
    t.clip_id = m.clip_id;
    t.image = frames[static_cast<std::size_t>(obs)].lexically_normal().string();
    t.description = m.description;
    t.interaction = label;
    t.width = width;
    t.height = height;
    t.heatmap = rasterize_heatmap(contacts, width, height, config.sigma);
    t.trajectory = trajectory;
    t.provenance = {{"seed", seed},
                    {"clip_seed", clip_seed},
                    {"config", config.to_json()},
                    {"gmm_k_used", k},
                    {"frame_obs", obs},
                    {"frame_inter", inter},
                    {"track_frames", track_frames},
                    {"link_inliers", inliers},
                    {"contact_pixels", region.size()},
                    {"projected_pixels", projected.size()}};
    write_tuple(out_dir / m.clip_id, t, config.write_preview);

    BuildOutcome o;
    o.clip_id = m.clip_id;
    o.tuple = std::move(t);
    return o;
  } catch (const Error& e) {
    return skipped(m.clip_id, e.code(), e.what());
  } catch (const fs::filesystem_error& e) {
    return skipped(m.clip_id, ErrorCode::Io, e.what());
  }
}

BuildOutcome build_tuple(const ManifestSource& source, const PipelineConfig& config,
                         std::uint64_t seed, const fs::path& out_dir) {
  ClipManifest m;
  try {
    m = parse_manifest(source.raw, source.base_dir);
  } catch (const Error& e) {
    std::string id;
    if (source.raw.is_object() && source.raw.contains("clip_id") && source.raw["clip_id"].is_string()) {
      id = source.raw["clip_id"].get<std::string>();
    }
    return skipped(id, e.code(), e.what());
  }
  return build_tuple(m, config, seed, out_dir);
}

json BatchSummary::to_json() const {
  json clips = json::array();
  for (const auto& o : outcomes) {
    json c = {{"clip_id", o.clip_id}, {"status", o.built() ? "built" : "skipped"}};
    if (!o.built()) {
      c["reason"] = o.reason;
      c["detail"] = o.detail;
    }
    clips.push_back(std::move(c));
  }
  return {{"total", outcomes.size()}, {"built", built}, {"skipped", skipped}, {"clips", clips}};
}

BatchSummary run_batch(std::span<const ManifestSource> sources,
                       const PipelineConfig& config, std::uint64_t seed,
                       const fs::path& out_dir, int workers) {
  BatchSummary summary;
  summary.outcomes.resize(sources.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < sources.size(); i = next++) {
      summary.outcomes[i] = build_tuple(sources[i], config, seed, out_dir);
      if (summary.outcomes[i].clip_id.empty()) {
        summary.outcomes[i].clip_id = "#" + std::to_string(i);
      }
    }
  };
  const int n = std::clamp(workers, 1, std::max<int>(1, static_cast<int>(sources.size())));
  std::vector<std::jthread> pool;
  for (int w = 1; w < n; ++w) pool.emplace_back(work);
  work();
  pool.clear();

  for (const auto& o : summary.outcomes) {
    if (o.built()) ++summary.built;
    else ++summary.skipped[o.reason];
  }
  fs::create_directories(out_dir);
  io::write_json(out_dir / "summary.json", summary.to_json());
  return summary;
}

}  // namespace affpipe
