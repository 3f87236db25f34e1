// affpipe: pseudo-label builder, annotation converter and evaluator for
// text-driven affordance data.

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "affpipe/annotation.hpp"
#include "affpipe/evaluation.hpp"
#include "affpipe/io.hpp"
#include "affpipe/pipeline.hpp"
#include "affpipe/server.hpp"
#include "affpipe/synthetic.hpp"

namespace fs = std::filesystem;
using namespace affpipe;

namespace {

struct CommonOptions {
  std::optional<fs::path> config_file;
  std::optional<std::uint64_t> seed;
  std::optional<int> gmm_k;
  std::optional<int> samples;
  std::optional<double> sigma;
  std::optional<double> ransac_threshold;
  std::optional<int> ransac_iterations;
  std::optional<fs::path> lexicon;
  bool preview = false;
};

void add_config_flags(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_file, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Base seed (falls back to AFFPIPE_SEED, then 0)");
  cmd->add_option("--gmm-k", o.gmm_k, "GMM components")->check(CLI::PositiveNumber);
  cmd->add_option("--samples", o.samples, "Points sampled from the GMM")->check(CLI::PositiveNumber);
  cmd->add_option("--sigma", o.sigma, "Heatmap blur sigma in pixels")->check(CLI::PositiveNumber);
  cmd->add_option("--ransac-thresh", o.ransac_threshold, "RANSAC inlier threshold in pixels")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--ransac-iters", o.ransac_iterations, "RANSAC iterations")->check(CLI::PositiveNumber);
  cmd->add_option("--lexicon", o.lexicon, "Tool lexicon, one noun per line")->check(CLI::ExistingFile);
  cmd->add_flag("--preview", o.preview, "Also write an 8-bit PNG of each heatmap");
}

struct Resolved {
  PipelineConfig config;
  std::uint64_t seed = 0;
  int workers = 1;
};

Resolved resolve(const CommonOptions& o) {
  Resolved r;
  json file = json::object();
  if (o.config_file) {
    file = io::read_json(*o.config_file);
    r.config = PipelineConfig::from_json(file);
    if (r.config.lexicon && r.config.lexicon->is_relative()) {
      r.config.lexicon = o.config_file->parent_path() / *r.config.lexicon;
    }
  }
  if (o.gmm_k) r.config.gmm_k = *o.gmm_k;
  if (o.samples) r.config.samples = *o.samples;
  if (o.sigma) r.config.sigma = *o.sigma;
  if (o.ransac_threshold) r.config.ransac_threshold = *o.ransac_threshold;
  if (o.ransac_iterations) r.config.ransac_iterations = *o.ransac_iterations;
  if (o.lexicon) r.config.lexicon = *o.lexicon;
  if (o.preview) r.config.write_preview = true;

  if (o.seed) {
    r.seed = *o.seed;
  } else if (file.contains("seed")) {
    r.seed = file["seed"].get<std::uint64_t>();
  } else if (const char* env = std::getenv("AFFPIPE_SEED")) {
    try {
      r.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidInput, "AFFPIPE_SEED is not an unsigned integer");
    }
  }
  if (file.contains("workers")) r.workers = file["workers"].get<int>();
  return r;
}

AnnotatorServer* g_server = nullptr;

void handle_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudo-label builder and evaluator for affordance data", "affpipe"};
  app.require_subcommand(1);

  // classify
  auto* classify = app.add_subcommand("classify", "Classify an interaction from its description");
  std::string description;
  std::vector<std::string> previous;
  std::optional<fs::path> classify_manifest;
  std::optional<fs::path> classify_lexicon;
  classify->add_option("-d,--description", description, "Action description");
  classify->add_option("-p,--prev", previous, "Preceding descriptions, most recent first");
  classify->add_option("--manifest", classify_manifest, "Classify every clip in a manifest")
      ->check(CLI::ExistingFile);
  classify->add_option("--lexicon", classify_lexicon, "Tool lexicon file")->check(CLI::ExistingFile);

  // build
  auto* build = app.add_subcommand("build", "Build pseudo-label tuples from clip manifests");
  fs::path build_manifest, build_out;
  std::optional<int> workers;
  CommonOptions build_opts;
  build->add_option("--manifest", build_manifest, "Manifest file")->required()->check(CLI::ExistingFile);
  build->add_option("--out", build_out, "Output directory")->required();
  build->add_option("--workers", workers, "Parallel clips")->check(CLI::PositiveNumber);
  add_config_flags(build, build_opts);

  // convert-annotations
  auto* convert = app.add_subcommand("convert-annotations", "Convert manual annotations to tuples");
  fs::path annotations_in, convert_out;
  CommonOptions convert_opts;
  convert->add_option("--annotations", annotations_in, "Annotation JSONL")->required()->check(CLI::ExistingFile);
  convert->add_option("--out", convert_out, "Output directory")->required();
  add_config_flags(convert, convert_opts);

  // eval
  auto* eval = app.add_subcommand("eval", "Score predicted tuples against ground truth");
  fs::path pred_dir, gt_dir, report_path;
  EvalOptions eval_opts;
  eval->add_option("--pred-dir", pred_dir, "Predicted tuple directories")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--gt-dir", gt_dir, "Ground-truth tuple directories")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--out", report_path, "Report JSON")->required();
  eval->add_flag("--normalize-dtw", eval_opts.normalize_dtw, "Report DTW divided by warping path length");
  eval->add_option("--samples", eval_opts.samples, "Trajectory samples for ADE/DTW")->check(CLI::Range(2, 100000));

  // serve-annotator
  auto* serve = app.add_subcommand("serve-annotator", "Serve the annotation tool backend");
  AnnotatorServerOptions server_opts;
  server_opts.annotations_file = "annotations.jsonl";
  serve->add_option("--tasks", server_opts.tasks_file, "Task list JSON")->required()->check(CLI::ExistingFile);
  serve->add_option("--port", server_opts.port, "Port (0 picks a free one)");
  serve->add_option("--host", server_opts.host, "Bind address");
  serve->add_option("--out", server_opts.annotations_file, "Annotation JSONL to append to");
  serve->add_option("--static", server_opts.static_dir, "Built UI directory")->check(CLI::ExistingDirectory);
  serve->add_option("--media", server_opts.media_dir, "Frame image directory")->check(CLI::ExistingDirectory);

  // synth
  auto* synth = app.add_subcommand("synth", "Write synthetic clips with known ground truth");
  fs::path synth_out;
  int synth_clips = 3;
  std::uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--clips", synth_clips, "Number of clips")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "Generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*classify) {
      const ToolLexicon lexicon =
          classify_lexicon ? ToolLexicon::load(*classify_lexicon) : ToolLexicon::builtin();
      if (classify_manifest) {
        json out = json::array();
        for (const auto& src : load_manifest_sources(*classify_manifest)) {
          const auto m = parse_manifest(src.raw, src.base_dir);
          const auto label = classify_interaction(m.description, m.prev_descriptions, lexicon, m.interaction);
          out.push_back({{"clip_id", m.clip_id}, {"interaction", label_to_json(label)}});
        }
        std::cout << out.dump(2) << '\n';
      } else {
        if (description.empty()) throw CLI::RequiredError("--description or --manifest");
        std::cout << label_to_json(classify_interaction(description, previous, lexicon)).dump(2) << '\n';
      }
    } else if (*build) {
      Resolved r = resolve(build_opts);
      if (workers) r.workers = *workers;
      const auto sources = load_manifest_sources(build_manifest);
      if (sources.empty()) throw Error(ErrorCode::ManifestInvalid, "manifest lists no clips");
      const auto summary = run_batch(sources, r.config, r.seed, build_out, r.workers);
      std::cout << "built " << summary.built << " of " << summary.outcomes.size() << " clips\n";
      for (const auto& [reason, n] : summary.skipped) {
        std::cout << "  skipped " << reason << ": " << n << '\n';
      }
    } else if (*convert) {
      const Resolved r = resolve(convert_opts);
      const auto records = read_annotations(annotations_in);
      for (const auto& a : records) {
        const auto t = convert_annotation(a, r.config);
        write_tuple(convert_out / t.clip_id, t, r.config.write_preview);
      }
      std::cout << "converted " << records.size() << " annotations\n";
    } else if (*eval) {
      const json report = evaluate_directories(pred_dir, gt_dir, eval_opts);
      io::write_json(report_path, report);
      std::cout << report["aggregate"].dump(2) << '\n';
    } else if (*serve) {
      AnnotatorServer server(server_opts);
      const int port = server.bind();
      g_server = &server;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      std::cout << "serving annotation backend on http://" << server_opts.host << ':' << port << std::endl;
      server.run();
      g_server = nullptr;
    } else if (*synth) {
      json clips = json::array();
      for (int i = 0; i < synth_clips; ++i) {
        const std::string id = "synthetic_" + std::to_string(i);
        SyntheticOptions o;
        o.motion.theta = 0.4 + 0.3 * i;
        const auto truth = write_synthetic_clip(synth_out / id, id, o, synth_seed + static_cast<std::uint64_t>(i));
        json m = io::read_json(truth.manifest);
        for (const char* key : {"frames_dir", "detections", "correspondences", "mask", "tracks"}) {
          m[key] = id + "/" + m[key].get<std::string>();
        }
        clips.push_back(m);
      }
      io::write_json(synth_out / "manifest.json", json{{"clips", clips}});
      std::cout << "wrote " << synth_clips << " clips and " << (synth_out / "manifest.json").string() << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "affpipe: " << error_code_name(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "affpipe: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
