#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace affpipe {

struct AnnotatorServerOptions {
  /// JSON array of {"id", "image" | "images", "description", ...}.
  std::filesystem::path tasks_file;
  /// JSONL file that accepted annotations are appended to.
  std::filesystem::path annotations_file;
  /// Built annotation UI, served at "/".
  std::optional<std::filesystem::path> static_dir;
  /// Frame images referenced by tasks, served at "/media".
  std::optional<std::filesystem::path> media_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
};

/// HTTP backend of the annotation tool:
///   GET  /tasks        task list JSON
///   POST /annotations  JSONL body; every line must be a valid
///                      AnnotationRecord or nothing is stored (400)
class AnnotatorServer {
 public:
  explicit AnnotatorServer(AnnotatorServerOptions options);
  ~AnnotatorServer();
  AnnotatorServer(const AnnotatorServer&) = delete;
  AnnotatorServer& operator=(const AnnotatorServer&) = delete;

  /// Binds the socket; port 0 picks a free one. Returns the bound port.
  int bind();
  /// Serves until stop(). Call bind() first.
  void run();
  void stop();
  /// Blocks until the server accepts connections.
  void wait_until_ready() const;

  /// Validates and appends a JSONL payload; returns the number of records
  /// stored. Throws AnnotationInvalid naming the first bad line.
  std::size_t append(std::string_view body);

  const nlohmann::json& tasks() const { return tasks_; }

 private:
  struct Impl;
  AnnotatorServerOptions options_;
  nlohmann::json tasks_;
  std::mutex write_mutex_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace affpipe
