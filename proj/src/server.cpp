#include "affpipe/server.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include "affpipe/annotation.hpp"
#include "affpipe/io.hpp"

// After Eigen: httplib pulls in system headers whose macros break Eigen's
// product kernels.
#include <httplib.h>

namespace affpipe {

struct AnnotatorServer::Impl {
  httplib::Server http;
};

namespace {

nlohmann::json load_tasks(const std::filesystem::path& path) {
  auto tasks = io::read_json(path);
  if (!tasks.is_array()) throw Error(ErrorCode::InvalidInput, "tasks file must hold a JSON array");
  std::set<std::string> ids;
  for (const auto& t : tasks) {
    if (!t.is_object() || !t.contains("id") || !t["id"].is_string()) {
      throw Error(ErrorCode::InvalidInput, "every task needs a string id");
    }
    if (!t.contains("image") && !t.contains("images")) {
      throw Error(ErrorCode::InvalidInput, "task " + t["id"].get<std::string>() + " has no image");
    }
    if (!ids.insert(t["id"].get<std::string>()).second) {
      throw Error(ErrorCode::InvalidInput, "duplicate task id " + t["id"].get<std::string>());
    }
  }
  return tasks;
}

}  // namespace

AnnotatorServer::AnnotatorServer(AnnotatorServerOptions options)
    : options_(std::move(options)),
      tasks_(load_tasks(options_.tasks_file)),
      impl_(std::make_unique<Impl>()) {
  auto& http = impl_->http;
  http.Get("/tasks", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(tasks_.dump(), "application/json");
  });
  http.Post("/annotations", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto n = append(req.body);
      res.set_content(nlohmann::json{{"accepted", n}}.dump(), "application/json");
    } catch (const Error& e) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", std::string(error_code_name(e.code()))},
                                     {"detail", e.what()}}
                          .dump(),
                      "application/json");
    }
  });
  if (options_.media_dir) http.set_mount_point("/media", options_.media_dir->string());
  if (options_.static_dir) http.set_mount_point("/", options_.static_dir->string());
}

AnnotatorServer::~AnnotatorServer() { stop(); }

int AnnotatorServer::bind() {
  auto& http = impl_->http;
  if (options_.port == 0) {
    const int port = http.bind_to_any_port(options_.host);
    if (port < 0) throw Error(ErrorCode::Io, "cannot bind " + options_.host);
    options_.port = port;
    return port;
  }
  if (!http.bind_to_port(options_.host, options_.port)) {
    throw Error(ErrorCode::Io, "cannot bind " + options_.host + ":" + std::to_string(options_.port));
  }
  return options_.port;
}

void AnnotatorServer::run() { impl_->http.listen_after_bind(); }

void AnnotatorServer::stop() {
  if (impl_) impl_->http.stop();
}

void AnnotatorServer::wait_until_ready() const { impl_->http.wait_until_ready(); }

std::size_t AnnotatorServer::append(std::string_view body) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(body)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto record = parse_annotation(nlohmann::json::parse(line));
      lines.push_back(annotation_to_json(record).dump());
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::AnnotationInvalid, "line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::AnnotationInvalid, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (lines.empty()) throw Error(ErrorCode::AnnotationInvalid, "no annotation records in body");

  std::lock_guard lock(write_mutex_);
  if (options_.annotations_file.has_parent_path()) {
    std::filesystem::create_directories(options_.annotations_file.parent_path());
  }
  std::ofstream out(options_.annotations_file, std::ios::app | std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot append to " + options_.annotations_file.string());
  std::string chunk;
  for (const auto& l : lines) chunk += l + '\n';
  out << chunk;
  out.flush();
  return lines.size();
}

}  // namespace affpipe
