#pragma once

#include <optional>
#include <string>

#include "irpamg/annotate.hpp"
#include "irpamg/pamg.hpp"

namespace httplib {
class Server;
}

namespace irpamg {

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Endpoint logic, independent of the HTTP transport so it can be driven in-process.
class AnnotateService {
 public:
  explicit AnnotateService(SessionStore& store, PamgConfig defaults = {});

  HttpReply list_images() const;
  HttpReply image_view(const std::string& id, const std::optional<std::string>& view,
                       const std::optional<std::string>& crop) const;
  HttpReply grow(const std::string& body) const;
  HttpReply post_annotation(const std::string& body);
  HttpReply get_annotations(const std::optional<std::string>& image_id) const;
  HttpReply export_annotations(const std::string& body);
  HttpReply import_annotations(const std::string& body);

  /// Registers every route on `server`; `static_dir` is mounted at / when set.
  void mount(httplib::Server& server, const std::optional<std::string>& static_dir = {});

 private:
  SessionStore& store_;
  PamgConfig defaults_;
};

/// Blocks serving on host:port until the process is stopped.
void serve(AnnotateService& service, const std::string& host, int port,
           const std::optional<std::string>& static_dir = {});

}  // namespace irpamg
