#include "irpamg/service.hpp"

#include <httplib.h>

#include "irpamg/enhance.hpp"
#include "irpamg/errors.hpp"
#include "irpamg/grow_api.hpp"

namespace irpamg {

namespace {

HttpReply json_reply(int status, const nlohmann::json& body) {
  return {status, "application/json", body.dump()};
}

HttpReply error_reply(int status, std::string_view code, std::string_view message) {
  return json_reply(status, {{"v", 1}, {"error", {{"code", code}, {"message", message}}}});
}

std::optional<nlohmann::json> parse_body(const std::string& body) {
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

}  // namespace

AnnotateService::AnnotateService(SessionStore& store, PamgConfig defaults)
    : store_(store), defaults_(defaults) {
  defaults_.validate();
}

HttpReply AnnotateService::list_images() const {
  auto images = nlohmann::json::array();
  for (const auto& e : store_.images()) {
    images.push_back(
        {{"id", e.id}, {"width", e.width}, {"height", e.height}, {"position", e.position}});
  }
  return json_reply(200, {{"v", 1}, {"images", images}});
}

HttpReply AnnotateService::image_view(const std::string& id, const std::optional<std::string>& view,
                                      const std::optional<std::string>& crop_text) const {
  const auto* entry = store_.find(id);
  if (!entry) return error_reply(404, "unknown_image", "no image with id " + id);
  View v = View::Raw;
  std::optional<CropRect> rect;
  try {
    if (view) v = parse_view(*view);
    if (crop_text) {
      rect = clip_crop(parse_crop(*crop_text), entry->width, entry->height);
      if (!rect) return error_reply(400, "bad_crop", "crop lies outside the image");
    }
  } catch (const std::invalid_argument& e) {
    return error_reply(400, "bad_request", e.what());
  }
  const auto bytes = render_view_png(*store_.raw(*entry), v, rect);
  return {200, "image/png", std::string(bytes.begin(), bytes.end())};
}

HttpReply AnnotateService::grow(const std::string& body) const {
  const auto j = parse_body(body);
  if (!j || !j->is_object()) return error_reply(400, "bad_request", "body must be a JSON object");
  if (!j->contains("image_id") || !(*j)["image_id"].is_string()) {
    return error_reply(400, "bad_request", "image_id is required");
  }
  const auto* entry = store_.find((*j)["image_id"].get<std::string>());
  if (!entry) return error_reply(404, "unknown_image", "no such image");
  GrowRequest req;
  PamgConfig cfg;
  try {
    req = grow_request_from_json(*j);
    cfg = resolve_config(req, defaults_);
  } catch (const std::invalid_argument& e) {
    return error_reply(400, "bad_request", e.what());
  }
  const auto raster = store_.raster(*entry);
  if (!raster->contains(req.seed)) {
    return error_reply(422, "seed_out_of_bounds", "seed lies outside the image");
  }
  try {
    return json_reply(200, grow_response_json(generate_mask(*raster, req.seed, cfg)));
  } catch (const NoEnergyPeak& e) {
    return error_reply(409, "no_energy_peak", e.what());
  }
}

HttpReply AnnotateService::post_annotation(const std::string& body) {
  const auto j = parse_body(body);
  if (!j || !j->is_object()) return error_reply(400, "bad_request", "body must be a JSON object");
  AnnotationRecord rec;
  std::optional<std::uint64_t> expected;
  try {
    rec = record_from_json(*j);
    if (j->contains("expected_seq") && !(*j)["expected_seq"].is_null()) {
      expected = (*j)["expected_seq"].get<std::uint64_t>();
    }
  } catch (const DataError& e) {
    return error_reply(400, "bad_request", e.what());
  } catch (const nlohmann::json::exception& e) {
    return error_reply(400, "bad_request", e.what());
  }
  const auto* entry = store_.find(rec.image_id);
  if (!entry) return error_reply(404, "unknown_image", "no image with id " + rec.image_id);
  if (rec.mask.width() != entry->width || rec.mask.height() != entry->height) {
    return error_reply(400, "bad_mask", "mask size does not match the image");
  }
  try {
    return json_reply(200, record_to_json(store_.log().append(std::move(rec), expected)));
  } catch (const ConflictError& e) {
    return error_reply(409, "conflict", e.what());
  }
}

HttpReply AnnotateService::get_annotations(const std::optional<std::string>& image_id) const {
  if (image_id && !store_.find(*image_id)) {
    return error_reply(404, "unknown_image", "no image with id " + *image_id);
  }
  auto out = nlohmann::json::array();
  for (const auto& r : store_.log().latest(image_id)) out.push_back(record_to_json(r));
  return json_reply(200, {{"v", 1}, {"records", out}});
}

HttpReply AnnotateService::export_annotations(const std::string& body) {
  const auto j = parse_body(body);
  if (!j || !j->is_object() || !j->contains("format") || !(*j)["format"].is_string()) {
    return error_reply(400, "bad_request", "format is required");
  }
  try {
    std::optional<std::string> dest;
    if (j->contains("dest") && (*j)["dest"].is_string()) dest = (*j)["dest"].get<std::string>();
    const auto format = parse_export_format((*j)["format"].get<std::string>());
    const auto dir = store_.export_annotations(format, dest);
    return json_reply(200, {{"v", 1},
                            {"path", dir.string()},
                            {"count", store_.log().latest().size()}});
  } catch (const DataError& e) {
    return error_reply(400, "bad_request", e.what());
  }
}

HttpReply AnnotateService::import_annotations(const std::string& body) {
  const auto j = parse_body(body);
  if (!j || !j->is_object() || !j->contains("path") || !(*j)["path"].is_string()) {
    return error_reply(400, "bad_request", "path is required");
  }
  std::filesystem::path p = (*j)["path"].get<std::string>();
  if (p.is_relative()) p = store_.root() / p;
  if (!std::filesystem::is_regular_file(p)) return error_reply(404, "not_found", p.string());
  try {
    const auto n = store_.import_annotations(p);
    return json_reply(200, {{"v", 1}, {"imported", n}});
  } catch (const DataError& e) {
    return error_reply(400, "bad_request", e.what());
  } catch (const ConflictError& e) {
    return error_reply(409, "conflict", e.what());
  }
}

namespace {

void apply(httplib::Response& res, const HttpReply& r) {
  res.status = r.status;
  res.set_content(r.body, r.content_type.c_str());
}

std::optional<std::string> param(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  return req.get_param_value(key);
}

}  // namespace

void AnnotateService::mount(httplib::Server& server, const std::optional<std::string>& static_dir) {
  server.Get("/images", [this](const httplib::Request&, httplib::Response& res) {
    apply(res, list_images());
  });
  server.Get(R"(/images/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    apply(res, image_view(req.matches[1], param(req, "view"), param(req, "crop")));
  });
  server.Post("/grow", [this](const httplib::Request& req, httplib::Response& res) {
    apply(res, grow(req.body));
  });
  server.Post("/annotations", [this](const httplib::Request& req, httplib::Response& res) {
    apply(res, post_annotation(req.body));
  });
  server.Get("/annotations", [this](const httplib::Request& req, httplib::Response& res) {
    apply(res, get_annotations(param(req, "image_id")));
  });
  server.Post("/export", [this](const httplib::Request& req, httplib::Response& res) {
    apply(res, export_annotations(req.body));
  });
  server.Post("/import", [this](const httplib::Request& req, httplib::Response& res) {
    apply(res, import_annotations(req.body));
  });
  server.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
          std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          what = e.what();
        } catch (...) {
        }
        apply(res, error_reply(500, "internal", what));
      });
  if (static_dir) server.set_mount_point("/", *static_dir);
}

void serve(AnnotateService& service, const std::string& host, int port,
           const std::optional<std::string>& static_dir) {
  httplib::Server server;
  service.mount(server, static_dir);
  if (!server.listen(host, port)) {
    throw DataError("cannot listen on " + host + ":" + std::to_string(port));
  }
}

}  // namespace irpamg
