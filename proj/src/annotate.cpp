#include "irpamg/annotate.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>

#include "irpamg/errors.hpp"
#include "irpamg/manifest.hpp"

namespace irpamg {

std::string_view to_string(AnnotationStatus s) {
  switch (s) {
    case AnnotationStatus::Auto: return "auto";
    case AnnotationStatus::Verified: return "verified";
    case AnnotationStatus::Refined: return "refined";
  }
  return "auto";
}

AnnotationStatus parse_status(std::string_view name) {
  if (name == "auto") return AnnotationStatus::Auto;
  if (name == "verified") return AnnotationStatus::Verified;
  if (name == "refined") return AnnotationStatus::Refined;
  throw DataError("unknown status: " + std::string(name));
}

bool transition_allowed(std::optional<AnnotationStatus> from, AnnotationStatus to) {
  if (!from) return true;
  switch (*from) {
    case AnnotationStatus::Auto: return true;
    case AnnotationStatus::Refined: return to != AnnotationStatus::Auto;
    case AnnotationStatus::Verified: return false;
  }
  return false;
}

nlohmann::json record_to_json(const AnnotationRecord& r, bool with_seq) {
  nlohmann::json j{{"v", 1},
                   {"image_id", r.image_id},
                   {"target_id", r.target_id},
                   {"mask", rle_to_json(r.mask)},
                   {"status", to_string(r.status)},
                   {"edit_history", r.edit_history},
                   {"created_at", r.created_at},
                   {"updated_at", r.updated_at}};
  j["seed"] = r.seed ? nlohmann::json{r.seed->x, r.seed->y} : nlohmann::json(nullptr);
  j["r_s"] = r.r_s ? nlohmann::json(*r.r_s) : nlohmann::json(nullptr);
  if (with_seq) j["seq"] = r.seq;
  return j;
}

AnnotationRecord record_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw DataError("record must be an object");
    AnnotationRecord r;
    r.image_id = j.at("image_id").get<std::string>();
    r.target_id = j.at("target_id").get<int>();
    if (r.target_id < 0) throw DataError("target_id must be >= 0");
    r.mask = rle_from_json(j.at("mask"));
    r.status = parse_status(j.at("status").get<std::string>());
    if (j.contains("seed") && !j["seed"].is_null()) {
      const auto& s = j["seed"];
      if (!s.is_array() || s.size() != 2) throw DataError("seed must be [x, y]");
      r.seed = PixelCoord{s[0].get<int>(), s[1].get<int>()};
    }
    if (j.contains("r_s") && !j["r_s"].is_null()) r.r_s = j["r_s"].get<double>();
    r.edit_history = j.value("edit_history", std::size_t{1});
    r.created_at = j.value("created_at", std::string());
    r.updated_at = j.value("updated_at", std::string());
    r.seq = j.value("seq", std::uint64_t{0});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed annotation record: ") + e.what());
  }
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  const auto len = std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  std::snprintf(buf + len, sizeof buf - len, ".%03dZ", static_cast<int>(ms));
  return buf;
}

namespace {

// Drops a trailing line without a newline: a write torn by a crash.
void trim_torn_tail(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  const std::string data((std::istreambuf_iterator<char>(in)), {});
  if (data.empty() || data.back() == '\n') return;
  const auto cut = data.rfind('\n');
  in.close();
  std::filesystem::resize_file(file, cut == std::string::npos ? 0 : cut + 1);
}

}  // namespace

AnnotationIndex AnnotationLog::replay(const std::filesystem::path& file) {
  AnnotationIndex index;
  std::ifstream in(file);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(file.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    auto rec = record_from_json(j);
    AnnotationKey key{rec.image_id, rec.target_id};
    index.insert_or_assign(std::move(key), std::move(rec));
  }
  return index;
}

AnnotationLog::AnnotationLog(std::filesystem::path file, Clock clock)
    : file_(std::move(file)), clock_(clock ? std::move(clock) : Clock(utc_timestamp)) {
  if (std::filesystem::exists(file_)) {
    trim_torn_tail(file_);
    index_ = replay(file_);
    for (const auto& [key, rec] : index_) seq_ = std::max(seq_, rec.seq);
  } else {
    if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
    std::ofstream touch(file_, std::ios::app);
    if (!touch) throw DataError("cannot create annotation log " + file_.string());
  }
}

AnnotationRecord AnnotationLog::write(AnnotationRecord rec) {
  rec.seq = ++seq_;
  std::ofstream out(file_, std::ios::app | std::ios::binary);
  out << record_to_json(rec).dump() << '\n';
  out.flush();
  if (!out) {
    --seq_;
    throw DataError("cannot append to annotation log " + file_.string());
  }
  index_.insert_or_assign(AnnotationKey{rec.image_id, rec.target_id}, rec);
  return rec;
}

AnnotationRecord AnnotationLog::append(AnnotationRecord draft,
                                       std::optional<std::uint64_t> expected_seq) {
  std::unique_lock lock(mu_);
  const auto it = index_.find({draft.image_id, draft.target_id});
  const AnnotationRecord* prev = it == index_.end() ? nullptr : &it->second;
  if (expected_seq && *expected_seq != (prev ? prev->seq : 0)) {
    throw ConflictError("stale write: expected seq " + std::to_string(*expected_seq) +
                        ", latest is " + std::to_string(prev ? prev->seq : 0));
  }
  if (!transition_allowed(prev ? std::optional(prev->status) : std::nullopt, draft.status)) {
    throw ConflictError("status transition " + std::string(to_string(prev->status)) + " -> " +
                        std::string(to_string(draft.status)) + " is not allowed");
  }
  const std::string now = clock_();
  draft.updated_at = now;
  draft.created_at = prev ? prev->created_at : now;
  draft.edit_history = prev ? prev->edit_history + 1 : 1;
  return write(std::move(draft));
}

AnnotationRecord AnnotationLog::append_verbatim(AnnotationRecord rec) {
  std::unique_lock lock(mu_);
  const auto it = index_.find({rec.image_id, rec.target_id});
  if (it != index_.end() && !transition_allowed(it->second.status, rec.status)) {
    throw ConflictError("imported record would regress the status of " + rec.image_id + "/" +
                        std::to_string(rec.target_id));
  }
  return write(std::move(rec));
}

std::vector<AnnotationRecord> AnnotationLog::latest(const std::optional<std::string>& image_id) const {
  std::shared_lock lock(mu_);
  std::vector<AnnotationRecord> out;
  for (const auto& [key, rec] : index_) {
    if (!image_id || key.first == *image_id) out.push_back(rec);
  }
  return out;
}

AnnotationIndex AnnotationLog::index() const {
  std::shared_lock lock(mu_);
  return index_;
}

std::uint64_t AnnotationLog::last_seq() const {
  std::shared_lock lock(mu_);
  return seq_;
}

ExportFormat parse_export_format(std::string_view name) {
  if (name == "png-dir") return ExportFormat::PngDir;
  if (name == "rle-jsonl") return ExportFormat::RleJsonl;
  throw DataError("unknown export format: " + std::string(name));
}

namespace {

std::vector<std::filesystem::path> list_images(const std::filesystem::path& root) {
  const auto manifest = root / "manifest.jsonl";
  std::vector<std::filesystem::path> out;
  if (std::filesystem::exists(manifest)) {
    for (auto& rec : read_manifest(manifest)) out.push_back(std::move(rec.image));
    return out;
  }
  for (const auto& e : std::filesystem::directory_iterator(root)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".png" || ext == ".pgm")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

SessionStore::SessionStore(std::filesystem::path root, std::optional<std::filesystem::path> log,
                           AnnotationLog::Clock clock)
    : root_(std::move(root)),
      log_(log ? *log : root_ / "annotations.log.jsonl", std::move(clock)) {
  if (!std::filesystem::is_directory(root_)) {
    throw DataError("dataset root is not a directory: " + root_.string());
  }
  for (const auto& file : list_images(root_)) {
    ImageEntry e;
    e.id = image_id(file);
    e.file = file;
    e.position = images_.size();
    const RawImage raw = read_image(file);
    e.width = raw.width;
    e.height = raw.height;
    if (!by_id_.emplace(e.id, e.position).second) {
      throw DataError("duplicate image id " + e.id);
    }
    images_.push_back(std::move(e));
  }
}

const ImageEntry* SessionStore::find(const std::string& id) const {
  const auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &images_[it->second];
}

std::shared_ptr<const RawImage> SessionStore::raw(const ImageEntry& entry) const {
  {
    std::lock_guard lock(cache_mu_);
    if (auto it = raw_cache_.find(entry.id); it != raw_cache_.end()) return it->second;
  }
  auto img = std::make_shared<const RawImage>(read_image(entry.file));
  std::lock_guard lock(cache_mu_);
  return raw_cache_.emplace(entry.id, std::move(img)).first->second;
}

std::shared_ptr<const Raster> SessionStore::raster(const ImageEntry& entry) const {
  {
    std::lock_guard lock(cache_mu_);
    if (auto it = raster_cache_.find(entry.id); it != raster_cache_.end()) return it->second;
  }
  auto r = std::make_shared<const Raster>(normalize(*raw(entry)));
  std::lock_guard lock(cache_mu_);
  return raster_cache_.emplace(entry.id, std::move(r)).first->second;
}

std::filesystem::path SessionStore::export_annotations(ExportFormat format,
                                                       const std::optional<std::string>& dest) {
  std::lock_guard lock(export_mu_);
  const auto base = root_ / "exports";
  std::filesystem::path dir;
  const std::string prefix = format == ExportFormat::PngDir ? "png-dir-" : "rle-jsonl-";
  if (dest) {
    if (dest->empty() || dest->find('/') != std::string::npos || *dest == "." || *dest == "..") {
      throw DataError("export destination must be a plain directory name");
    }
    dir = base / *dest;
  } else {
    for (int n = 1;; ++n) {
      dir = base / (prefix + std::to_string(n));
      if (!std::filesystem::exists(dir)) break;
    }
  }
  std::filesystem::create_directories(dir);

  const auto records = log_.latest();
  if (format == ExportFormat::PngDir) {
    auto files = nlohmann::json::array();
    for (const auto& r : records) {
      const std::string name = r.image_id + "_" + std::to_string(r.target_id) + ".png";
      write_mask_png(r.mask, dir / name);
      files.push_back({{"file", name},
                       {"image_id", r.image_id},
                       {"target_id", r.target_id},
                       {"status", to_string(r.status)}});
    }
    std::ofstream(dir / "manifest.json") << nlohmann::json{{"v", 1}, {"files", files}}.dump(2)
                                          << '\n';
  } else {
    std::ofstream out(dir / "annotations.jsonl", std::ios::binary);
    for (const auto& r : records) out << record_to_json(r, false).dump() << '\n';
  }
  return dir;
}

std::size_t SessionStore::import_annotations(const std::filesystem::path& jsonl) {
  std::ifstream in(jsonl);
  if (!in) throw DataError("cannot open " + jsonl.string());
  std::vector<AnnotationRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      records.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed import line: ") + e.what());
    }
  }
  for (const auto& r : records) {
    const auto* img = find(r.image_id);
    if (!img) throw DataError("imported record names unknown image " + r.image_id);
    if (r.mask.width() != img->width || r.mask.height() != img->height) {
      throw DataError("imported mask size does not match image " + r.image_id);
    }
  }
  for (auto& r : records) log_.append_verbatim(std::move(r));
  return records.size();
}

}  // namespace irpamg
