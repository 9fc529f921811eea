#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "irpamg/mask.hpp"
#include "irpamg/raster.hpp"

namespace irpamg {

enum class AnnotationStatus { Auto, Verified, Refined };

std::string_view to_string(AnnotationStatus s);
AnnotationStatus parse_status(std::string_view name);  // throws DataError

/// Allowed: first write in any state, auto -> auto|refined|verified,
/// refined -> refined|verified. Verified is final.
bool transition_allowed(std::optional<AnnotationStatus> from, AnnotationStatus to);

/// A write the log refuses: illegal status transition or stale expected_seq.
class ConflictError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AnnotationRecord {
  std::string image_id;
  int target_id = 0;
  Mask mask{1, 1};
  std::optional<PixelCoord> seed;
  std::optional<double> r_s;
  AnnotationStatus status = AnnotationStatus::Auto;
  std::size_t edit_history = 1;  // records written for this (image, target), this one included
  std::string created_at;
  std::string updated_at;
  std::uint64_t seq = 0;  // position in the log, 1-based

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

nlohmann::json record_to_json(const AnnotationRecord& r, bool with_seq = true);
/// Throws DataError on schema errors or a malformed mask.
AnnotationRecord record_from_json(const nlohmann::json& j);

using AnnotationKey = std::pair<std::string, int>;
using AnnotationIndex = std::map<AnnotationKey, AnnotationRecord>;

/// Append-only JSONL log with a materialized latest-record index. Writers are
/// serialized; readers share the index.
class AnnotationLog {
 public:
  using Clock = std::function<std::string()>;

  /// Opens or creates the log and replays it. A torn final line left by a crash
  /// is truncated away.
  explicit AnnotationLog(std::filesystem::path file, Clock clock = {});

  /// Assigns seq, timestamps and edit history, then appends. When expected_seq is
  /// set it must equal the seq of the current latest record for the key (0 = none).
  AnnotationRecord append(AnnotationRecord draft, std::optional<std::uint64_t> expected_seq = {});

  /// Appends an imported record keeping its timestamps and edit history.
  AnnotationRecord append_verbatim(AnnotationRecord rec);

  /// Latest record per key, in key order, optionally restricted to one image.
  std::vector<AnnotationRecord> latest(const std::optional<std::string>& image_id = {}) const;
  AnnotationIndex index() const;
  std::uint64_t last_seq() const;
  const std::filesystem::path& file() const { return file_; }

  /// Rebuilds the latest-state map from a log file alone.
  static AnnotationIndex replay(const std::filesystem::path& file);

 private:
  AnnotationRecord write(AnnotationRecord rec);

  std::filesystem::path file_;
  Clock clock_;
  mutable std::shared_mutex mu_;
  AnnotationIndex index_;
  std::uint64_t seq_ = 0;
};

std::string utc_timestamp();

struct ImageEntry {
  std::string id;
  std::filesystem::path file;
  int width = 0;
  int height = 0;
  std::size_t position = 0;
};

enum class ExportFormat { PngDir, RleJsonl };
ExportFormat parse_export_format(std::string_view name);  // throws DataError

/// Dataset root plus annotation log. Images come from root/manifest.jsonl when
/// present, otherwise from the *.png / *.pgm files in root sorted by name.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path root, std::optional<std::filesystem::path> log = {},
                        AnnotationLog::Clock clock = {});

  const std::filesystem::path& root() const { return root_; }
  const std::vector<ImageEntry>& images() const { return images_; }
  const ImageEntry* find(const std::string& id) const;

  /// Source samples, cached after the first read.
  std::shared_ptr<const RawImage> raw(const ImageEntry& entry) const;
  /// Min-max normalized raster, cached.
  std::shared_ptr<const Raster> raster(const ImageEntry& entry) const;

  AnnotationLog& log() { return log_; }
  const AnnotationLog& log() const { return log_; }

  /// Writes the latest records below root/exports/<dest>; returns the directory.
  /// png-dir: {image_id}_{target_id}.png plus manifest.json; rle-jsonl: annotations.jsonl.
  std::filesystem::path export_annotations(ExportFormat format,
                                           const std::optional<std::string>& dest = {});
  /// Appends every record of an rle-jsonl export. Returns the number imported.
  std::size_t import_annotations(const std::filesystem::path& jsonl);

 private:
  std::filesystem::path root_;
  std::vector<ImageEntry> images_;
  std::map<std::string, std::size_t> by_id_;
  AnnotationLog log_;
  mutable std::mutex cache_mu_;
  mutable std::map<std::string, std::shared_ptr<const RawImage>> raw_cache_;
  mutable std::map<std::string, std::shared_ptr<const Raster>> raster_cache_;
  std::mutex export_mu_;
};

}  // namespace irpamg
