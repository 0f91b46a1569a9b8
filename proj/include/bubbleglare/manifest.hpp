#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bubbleglare {

struct ManifestEntry {
  std::filesystem::path image;
  std::optional<std::filesystem::path> truth;
  int frame = 0;
};

/// Ordered list of frames. Frame indices strictly increase and image paths
/// are non-empty.
class DatasetManifest {
 public:
  DatasetManifest() = default;
  explicit DatasetManifest(std::vector<ManifestEntry> entries);

  const std::vector<ManifestEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// One JSON object per line: {"image": "...", "truth": "...", "frame": 17}.
  /// Relative paths are resolved against `base_dir`. Blank lines are skipped.
  static DatasetManifest parse(std::string_view jsonl, const std::filesystem::path& base_dir = {});
  static DatasetManifest load(const std::filesystem::path& path);

  /// Paths are written relative to `base_dir` when they live under it.
  std::string serialize(const std::filesystem::path& base_dir = {}) const;
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<ManifestEntry> entries_;
};

}  // namespace bubbleglare
