#ifndef IWEK_REPO_HPP
#define IWEK_REPO_HPP

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iwek/experience.hpp"

namespace iwek {

std::string sha256_hex(std::string_view data);

struct ManifestEntry {
  std::string id;
  std::string scenario_id;
  Fingerprint fingerprint;
  std::string sha256;
  bool operator==(const ManifestEntry&) const = default;
};

// Directory-backed experience store:
//   <root>/manifest.json          ids, fingerprints, checksums, version
//   <root>/experiences/<id>.iwek  one canonical document per experience
// Files are replaced by rename, so a reader always sees a complete manifest.
// Writers hold an exclusive flock on <root>/.lock; readers a shared one.
class ExperienceRepository {
 public:
  // Creates the layout when missing.
  explicit ExperienceRepository(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  // The id is the scenario id. Duplicate ids are rejected unless `overwrite`.
  std::string put(const Experience& e, bool overwrite = false);
  Experience get(std::string_view id) const;
  bool contains(std::string_view id) const;
  std::vector<ManifestEntry> list() const;  // sorted by id
  std::vector<std::pair<std::string, Fingerprint>> scan_fingerprints() const;
  std::vector<std::shared_ptr<const Experience>> load_all() const;  // sorted by id

 private:
  std::vector<ManifestEntry> read_manifest() const;
  void write_manifest(const std::vector<ManifestEntry>& entries) const;
  std::filesystem::path experience_path(std::string_view id) const;

  std::filesystem::path root_;
  mutable std::mutex mutex_;
};

}  // namespace iwek

#endif  // IWEK_REPO_HPP
