#include "iwek/repo.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "iwek/serialize.hpp"

namespace iwek {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

namespace {

class FileLock {
 public:
  FileLock(const fs::path& path, bool exclusive) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw DataError("cannot open lock file '" + path.string() + "'");
    if (::flock(fd_, exclusive ? LOCK_EX : LOCK_SH) != 0) {
      ::close(fd_);
      throw DataError("cannot lock '" + path.string() + "'");
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_id(std::string_view id) {
  if (id.empty() || id.size() > 128 || id.front() == '.' ||
      !std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
      }))
    throw ValidationError("invalid experience id '" + std::string(id) + "'");
}

}  // namespace

ExperienceRepository::ExperienceRepository(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_ / "experiences", ec);
  if (ec) throw DataError("cannot create repository at '" + root_.string() + "': " + ec.message());
  std::lock_guard guard(mutex_);
  FileLock lock(root_ / ".lock", true);
  if (!fs::exists(root_ / "manifest.json")) write_manifest({});
}

fs::path ExperienceRepository::experience_path(std::string_view id) const {
  return root_ / "experiences" / (std::string(id) + ".iwek");
}

std::vector<ManifestEntry> ExperienceRepository::read_manifest() const {
  Json j;
  try {
    j = read_json_file(root_ / "manifest.json");
    check_version(j);
  } catch (const IntegrityError&) {
    throw;
  } catch (const DataError& e) {
    throw IntegrityError(std::string("repository manifest is unreadable: ") + e.what());
  }
  std::vector<ManifestEntry> out;
  try {
    for (const auto& e : j.at("experiences")) {
      ManifestEntry m;
      m.id = e.at("id").get<std::string>();
      m.scenario_id = e.at("scenario_id").get<std::string>();
      m.fingerprint = e.at("fingerprint").get<Fingerprint>();
      m.sha256 = e.at("sha256").get<std::string>();
      out.push_back(std::move(m));
    }
  } catch (const Json::exception& e) {
    throw IntegrityError("repository manifest is malformed: " + std::string(e.what()));
  }
  return out;
}

void ExperienceRepository::write_manifest(const std::vector<ManifestEntry>& entries) const {
  Json list = Json::array();
  for (const auto& e : entries)
    list.push_back({{"id", e.id},
                    {"scenario_id", e.scenario_id},
                    {"fingerprint", e.fingerprint},
                    {"sha256", e.sha256},
                    {"file", "experiences/" + e.id + ".iwek"}});
  Json j = {{"experiences", std::move(list)}, {"version", std::string(kFormatVersion)}};
  write_json_file(root_ / "manifest.json", j);
}

std::string ExperienceRepository::put(const Experience& e, bool overwrite) {
  validate_experience(e);
  check_id(e.scenario_id);
  const std::string text = to_document(e).dump() + "\n";
  const std::string digest = sha256_hex(text);

  std::lock_guard guard(mutex_);
  FileLock lock(root_ / ".lock", true);
  auto entries = read_manifest();
  auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& m) { return m.id == e.scenario_id; });
  if (it != entries.end() && !overwrite)
    throw ValidationError("experience '" + e.scenario_id + "' already exists");

  write_text_file(experience_path(e.scenario_id), text);
  ManifestEntry m{e.scenario_id, e.scenario_id, e.fingerprint, digest};
  if (it != entries.end()) *it = m;
  else entries.push_back(m);
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  write_manifest(entries);
  return e.scenario_id;
}

Experience ExperienceRepository::get(std::string_view id) const {
  std::lock_guard guard(mutex_);
  FileLock lock(root_ / ".lock", false);
  const auto entries = read_manifest();
  auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& m) { return m.id == id; });
  if (it == entries.end()) throw NotFoundError("no experience '" + std::string(id) + "' in repository");
  const std::string text = read_text(experience_path(id));
  if (sha256_hex(text) != it->sha256)
    throw IntegrityError("checksum mismatch for experience '" + std::string(id) + "'");
  Experience e = from_document<Experience>(parse_json(text));
  if (e.fingerprint != it->fingerprint)
    throw IntegrityError("manifest fingerprint differs from experience '" + std::string(id) + "'");
  return e;
}

bool ExperienceRepository::contains(std::string_view id) const {
  const auto entries = list();
  return std::any_of(entries.begin(), entries.end(), [&](const auto& m) { return m.id == id; });
}

std::vector<ManifestEntry> ExperienceRepository::list() const {
  std::lock_guard guard(mutex_);
  FileLock lock(root_ / ".lock", false);
  return read_manifest();
}

std::vector<std::pair<std::string, Fingerprint>> ExperienceRepository::scan_fingerprints() const {
  std::vector<std::pair<std::string, Fingerprint>> out;
  for (const auto& m : list()) out.emplace_back(m.id, m.fingerprint);
  return out;
}

std::vector<std::shared_ptr<const Experience>> ExperienceRepository::load_all() const {
  std::vector<std::shared_ptr<const Experience>> out;
  for (const auto& m : list()) out.push_back(std::make_shared<const Experience>(get(m.id)));
  return out;
}

}  // namespace iwek
