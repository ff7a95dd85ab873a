#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace docingest::service {

/// Append-only JSON-lines log. append() returns only after the line has
/// reached stable storage. A torn final line (crash mid-write) is ignored
/// on read and cut off when the journal is reopened for writing.
class Journal {
 public:
  explicit Journal(std::filesystem::path path);
  ~Journal();
  Journal(const Journal&) = delete;
  Journal& operator=(const Journal&) = delete;

  /// Complete entries in write order.
  std::vector<nlohmann::json> read_all() const;

  /// Writes one entry and fsyncs. Throws std::runtime_error on I/O failure.
  void append(const std::string& line);

  /// Drops every entry (after a snapshot has absorbed them).
  void truncate();

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  void open_for_append();

  std::filesystem::path path_;
  int fd_ = -1;
};

/// Writes `contents` to a temporary sibling, fsyncs it and renames it over
/// `path`, so readers see either the old or the new file.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Whole file as a string. Throws std::runtime_error if it cannot be read.
std::string read_file(const std::filesystem::path& path);

}  // namespace docingest::service
