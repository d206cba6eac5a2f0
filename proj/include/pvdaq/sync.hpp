#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "pvdaq/csv_store.hpp"

namespace pvdaq {

// Remote archive target, modeled as a name-to-content store. Production binds
// this to a mounted or tool-synced directory; tests toggle availability.
class RemoteTarget {
 public:
  virtual ~RemoteTarget() = default;
  virtual bool available() = 0;
  // content fingerprint of the stored object, nullopt when absent
  virtual std::optional<std::uint64_t> fingerprint(const std::string& name) = 0;
  virtual bool store(const std::filesystem::path& local, const std::string& name) = 0;
};

// FNV-1a over the file bytes; cheap and stable for change detection
inline std::optional<std::uint64_t> file_fingerprint(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::uint64_t h = 1469598103934665603ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!in) break;
  }
  return h;
}

class LocalDirRemote final : public RemoteTarget {
 public:
  explicit LocalDirRemote(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void set_available(bool up) { available_ = up; }
  bool available() override { return available_; }

  std::optional<std::uint64_t> fingerprint(const std::string& name) override {
    if (!available_) return std::nullopt;
    return file_fingerprint(dir_ / name);
  }

  bool store(const std::filesystem::path& local, const std::string& name) override {
    if (!available_) return false;
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    std::filesystem::copy_file(local, dir_ / name,
                               std::filesystem::copy_options::overwrite_existing, ec);
    return !ec;
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  bool available_ = true;
};

struct SyncReport {
  bool remote_available = true;
  int transferred = 0;
  int skipped = 0;
  int failed = 0;
};

// Copies new or changed daily CSVs to the remote. Idempotent: a second run
// with no changes transfers nothing. Never blocks acquisition; failures are
// reported and retried on the next invocation.
inline SyncReport sync_archives(const std::filesystem::path& archive_dir,
                                RemoteTarget& remote) {
  SyncReport report;
  if (!remote.available()) {
    report.remote_available = false;
    return report;
  }
  for (const auto& file : list_archive_files(archive_dir)) {
    const std::string name = file.filename().string();
    const auto local_fp = file_fingerprint(file);
    if (!local_fp) {
      ++report.failed;
      continue;
    }
    const auto remote_fp = remote.fingerprint(name);
    if (remote_fp && *remote_fp == *local_fp) {
      ++report.skipped;
      continue;
    }
    if (remote.store(file, name)) ++report.transferred;
    else ++report.failed;
  }
  return report;
}

}  // namespace pvdaq
