#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

namespace pvdaq {

// Single-writer lock per state directory. flock-based, so a crashed process
// releases it automatically; the PID inside serves `admin stop`.
class InstanceLock {
 public:
  InstanceLock() = default;
  InstanceLock(InstanceLock&& other) noexcept : fd_(other.fd_), path_(std::move(other.path_)) {
    other.fd_ = -1;
  }
  ~InstanceLock() { release(); }

  static std::filesystem::path lock_path(const std::filesystem::path& state_dir) {
    return state_dir / "daq.lock";
  }

  // false: another instance holds the directory
  bool acquire(const std::filesystem::path& state_dir) {
    std::error_code ec;
    std::filesystem::create_directories(state_dir, ec);
    path_ = lock_path(state_dir);
    fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) return false;
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      fd_ = -1;
      return false;
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    if (::ftruncate(fd_, 0) != 0 ||
        ::write(fd_, pid.data(), pid.size()) != static_cast<ssize_t>(pid.size())) {
      release();
      return false;
    }
    return true;
  }

  bool held() const { return fd_ >= 0; }

  void release() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
      fd_ = -1;
    }
  }

  // PID recorded by a running instance, if any
  static std::optional<pid_t> read_pid(const std::filesystem::path& state_dir) {
    std::ifstream in(lock_path(state_dir));
    if (!in) return std::nullopt;
    pid_t pid = 0;
    in >> pid;
    if (pid <= 0) return std::nullopt;
    return pid;
  }

  // true if some process still holds the lock
  static bool is_locked(const std::filesystem::path& state_dir) {
    const int fd = ::open(lock_path(state_dir).c_str(), O_RDWR | O_CLOEXEC);
    if (fd < 0) return false;
    if (::flock(fd, LOCK_EX | LOCK_NB) == 0) {
      ::flock(fd, LOCK_UN);
      ::close(fd);
      return false;
    }
    ::close(fd);
    return true;
  }

 private:
  int fd_ = -1;
  std::filesystem::path path_;
};

}  // namespace pvdaq
