#pragma once

#include <cassert>
#include <optional>
#include <utility>
#include <variant>

namespace pvdaq {

// Minimal value-or-error carrier. Errors here are expected runtime outcomes
// (bus fault, IO failure); contract violations throw instead.
template <typename T, typename E>
class Result {
 public:
  Result(T value) : data_(std::in_place_index<0>, std::move(value)) {}
  Result(E error) : data_(std::in_place_index<1>, std::move(error)) {}

  bool ok() const { return data_.index() == 0; }
  explicit operator bool() const { return ok(); }

  const T& value() const {
    assert(ok());
    return std::get<0>(data_);
  }
  T& value() {
    assert(ok());
    return std::get<0>(data_);
  }
  const E& error() const {
    assert(!ok());
    return std::get<1>(data_);
  }

  T value_or(T fallback) const { return ok() ? std::get<0>(data_) : std::move(fallback); }

 private:
  std::variant<T, E> data_;
};

// success or error, no payload
template <typename E>
class Status {
 public:
  Status() = default;
  Status(E error) : error_(std::move(error)) {}

  bool ok() const { return !error_.has_value(); }
  explicit operator bool() const { return ok(); }
  const E& error() const {
    assert(!ok());
    return *error_;
  }

 private:
  std::optional<E> error_;
};

}  // namespace pvdaq
