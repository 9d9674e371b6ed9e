#pragma once

#include <stdexcept>
#include <string>

namespace dfalab {

/// Base class for all errors raised by the library. `tag()` is a stable
/// machine-readable identifier used by the CLI when emitting error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string tag, const std::string& msg)
      : std::runtime_error(msg), tag_(std::move(tag)) {}
  const std::string& tag() const { return tag_; }

 private:
  std::string tag_;
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& msg) : Error("dimension", msg) {}
};

struct ParameterError : Error {
  explicit ParameterError(const std::string& msg) : Error("parameter", msg) {}
};

struct IndexError : Error {
  explicit IndexError(const std::string& msg) : Error("index", msg) {}
};

struct LengthError : Error {
  explicit LengthError(const std::string& msg) : Error("length", msg) {}
};

struct ConsistencyError : Error {
  explicit ConsistencyError(const std::string& msg) : Error("consistency", msg) {}
};

struct UsageError : Error {
  explicit UsageError(const std::string& msg) : Error("usage", msg) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& msg) : Error("numeric", msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error("io", msg) {}
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& msg) : Error("validation", msg) {}
};

struct DegenerateFitError : Error {
  explicit DegenerateFitError(const std::string& msg) : Error("degenerate_fit", msg) {}
};

struct SweepError : Error {
  explicit SweepError(const std::string& msg) : Error("sweep", msg) {}
};

}  // namespace dfalab
