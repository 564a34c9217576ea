#ifndef PCAT_ERRORS_HPP
#define PCAT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pcat {

/// Base class for all pipeline failures. `error_class()` is the stable,
/// machine-readable identifier surfaced by the CLI and in JSON output.
class PcatError : public std::runtime_error {
public:
  PcatError(std::string error_class, const std::string& message)
      : std::runtime_error(message), class_(std::move(error_class)) {}

  const std::string& error_class() const noexcept { return class_; }

private:
  std::string class_;
};

class IoError : public PcatError {
public:
  explicit IoError(const std::string& message) : PcatError("io-error", message) {}
};

class ConfigError : public PcatError {
public:
  explicit ConfigError(const std::string& message) : PcatError("config-invalid", message) {}
};

class GeometryMismatchError : public PcatError {
public:
  explicit GeometryMismatchError(const std::string& message)
      : PcatError("geometry-mismatch", message) {}
};

class SplitFailedError : public PcatError {
public:
  explicit SplitFailedError(const std::string& message)
      : PcatError("split-failed", message) {}
};

class NoBifurcationError : public PcatError {
public:
  explicit NoBifurcationError(const std::string& message)
      : PcatError("no-bifurcation", message) {}
};

class ShortCenterlineError : public PcatError {
public:
  explicit ShortCenterlineError(const std::string& message)
      : PcatError("short-centerline", message) {}
};

class NoCenterlineError : public PcatError {
public:
  explicit NoCenterlineError(const std::string& message)
      : PcatError("no-centerline", message) {}
};

}  // namespace pcat

#endif  // PCAT_ERRORS_HPP
