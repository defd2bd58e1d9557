#pragma once

#include <stdexcept>
#include <string>

namespace slv {

/// Configuration rejected: bad value, unknown key, violated relation.
/// The message always names the offending field/relation.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// On-disk data malformed (magic, version, truncation, CSV shape).
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem failure (open/read/write).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Demodulation window landed on (near-)dark signal.
class LowSignalError : public std::runtime_error {
 public:
  explicit LowSignalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace slv
