#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace leea {

/// Shape disagreement between tensor arguments. `axis()` names the offending axis.
class DimensionError : public std::invalid_argument {
 public:
  DimensionError(std::string axis, const std::string& what)
      : std::invalid_argument(what), axis_(std::move(axis)) {}

  const std::string& axis() const noexcept { return axis_; }

 private:
  std::string axis_;
};

/// Malformed input file. `offset()` is the byte position where parsing stopped.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::uint64_t offset, const std::string& what)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace leea
