#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wavesal {

// Base of every error the library throws. Each subclass corresponds to one
// failure category that the CLI maps to a stable exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  IoError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class FormatError : public Error { using Error::Error; };
class LengthMismatchError : public Error { using Error::Error; };
class DataError : public Error { using Error::Error; };
class BoundsError : public Error { using Error::Error; };
class GeometryError : public Error { using Error::Error; };
class PartitionError : public Error { using Error::Error; };
class RankError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class MaskError : public Error { using Error::Error; };
class DegenerateSpectrumError : public Error { using Error::Error; };
class VelocityEstimationError : public Error { using Error::Error; };
class NoSignalError : public Error { using Error::Error; };
class EmptyWindowingError : public Error { using Error::Error; };

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : Error(what + " (first bad step " + std::to_string(step) + ")"),
        step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::size_t line = 0,
              std::size_t column = 0)
      : Error(line == 0 ? what
                        : "line " + std::to_string(line) + ", column " +
                              std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace wavesal
