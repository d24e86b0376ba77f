#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace secimg {

// Root of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad caller input: malformed channel specs, invalid parameters.
class UsageError : public Error {
 public:
  using Error::Error;
};

// The input data itself is unusable (corrupt sample, inconsistent labels).
class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class MalformedPe : public DataError {
 public:
  using DataError::DataError;
};

class MalformedBytesLine : public DataError {
 public:
  MalformedBytesLine(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class AsmBufferMismatch : public DataError {
 public:
  using DataError::DataError;
};

class InvalidSize : public UsageError {
 public:
  using UsageError::UsageError;
};

class EmptyDataset : public DataError {
 public:
  using DataError::DataError;
};

class DuplicateSampleId : public DataError {
 public:
  using DataError::DataError;
};

class UnlabeledSample : public DataError {
 public:
  using DataError::DataError;
};

class DimensionMismatch : public DataError {
 public:
  using DataError::DataError;
};

class IdMismatch : public DataError {
 public:
  using DataError::DataError;
};

class HeterogeneousChannels : public DataError {
 public:
  using DataError::DataError;
};

class ShapeMismatch : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace secimg
