#pragma once

#include <stdexcept>
#include <string>

namespace intertraj {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument shapes or values (wrong dimensions, NaN input, degenerate geometry).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Files that cannot be read: missing, truncated, wrong version, checksum failure.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

// A required artifact is missing (e.g. evaluate before train).
class MissingArtifact : public Error {
 public:
  using Error::Error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace intertraj
