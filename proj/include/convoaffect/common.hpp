// Copyright 2026 the convoaffect authors. Apache 2.0 license.
//
// Shared scalar/matrix aliases and the library-wide error hierarchy.

#pragma once

#include <Eigen/Core>

#include <sstream>
#include <stdexcept>
#include <string>

namespace convoaffect {

template <class Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

// Base class for every error the library throws. CLI maps subclasses to
// exit codes: config/usage -> 1, data -> 2, numeric -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};
struct FormatError : Error {
  using Error::Error;
};
struct DimError : Error {
  using Error::Error;
};
struct VersionError : Error {
  using Error::Error;
};
struct NumericalError : Error {
  using Error::Error;
};
struct ShapeError : Error {
  using Error::Error;
};
struct NotScalar : Error {
  using Error::Error;
};
struct TapeConsumed : Error {
  using Error::Error;
};
struct EmptyAudio : Error {
  using Error::Error;
};
struct EmptyUtterance : Error {
  using Error::Error;
};
struct EmptyDialogue : Error {
  using Error::Error;
};
struct ModeMismatch : Error {
  using Error::Error;
};

inline std::string shape_str(Index rows, Index cols) {
  std::ostringstream os;
  os << "(" << rows << "x" << cols << ")";
  return os.str();
}

}  // namespace convoaffect
