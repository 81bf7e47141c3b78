#pragma once

#include <stdexcept>
#include <string>

namespace qdlab {

/// Iterative solver failed to reach its residual target.
class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested spectral cut falls inside a (near) degenerate cluster.
class DegenerateCut : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A builder precondition (proportionality, commutation) does not hold.
class PreconditionViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Layout dimension exceeds the configured cap.
class ResourceLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qdlab
