#pragma once

#include <stdexcept>
#include <string>

namespace kt {

/// A program parameter falls outside the bounds of the prior.
class CostError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A stream is empty, truncated, or otherwise not produced by the matching encoder.
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A candidate program does not reproduce the chunk it was attached to.
class CandidateMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The decoder was given a different probability model than the encoder used.
class ModelMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kt
