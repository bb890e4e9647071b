#pragma once

#include <stdexcept>
#include <string>

namespace polyzero {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Input data does not describe a valid lattice polytope (empty vertex set,
/// coordinates outside the dilated standard simplex, bad dimensions).
class InvalidPolytopeError : public Error {
 public:
  using Error::Error;
};

/// The polytope is not simple; analysis routines that need a simple normal
/// fan refuse to run on it.
class NonSimplePolytopeError : public Error {
 public:
  using Error::Error;
};

/// A requested enumeration (lattice points, kernel terms) exceeds the hard
/// size guard.
class EnumerationLimitError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the domain of the requested operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numeric routine failed to converge to its required tolerance.
class SolveError : public Error {
 public:
  using Error::Error;
};

/// A differentiation stencil was asked to evaluate at a point flagged as a
/// transition point, where the limit density is not defined.
class TransitionPointError : public Error {
 public:
  using Error::Error;
};

/// A finite-difference stencil straddles a region interface even at the
/// smallest permitted step.
class StencilStraddleError : public Error {
 public:
  using Error::Error;
};

/// An experiment configuration failed validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace polyzero
