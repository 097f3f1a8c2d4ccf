#pragma once

#include <stdexcept>
#include <string>

namespace modlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside a documented range (levels, inflation, tolerances).
class BoundsError : public Error {
 public:
  using Error::Error;
};

// p outside the supported exponent range.
class ExponentError : public Error {
 public:
  using Error::Error;
};

// Malformed or unsupported curve family description.
class SpecError : public Error {
 public:
  using Error::Error;
};

// A continuum reduced to a single cell where two are required.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Operation not available for this kind of space or family.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Array length does not match the approximation it is applied to.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Geometric configuration that cannot be realized on the graph.
class GeometryError : public Error {
 public:
  using Error::Error;
};

// Instance too large for a brute-force routine.
class SizeError : public Error {
 public:
  using Error::Error;
};

// Curve classified as small where a spanning curve is required.
class ClassificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace modlab
