#pragma once

#include <stdexcept>
#include <string>

namespace fshap {

// Root of the library's exception hierarchy. Every error raised by fshap
// derives from Error, so callers can catch the whole family at once.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A feature space, state vector, or multi-index has inconsistent shape
// (wrong length, out-of-range digit, cardinality < 2).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A marginal probability vector is not a strictly positive distribution.
class MeasureSupportError : public Error {
 public:
  using Error::Error;
};

// Gram-Schmidt hit a numerically rank-deficient monomial family.
class BasisConstructionError : public Error {
 public:
  using Error::Error;
};

// A dense enumeration (transform, coalition marginalization, kernel matrix)
// would exceed the configured state budget.
class DenseLimitError : public Error {
 public:
  using Error::Error;
};

// Exact subset enumeration was requested for more features than supported.
class CoalitionLimitError : public Error {
 public:
  using Error::Error;
};

// The sampled coalition design is rank-deficient; the weighted least-squares
// system has no unique solution.
class KernelShapDegenerateError : public Error {
 public:
  using Error::Error;
};

// A kernel operation needed a basis-diagonal operator (or a valid spectrum)
// and did not get one.
class SpectrumError : public Error {
 public:
  using Error::Error;
};

// A scalar argument is outside its documented domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// The layer-kernel recursion produced a matrix too far from positive
// semidefinite to repair by clipping.
class KernelRecursionError : public Error {
 public:
  using Error::Error;
};

// A configuration / schema / weights file is malformed or self-inconsistent.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// An input data set is unusable as a whole (missing columns, empty, hash
// mismatch between artifacts).
class DataError : public Error {
 public:
  using Error::Error;
};

// A numeric evaluation produced non-finite values.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A least-squares fit failed to produce a usable solution.
class FitError : public Error {
 public:
  using Error::Error;
};

}  // namespace fshap
