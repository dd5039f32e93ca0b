#pragma once

#include <stdexcept>
#include <string>

namespace screenlab {

/// Input that violates a documented domain rule (bad Likert word, score out
/// of range, inconsistent record, bad flag). Maps to CLI exit code 1 and HTTP 400.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model was applied to rows whose layout differs from its training schema.
class SchemaMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reading or writing a model file failed (I/O, parse, version, kind).
class PersistError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace screenlab
