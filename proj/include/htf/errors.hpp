#pragma once

#include <stdexcept>
#include <string>

namespace htf {

// Base for all library-specific failures. Precondition violations use
// std::invalid_argument directly.
class error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Support interval has zero width, so bins cannot be formed.
class degenerate_support_error : public error {
  public:
    using error::error;
};

// Sample has no spread (all values identical); bandwidth rules break down.
class degenerate_sample_error : public error {
  public:
    using error::error;
};

// tau = 0 with a zero count and no box constraint: the MLE diverges.
class unbounded_problem_error : public error {
  public:
    using error::error;
};

// Every fit along a regularization path failed to converge.
class path_failure_error : public error {
  public:
    using error::error;
};

// Serialized document is structurally malformed (missing/incompatible fields).
class schema_error : public error {
  public:
    using error::error;
};

// Serialized document parses but carries invalid content (e.g. negative density).
class validation_error : public error {
  public:
    using error::error;
};

} // namespace htf
