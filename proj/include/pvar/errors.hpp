#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pvar {

// Base for every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// A prompt with fewer than two scored responses.
class IneligiblePromptError : public Error {
 public:
  using Error::Error;
};

// All responses of a prompt carry the same reward, so no chosen/rejected split exists.
class DegeneratePairError : public Error {
 public:
  using Error::Error;
};

// Response space too large to enumerate.
class CapacityError : public Error {
 public:
  using Error::Error;
};

class DivergedError : public Error {
 public:
  DivergedError(std::size_t step, const std::string& what)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

}  // namespace pvar
