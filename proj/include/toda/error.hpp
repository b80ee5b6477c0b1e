#pragma once

#include <stdexcept>
#include <string>

namespace toda {

// Failure categories shared by every module. The CLI maps them onto exit
// codes: Invalid* -> 2, MissingArtifact -> 3, everything numerical -> 4.
enum class ErrorKind {
  InvalidArgument,
  InvalidConfig,
  MissingArtifact,
  NonpositiveHMass,
  NonpositiveH,
  NoConvergence,
  LineSearchStall,
  StepUnderflow,
  DegenerateFrame,
  TailNotConvergent,
  InsufficientSeparation,
  InterfaceMismatch,
  IllConditionedFit,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Component index carried by NonpositiveHMass so callers can report it.
class NonpositiveHMassError : public Error {
 public:
  NonpositiveHMassError(int index, double value);
  int index() const { return index_; }

 private:
  int index_;
};

}  // namespace toda
