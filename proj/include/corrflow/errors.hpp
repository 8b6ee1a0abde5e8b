#pragma once

#include <stdexcept>
#include <string>

namespace corrflow {

// Every failure carries the name of the violated invariant so callers
// (and the CLI exit paths) can report it without string matching.
class Error : public std::runtime_error {
 public:
  Error(std::string invariant, const std::string& message)
      : std::runtime_error(invariant + ": " + message),
        invariant_(std::move(invariant)) {}

  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& msg) : Error("DimensionMismatch", msg) {}
};

struct NotHermitian : Error {
  explicit NotHermitian(const std::string& msg) : Error("NotHermitian", msg) {}
};

struct TraceNotOne : Error {
  explicit TraceNotOne(const std::string& msg) : Error("TraceNotOne", msg) {}
};

struct NotPositive : Error {
  explicit NotPositive(const std::string& msg) : Error("NotPositive", msg) {}
};

struct NonCommuting : Error {
  explicit NonCommuting(const std::string& msg) : Error("NonCommuting", msg) {}
};

struct Overflow : Error {
  explicit Overflow(const std::string& msg) : Error("Overflow", msg) {}
};

struct MarginalViolation : Error {
  explicit MarginalViolation(const std::string& msg) : Error("MarginalViolation", msg) {}
};

struct NotThermalInitial : Error {
  explicit NotThermalInitial(const std::string& msg) : Error("NotThermalInitial", msg) {}
};

struct OutOfHull : Error {
  explicit OutOfHull(const std::string& msg) : Error("OutOfHull", msg) {}
};

struct NoConvergence : Error {
  explicit NoConvergence(const std::string& msg) : Error("NoConvergence", msg) {}
};

struct UnequalTemperatures : Error {
  explicit UnequalTemperatures(const std::string& msg) : Error("UnequalTemperatures", msg) {}
};

struct DegenerateChemicalPotentials : Error {
  explicit DegenerateChemicalPotentials(const std::string& msg)
      : Error("DegenerateChemicalPotentials", msg) {}
};

struct InfeasiblePattern : Error {
  explicit InfeasiblePattern(const std::string& msg) : Error("InfeasiblePattern", msg) {}
};

struct InvalidModel : Error {
  explicit InvalidModel(const std::string& msg) : Error("InvalidModel", msg) {}
};

// Scenario / matrix-file problems; carries an optional line number for
// diagnostics ("line 12, key model_a.levels: ...").
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line = 0)
      : Error("ParseError", line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace corrflow
