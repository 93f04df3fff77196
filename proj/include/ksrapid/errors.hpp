#pragma once

#include <stdexcept>
#include <string>

namespace ksrapid {

// Error taxonomy shared by the whole library. `exit_category()` maps onto the
// CLI exit-code contract: 2 = parameter rejection, 3 = numerical failure,
// 4 = I/O or schema error.
class KsError : public std::runtime_error {
public:
  explicit KsError(const std::string& msg, int category = 3)
      : std::runtime_error(msg), category_(category) {}
  int exit_category() const noexcept { return category_; }

private:
  int category_;
};

class ParameterRejected : public KsError {
public:
  explicit ParameterRejected(const std::string& msg) : KsError(msg, 2) {}
};

class DegenerateRoots : public KsError {
public:
  explicit DegenerateRoots(const std::string& msg) : KsError(msg, 3) {}
};

class NumericalOverflow : public KsError {
public:
  explicit NumericalOverflow(const std::string& msg) : KsError(msg, 3) {}
};

class SingularSystem : public KsError {
public:
  explicit SingularSystem(const std::string& msg) : KsError(msg, 3) {}
};

class ClosedFormUnavailable : public KsError {
public:
  explicit ClosedFormUnavailable(const std::string& msg) : KsError(msg, 3) {}
};

class InvalidTestFunction : public KsError {
public:
  explicit InvalidTestFunction(const std::string& msg) : KsError(msg, 3) {}
};

class DimensionMismatch : public KsError {
public:
  explicit DimensionMismatch(const std::string& msg) : KsError(msg, 3) {}
};

class NearSingular : public KsError {
public:
  explicit NearSingular(const std::string& msg) : KsError(msg, 3) {}
};

class StepRejected : public KsError {
public:
  explicit StepRejected(const std::string& msg) : KsError(msg, 3) {}
};

class DivergedStep : public KsError {
public:
  explicit DivergedStep(const std::string& msg) : KsError(msg, 3) {}
};

class DegenerateBoundaryProfile : public KsError {
public:
  explicit DegenerateBoundaryProfile(const std::string& msg) : KsError(msg, 3) {}
};

class SchemaError : public KsError {
public:
  explicit SchemaError(const std::string& msg) : KsError(msg, 4) {}
};

}  // namespace ksrapid
