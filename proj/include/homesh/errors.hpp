#pragma once

#include <stdexcept>
#include <string>

namespace homesh {

/// Failure classes map onto CLI exit codes (see tools/homesh.cpp).
enum class ErrorClass { Usage = 1, Io = 2, Validation = 3, Numerical = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass errorClass() const noexcept { return cls_; }

 private:
  ErrorClass cls_;
};

/// Argument outside the closed domain of a reference element or CAD entity.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& w) : Error(ErrorClass::Numerical, w) {}
};

/// Named entity (patch, geometry, id) does not exist.
class LookupError : public Error {
 public:
  explicit LookupError(const std::string& w) : Error(ErrorClass::Usage, w) {}
};

/// Element or document does not have the expected shape.
class StructuralError : public Error {
 public:
  explicit StructuralError(const std::string& w) : Error(ErrorClass::Validation, w) {}
};

class CapabilityError : public Error {
 public:
  explicit CapabilityError(const std::string& w) : Error(ErrorClass::Usage, w) {}
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& w) : Error(ErrorClass::Usage, w) {}
};

class TopologyError : public Error {
 public:
  explicit TopologyError(const std::string& w) : Error(ErrorClass::Validation, w) {}
};

class ValidityError : public Error {
 public:
  explicit ValidityError(const std::string& w) : Error(ErrorClass::Validation, w) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& w) : Error(ErrorClass::Io, w) {}
};

}  // namespace homesh
