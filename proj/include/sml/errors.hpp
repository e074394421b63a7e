#pragma once
#include <stdexcept>
#include <string>

namespace sml {

// Base of every error thrown by the library. kind() is the stable name used in reports.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define SML_DEFINE_ERROR(Name)                                             \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& what) : Error(#Name, what) {}         \
  };

SML_DEFINE_ERROR(InvalidArgument)
SML_DEFINE_ERROR(DegenerateSpace)
SML_DEFINE_ERROR(EvaluationError)
SML_DEFINE_ERROR(SpectrumHit)
SML_DEFINE_ERROR(EmptyBand)
SML_DEFINE_ERROR(ResolutionError)
SML_DEFINE_ERROR(NoFit)
SML_DEFINE_ERROR(PrecheckFailed)
SML_DEFINE_ERROR(EllipticityError)
SML_DEFINE_ERROR(NegativePotential)
SML_DEFINE_ERROR(ParseError)
SML_DEFINE_ERROR(UsageError)

#undef SML_DEFINE_ERROR

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

}  // namespace sml
