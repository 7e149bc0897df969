#pragma once

#include <stdexcept>
#include <string>

namespace traitsim {

// Root of every error the library throws. Each subclass names one failure
// mode so callers can catch exactly what they intend to handle.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define TRAITSIM_DEFINE_ERROR(Name)          \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  }

TRAITSIM_DEFINE_ERROR(ParseError);
TRAITSIM_DEFINE_ERROR(TemplateError);
TRAITSIM_DEFINE_ERROR(TransportError);
TRAITSIM_DEFINE_ERROR(CredentialError);
TRAITSIM_DEFINE_ERROR(BudgetExceeded);
TRAITSIM_DEFINE_ERROR(UnrecognizedPrompt);
TRAITSIM_DEFINE_ERROR(MalformedAnswer);
TRAITSIM_DEFINE_ERROR(InvalidAction);
TRAITSIM_DEFINE_ERROR(MalformedAction);
TRAITSIM_DEFINE_ERROR(LengthError);
TRAITSIM_DEFINE_ERROR(RankDeficient);
TRAITSIM_DEFINE_ERROR(InsufficientData);
TRAITSIM_DEFINE_ERROR(DegenerateColumn);
TRAITSIM_DEFINE_ERROR(ConfigError);
TRAITSIM_DEFINE_ERROR(IoError);
TRAITSIM_DEFINE_ERROR(MissingArtifact);

#undef TRAITSIM_DEFINE_ERROR

}  // namespace traitsim
