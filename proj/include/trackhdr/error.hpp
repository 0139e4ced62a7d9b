#pragma once

#include <stdexcept>
#include <string>

namespace trackhdr {

// Base of every error raised by the toolkit. The class name is what the CLI
// reports on its diagnostic stream, so it must be stable.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* class_name() const noexcept { return "Error"; }
};

#define TRACKHDR_DEFINE_ERROR(Name)                                          \
  class Name : public Error {                                                \
   public:                                                                   \
    explicit Name(const std::string& what) : Error(what) {}                  \
    const char* class_name() const noexcept override { return #Name; }      \
  }

TRACKHDR_DEFINE_ERROR(ParseError);
TRACKHDR_DEFINE_ERROR(IoError);
TRACKHDR_DEFINE_ERROR(SchemaVersionError);
TRACKHDR_DEFINE_ERROR(InvalidArgument);
TRACKHDR_DEFINE_ERROR(UnlabeledDataset);
TRACKHDR_DEFINE_ERROR(InvalidHostname);
TRACKHDR_DEFINE_ERROR(InvalidFractions);
TRACKHDR_DEFINE_ERROR(InsufficientClassCount);
TRACKHDR_DEFINE_ERROR(EmptyTrainingSet);
TRACKHDR_DEFINE_ERROR(InvalidWeights);
TRACKHDR_DEFINE_ERROR(VocabularyDigestMismatch);
TRACKHDR_DEFINE_ERROR(EmptyMatrix);
TRACKHDR_DEFINE_ERROR(SingleClassCalibration);
TRACKHDR_DEFINE_ERROR(MethodModelMismatch);
TRACKHDR_DEFINE_ERROR(LengthMismatch);
TRACKHDR_DEFINE_ERROR(EmptyInput);
TRACKHDR_DEFINE_ERROR(DigestMismatch);

#undef TRACKHDR_DEFINE_ERROR

}  // namespace trackhdr
