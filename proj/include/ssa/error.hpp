#pragma once

#include <stdexcept>
#include <string>

namespace ssa {

// Broad failure classes; the CLI maps them onto process exit codes.
enum class ErrorCategory { Config, Data, External };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define SSA_DEFINE_ERROR(Name, Category)                 \
  class Name : public Error {                            \
   public:                                               \
    explicit Name(const std::string& what)               \
        : Error(ErrorCategory::Category, #Name ": " + what) {} \
  }

// amr
SSA_DEFINE_ERROR(SyntaxError, Data);
SSA_DEFINE_ERROR(DuplicateInstance, Data);
SSA_DEFINE_ERROR(DanglingVariable, Data);

// grounding
SSA_DEFINE_ERROR(SpanOutOfRange, Data);
SSA_DEFINE_ERROR(InvalidBox, Data);

// smatch
SSA_DEFINE_ERROR(TooLarge, Data);

// augment
SSA_DEFINE_ERROR(GeneratorUnavailable, External);
SSA_DEFINE_ERROR(ScorerUnavailable, External);
SSA_DEFINE_ERROR(EmptyOutput, External);
SSA_DEFINE_ERROR(BridgeError, External);
SSA_DEFINE_ERROR(NoGroundedNodes, Data);

// metrics
SSA_DEFINE_ERROR(DimensionMismatch, Data);
SSA_DEFINE_ERROR(EmptyFile, Data);
SSA_DEFINE_ERROR(LexiconMissing, Config);
SSA_DEFINE_ERROR(LengthMismatch, Data);
SSA_DEFINE_ERROR(NonPositiveValue, Data);
SSA_DEFINE_ERROR(WrongSetSize, Data);
SSA_DEFINE_ERROR(DegenerateKernel, Data);

// io / cli
SSA_DEFINE_ERROR(SchemaError, Data);
SSA_DEFINE_ERROR(ConfigError, Config);

#undef SSA_DEFINE_ERROR

}  // namespace ssa
