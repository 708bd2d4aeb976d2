#pragma once

#include <stdexcept>
#include <string>

namespace spot {

// Base for every error the toolkit raises. `kind()` is a short stable tag used
// in the CLI's machine-readable error records.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define SPOT_DEFINE_ERROR(Name, tag)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& message) : Error(tag, message) {} \
  };

SPOT_DEFINE_ERROR(DimensionError, "dimension")
SPOT_DEFINE_ERROR(NumericError, "numeric")
SPOT_DEFINE_ERROR(ContractError, "contract")
SPOT_DEFINE_ERROR(GeometryError, "geometry")
SPOT_DEFINE_ERROR(PipelineError, "pipeline")
SPOT_DEFINE_ERROR(ConfigError, "config")
SPOT_DEFINE_ERROR(ParseError, "parse")
SPOT_DEFINE_ERROR(GenerationError, "generation")
SPOT_DEFINE_ERROR(IoError, "io")
SPOT_DEFINE_ERROR(InternalError, "internal")

#undef SPOT_DEFINE_ERROR

}  // namespace spot
