#pragma once

#include <stdexcept>
#include <string>

namespace gridicl {

// Every failure raised by the library derives from Error. The category lets
// the CLI map failures onto exit codes without string matching.
enum class ErrorCategory {
  usage,     // bad arguments or configuration
  data,      // malformed input, unsolvable request, invariant violation
  external,  // subprocess or network peer misbehaved
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define GRIDICL_DEFINE_ERROR(Name, Category)                                   \
  class Name : public Error {                                                  \
   public:                                                                     \
    explicit Name(const std::string& what) : Error(ErrorCategory::Category, what) {} \
  };

GRIDICL_DEFINE_ERROR(CapacityError, usage)
GRIDICL_DEFINE_ERROR(ConfigError, usage)
GRIDICL_DEFINE_ERROR(ExecutionError, data)
GRIDICL_DEFINE_ERROR(DimensionError, data)
GRIDICL_DEFINE_ERROR(LexicalError, data)
GRIDICL_DEFINE_ERROR(ParseError, data)
GRIDICL_DEFINE_ERROR(UnresolvableError, data)
GRIDICL_DEFINE_ERROR(PlannerError, data)
GRIDICL_DEFINE_ERROR(GenerationError, data)
GRIDICL_DEFINE_ERROR(ImportError, data)
GRIDICL_DEFINE_ERROR(ExportError, data)
GRIDICL_DEFINE_ERROR(MappingError, data)
GRIDICL_DEFINE_ERROR(FitError, data)
GRIDICL_DEFINE_ERROR(QueryError, usage)
GRIDICL_DEFINE_ERROR(EncodingError, data)
GRIDICL_DEFINE_ERROR(RetrievalError, data)
GRIDICL_DEFINE_ERROR(MetricError, data)
GRIDICL_DEFINE_ERROR(PatternError, usage)
GRIDICL_DEFINE_ERROR(ProtocolError, external)
GRIDICL_DEFINE_ERROR(TimeoutError, external)
GRIDICL_DEFINE_ERROR(TransportError, external)

#undef GRIDICL_DEFINE_ERROR

}  // namespace gridicl
