#pragma once

#include <stdexcept>
#include <string>

namespace gazegrade {

// Error categories map 1:1 onto the CLI's machine-parseable exit lines
// ("error:<category>: message").
enum class ErrorCategory { parse, config, io, validation, numeric, metric };

inline const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::parse: return "parse";
    case ErrorCategory::config: return "config";
    case ErrorCategory::io: return "io";
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::numeric: return "numeric";
    case ErrorCategory::metric: return "metric";
  }
  return "unknown";
}

class Error : public std::runtime_error {
public:
  Error(ErrorCategory cat, const std::string& msg)
      : std::runtime_error(msg), cat_(cat) {}
  ErrorCategory category() const { return cat_; }

private:
  ErrorCategory cat_;
};

[[noreturn]] inline void fail(ErrorCategory cat, const std::string& msg) {
  throw Error(cat, msg);
}

}  // namespace gazegrade
