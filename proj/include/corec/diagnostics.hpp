#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace corec {

struct SourcePos {
  int line = 0;
  int column = 0;
};

inline std::string to_string(SourcePos pos) {
  return std::to_string(pos.line) + ":" + std::to_string(pos.column);
}

enum class ErrorKind { Syntax, Name, Type };

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Syntax: return "syntax error";
    case ErrorKind::Name: return "name error";
    case ErrorKind::Type: return "type error";
  }
  return "error";
}

struct Diagnostic {
  ErrorKind kind = ErrorKind::Syntax;
  SourcePos pos;
  std::string message;
};

inline std::string to_string(const Diagnostic& d) {
  return to_string(d.pos) + ": " + to_string(d.kind) + ": " + d.message;
}

/// Raised by the parser and the observation-expression reader. Carries
/// every diagnostic collected before giving up.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(std::vector<Diagnostic> diags)
      : std::runtime_error(diags.empty() ? std::string("parse error") : to_string(diags.front())),
        diags_(std::move(diags)) {}

  const std::vector<Diagnostic>& diagnostics() const noexcept { return diags_; }

 private:
  std::vector<Diagnostic> diags_;
};

}  // namespace corec
