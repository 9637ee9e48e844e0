#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qrkit {

/// Base class for every failure raised by the core library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value or API argument violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A structured input file (run, qrels, topics, corpus, spec) is malformed.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& excerpt,
             const std::string& reason)
      : Error(source + ":" + std::to_string(line) + ": " + reason + ": '" + excerpt + "'"),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Text generation failed (transport, remote status, or empty output).
class GenerationError : public Error {
 public:
  GenerationError(const std::string& what, int attempts = 0, int status = 0)
      : Error(what), attempts_(attempts), status_(status) {}

  int attempts() const noexcept { return attempts_; }
  int status() const noexcept { return status_; }

 private:
  int attempts_;
  int status_;
};

}  // namespace qrkit
