#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace nestcut {

// Malformed input text. line is 1-based, 0 when no line applies.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string source, int line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const { return source_; }
  int line() const { return line_; }

 private:
  std::string source_;
  int line_;
};

// A file exists and parses, but its version header names a format or
// version this build does not understand.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem-level failure: missing file, unwritable directory, short write.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A structural guarantee did not hold: nesting violation, overflow guard,
// disconnected child graph, bicriterion breach. Always a hard stop; these
// conditions indicate a bug or corrupted state, not bad user input.
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nestcut
