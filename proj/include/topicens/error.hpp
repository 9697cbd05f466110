#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace topicens {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input text could not be parsed. Carries the offending file and 1-based line.
class ParseError : public Error {
 public:
  ParseError(std::string file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

/// Structurally inconsistent input (mismatched dimensions, topic counts, ...).
class StructureError : public Error {
 public:
  using Error::Error;
};

/// A requested view needs data the current project does not carry
/// (e.g. document-topic proportions of an import, or the raw corpus).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

}  // namespace topicens
