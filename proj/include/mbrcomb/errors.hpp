#pragma once

#include <stdexcept>
#include <string>

namespace mbrcomb {

// Error hierarchy. Every failure the toolkit reports derives from Error so
// callers at the CLI boundary can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Token id or surface form outside the vocabulary.
class VocabularyError : public Error {
 public:
  using Error::Error;
};

// Invalid construction parameters (empty corpus, bad batch plan, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// N-best evidence that cannot yield posteriors.
class EvidenceError : public Error {
 public:
  using Error::Error;
};

// Beam search produced no complete hypothesis.
class DecodeError : public Error {
 public:
  DecodeError(std::size_t source_id, const std::string& what)
      : Error("sentence " + std::to_string(source_id) + ": " + what), source_id_(source_id) {}
  std::size_t source_id() const { return source_id_; }

 private:
  std::size_t source_id_;
};

// Malformed user data (mismatched corpora, bad UTF-8, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

// Config or file format parse failure; line is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line), message_(what) {}
  std::size_t line() const { return line_; }
  const std::string& message() const { return message_; }

  // Same error reported as "path:line: message".
  ParseError in_file(const std::string& path) const {
    ParseError e(*this);
    static_cast<std::runtime_error&>(e) =
        std::runtime_error(path + (line_ ? ":" + std::to_string(line_) : std::string()) + ": " + message_);
    return e;
  }

 private:
  std::size_t line_;
  std::string message_;
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mbrcomb
