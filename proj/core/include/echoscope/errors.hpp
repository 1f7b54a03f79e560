#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace echoscope {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed arguments that violate an operation's contract.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Input data is unreadable or inconsistent (bad file, unknown ids, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// A metric is mathematically undefined for the given inputs.
class UndefinedResultError : public Error {
 public:
  UndefinedResultError(std::string subject, const std::string& reason)
      : Error(subject.empty() ? reason : subject + ": " + reason), subject_(std::move(subject)) {}

  const std::string& subject() const noexcept { return subject_; }

 private:
  std::string subject_;
};

// The utterance corpus does not span every day an echo window needs.
class CoverageError : public Error {
 public:
  CoverageError(std::string document_id, std::vector<std::string> missing_days)
      : Error(describe(document_id, missing_days)),
        document_id_(std::move(document_id)),
        missing_days_(std::move(missing_days)) {}

  const std::string& document_id() const noexcept { return document_id_; }
  const std::vector<std::string>& missing_days() const noexcept { return missing_days_; }

 private:
  static std::string describe(const std::string& id, const std::vector<std::string>& days) {
    std::string msg = "document " + id + ": no utterance coverage for";
    for (std::size_t i = 0; i < days.size(); ++i) msg += (i ? ", " : " ") + days[i];
    return msg;
  }

  std::string document_id_;
  std::vector<std::string> missing_days_;
};

// The embedding service could not be reached.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts) : Error(what), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

// The embedding service answered with something that breaks the wire contract.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// The embedding service rejected a request, possibly naming the offending text.
class ServiceError : public Error {
 public:
  ServiceError(const std::string& what, int status, std::optional<std::size_t> text_index = std::nullopt)
      : Error(what), status_(status), text_index_(text_index) {}
  int status() const noexcept { return status_; }
  const std::optional<std::size_t>& text_index() const noexcept { return text_index_; }

 private:
  int status_;
  std::optional<std::size_t> text_index_;
};

}  // namespace echoscope
