#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cqadet {

// Bad input: malformed files, violated preconditions on caller data. The CLI
// maps these to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A broken internal invariant. The CLI maps these to exit code 3.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class MalformedRecord : public DataError {
 public:
  MalformedRecord(std::size_t line_no, const std::string& what)
      : DataError("line " + std::to_string(line_no) + ": " + what), line_no_(line_no), detail_(what) {}
  std::size_t line_no() const { return line_no_; }
  const std::string& detail() const { return detail_; }

 private:
  std::size_t line_no_;
  std::string detail_;
};

class TimeOrderViolation : public DataError {
 public:
  explicit TimeOrderViolation(std::size_t line_no)
      : DataError("line " + std::to_string(line_no) + ": answer_time precedes ask_time"),
        line_no_(line_no) {}
  std::size_t line_no() const { return line_no_; }

 private:
  std::size_t line_no_;
};

class DuplicateUrl : public DataError {
 public:
  explicit DuplicateUrl(const std::string& url) : DataError("duplicate url: " + url), url_(url) {}
  const std::string& url() const { return url_; }

 private:
  std::string url_;
};

class InvalidConfig : public DataError {
 public:
  using DataError::DataError;
};

class EmptyInput : public DataError {
 public:
  using DataError::DataError;
};

class UnderflowViolation : public DataError {
 public:
  using DataError::DataError;
};

class NotInDatabase : public DataError {
 public:
  using DataError::DataError;
};

class EmptyTrainingSet : public DataError {
 public:
  EmptyTrainingSet() : DataError("training set is empty") {}
};

class SingleClassTrainingSet : public DataError {
 public:
  SingleClassTrainingSet() : DataError("training set contains a single class") {}
};

class LengthMismatch : public DataError {
 public:
  using DataError::DataError;
};

class SingleClassInput : public DataError {
 public:
  using DataError::DataError;
};

class CorpusTooSmall : public DataError {
 public:
  using DataError::DataError;
};

class SingleClassSeed : public DataError {
 public:
  SingleClassSeed() : DataError("replay seed contains a single class") {}
};

class NoNewLabels : public DataError {
 public:
  NoNewLabels() : DataError("no new labels since the last retrain") {}
};

class NotFound : public DataError {
 public:
  using DataError::DataError;
};

class ConflictingContent : public DataError {
 public:
  using DataError::DataError;
};

class Unauthorized : public DataError {
 public:
  using DataError::DataError;
};

class CorruptSnapshot : public DataError {
 public:
  using DataError::DataError;
};

class EncodingError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace cqadet
