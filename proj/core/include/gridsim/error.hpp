#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gridsim {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Raised by loaders when a document parses but describes an invalid model.
class ValidationError : public Error {
public:
  explicit ValidationError(std::vector<std::string> issues);

  const std::vector<std::string>& issues() const noexcept { return issues_; }

private:
  std::vector<std::string> issues_;
};

// Row-numbered parse failure in a tabular input (1-based, header is row 1).
class ParseError : public Error {
public:
  ParseError(std::string path, std::size_t row, const std::string& what);

  const std::string& path() const noexcept { return path_; }
  std::size_t row() const noexcept { return row_; }

private:
  std::string path_;
  std::size_t row_;
};

}  // namespace gridsim
