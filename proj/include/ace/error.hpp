#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ace {

/// Base of every domain error the library throws. The CLI maps these to exit
/// code 1; anything else is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Issue {
  enum class Kind { parse, integrity };
  Kind kind = Kind::integrity;
  std::string file;  // empty when the issue is not tied to one file
  std::string id;    // offending problem/thread/pair id when known
  std::string message;
  int line = 0;      // 1-based, parse errors only
};

std::string to_string(const Issue& issue);

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Issue> issues);
  const std::vector<Issue>& issues() const noexcept { return issues_; }

 private:
  std::vector<Issue> issues_;
};

}  // namespace ace
