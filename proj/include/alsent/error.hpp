#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace alsent {

// Base for every error the library raises. `code()` is the stable, machine
// readable name used in CLI error lines and HTTP error bodies.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace alsent
