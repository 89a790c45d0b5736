#pragma once

#include <stdexcept>
#include <string>

namespace fblab {

// Every library failure carries the module it came from.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(std::move(module)) {}
  const std::string& module() const { return module_; }

 private:
  std::string module_;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

}  // namespace fblab
