#ifndef MMFUSION_ERRORS_HPP_
#define MMFUSION_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace mmf {

// Carries a short machine-parsable class ("io", "format", "config",
// "divergence", "state") next to the human-readable message. Tensor-level
// shape problems use std::invalid_argument and map to class "shape".
class Error : public std::runtime_error {
 public:
  Error(std::string error_class, const std::string& msg)
      : std::runtime_error(msg), class_(std::move(error_class)) {}
  const std::string& error_class() const { return class_; }

 private:
  std::string class_;
};

}  // namespace mmf

#endif  // MMFUSION_ERRORS_HPP_
