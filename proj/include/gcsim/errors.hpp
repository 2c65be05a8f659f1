#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace gcsim {

// Raised when a computation would have to enumerate more hypotheses than the
// enumeration guard allows. Carries the offending space so callers can report it.
class capacity_error : public std::runtime_error {
 public:
  capacity_error(const std::string& what, std::size_t d, std::optional<std::size_t> k)
      : std::runtime_error(what), d_(d), k_(k) {}

  std::size_t dimension() const noexcept { return d_; }
  std::optional<std::size_t> sparsity() const noexcept { return k_; }

 private:
  std::size_t d_;
  std::optional<std::size_t> k_;
};

}  // namespace gcsim
