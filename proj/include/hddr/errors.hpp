#pragma once

#include <stdexcept>
#include <string>

namespace hddr {

enum class Errc {
  fold_too_small,
  support_too_large,
  union_too_large,
  zero_variance,
  invalid_probability,
  wrong_link,
};

std::string to_string(Errc code);

/// A named failure of a computation whose inputs passed validation.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(to_string(code) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline std::string to_string(Errc code) {
  switch (code) {
    case Errc::fold_too_small: return "FoldTooSmall";
    case Errc::support_too_large: return "SupportTooLarge";
    case Errc::union_too_large: return "UnionTooLarge";
    case Errc::zero_variance: return "ZeroVariance";
    case Errc::invalid_probability: return "InvalidProbability";
    case Errc::wrong_link: return "WrongLink";
  }
  return "Unknown";
}

}  // namespace hddr
