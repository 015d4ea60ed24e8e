#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace proxbundle {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown for malformed arguments (non-finite inputs, bad sizes, r <= 0, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical routine cannot reach its requested accuracy.
class SolveFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown by an oracle asked to evaluate outside the function's domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

/// Bundle-management policy applied after every iteration.
enum class BundleVariant {
  kThree,         // {-1, 0, k}
  kFull,          // {-1, 0, 1, ..., k}
  kActive,        // {-1, 0, k} plus planes exactly active at x_{k+1}
  kAlmostActive,  // {-1, 0, k} plus planes active within 1e-6
};

inline constexpr BundleVariant kAllVariants[] = {BundleVariant::kThree, BundleVariant::kFull,
                                                 BundleVariant::kActive,
                                                 BundleVariant::kAlmostActive};

std::string_view to_string(BundleVariant v);
BundleVariant parse_variant(std::string_view s);

}  // namespace proxbundle
