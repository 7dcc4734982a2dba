#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ldempc {

/// Stage weights of the finite-horizon cost sum_k w(k,N) l(x_k,u_k).
class DiscountProfile {
public:
  enum class Kind { Constant, Linear, Table };

  static DiscountProfile constant() { return DiscountProfile(Kind::Constant, {}); }
  /// w(k,N) = (N-k)/N.
  static DiscountProfile linear() { return DiscountProfile(Kind::Linear, {}); }
  /// Explicit weights; every entry must lie in (0,1].
  static DiscountProfile table(std::vector<double> weights);

  Kind kind() const { return kind_; }
  const std::vector<double>& table_weights() const { return table_; }
  std::string describe() const;

  /// Weight of stage k for horizon N; requires 0 <= k < N.
  double weight(std::size_t k, std::size_t horizon) const;
  /// All N weights.
  std::vector<double> weights(std::size_t horizon) const;
  /// sum_{k<N} w(k,N). Closed form (N+1)/2 for the linear profile.
  double weight_sum(std::size_t horizon) const;

  bool operator==(const DiscountProfile&) const = default;

private:
  DiscountProfile(Kind kind, std::vector<double> table) : kind_(kind), table_(std::move(table)) {}

  Kind kind_;
  std::vector<double> table_;
};

}  // namespace ldempc
