#include "ldempc/discount.hpp"

#include "ldempc/types.hpp"

#include <cmath>
#include <sstream>

namespace ldempc {

DiscountProfile DiscountProfile::table(std::vector<double> weights) {
  if (weights.empty()) {
    throw Error("discount table must not be empty");
  }
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (!(weights[k] > 0.0 && weights[k] <= 1.0)) {
      throw Error("discount table entry " + std::to_string(k) + " is outside (0,1]");
    }
  }
  return DiscountProfile(Kind::Table, std::move(weights));
}

std::string DiscountProfile::describe() const {
  switch (kind_) {
    case Kind::Constant:
      return "constant";
    case Kind::Linear:
      return "linear";
    case Kind::Table: {
      std::ostringstream os;
      os << "table[" << table_.size() << "]";
      return os.str();
    }
  }
  return "?";
}

double DiscountProfile::weight(std::size_t k, std::size_t horizon) const {
  if (horizon == 0 || k >= horizon) {
    throw Error("discount stage index " + std::to_string(k) + " out of range for horizon " + std::to_string(horizon));
  }
  switch (kind_) {
    case Kind::Constant:
      return 1.0;
    case Kind::Linear:
      return static_cast<double>(horizon - k) / static_cast<double>(horizon);
    case Kind::Table:
      if (table_.size() < horizon) {
        throw Error("discount table of length " + std::to_string(table_.size()) + " used with horizon " +
                    std::to_string(horizon));
      }
      return table_[k];
  }
  return 1.0;
}

std::vector<double> DiscountProfile::weights(std::size_t horizon) const {
  std::vector<double> w(horizon);
  for (std::size_t k = 0; k < horizon; ++k) {
    w[k] = weight(k, horizon);
  }
  return w;
}

double DiscountProfile::weight_sum(std::size_t horizon) const {
  if (horizon == 0) {
    throw Error("horizon must be at least 1");
  }
  switch (kind_) {
    case Kind::Constant:
      return static_cast<double>(horizon);
    case Kind::Linear:
      return (static_cast<double>(horizon) + 1.0) / 2.0;
    case Kind::Table: {
      double sum = 0.0;
      for (std::size_t k = 0; k < horizon; ++k) {
        sum += weight(k, horizon);
      }
      return sum;
    }
  }
  return 0.0;
}

}  // namespace ldempc
