#include "ldempc/types.hpp"

#include <algorithm>
#include <limits>

namespace ldempc {

Box::Box(Vec lower, Vec upper) : lo(std::move(lower)), hi(std::move(upper)) {
  if (lo.size() != hi.size()) {
    throw DimensionError("box bounds have different dimensions");
  }
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (lo[i] > hi[i]) {
      throw Error("box lower bound exceeds upper bound in component " + std::to_string(i));
    }
  }
}

Box Box::uniform(std::size_t dim, double lower, double upper) {
  const auto n = static_cast<Eigen::Index>(dim);
  return Box(Vec::Constant(n, lower), Vec::Constant(n, upper));
}

double Box::violation(const Vec& v) const {
  if (v.size() != lo.size()) {
    throw DimensionError("vector of size " + std::to_string(v.size()) + " checked against box of size " +
                         std::to_string(lo.size()));
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    worst = std::max({worst, v[i] - hi[i], lo[i] - v[i]});
  }
  return worst;
}

Vec Box::project(const Vec& v) const { return v.cwiseMax(lo).cwiseMin(hi); }

Vec stack(const VecSeq& seq) {
  if (seq.empty()) {
    return Vec(0);
  }
  const auto block = seq.front().size();
  Vec flat(block * static_cast<Eigen::Index>(seq.size()));
  for (std::size_t k = 0; k < seq.size(); ++k) {
    if (seq[k].size() != block) {
      throw DimensionError("cannot stack vectors of different sizes");
    }
    flat.segment(static_cast<Eigen::Index>(k) * block, block) = seq[k];
  }
  return flat;
}

VecSeq unstack(const Vec& flat, std::size_t block) {
  if (block == 0 || static_cast<std::size_t>(flat.size()) % block != 0) {
    throw DimensionError("flat vector length is not a multiple of the block size");
  }
  const auto b = static_cast<Eigen::Index>(block);
  VecSeq seq(static_cast<std::size_t>(flat.size()) / block);
  for (std::size_t k = 0; k < seq.size(); ++k) {
    seq[k] = flat.segment(static_cast<Eigen::Index>(k) * b, b);
  }
  return seq;
}

}  // namespace ldempc
