#include "ldempc/discount.hpp"
#include "ldempc/types.hpp"

#include <doctest.h>

using namespace ldempc;

TEST_CASE("linear and constant weights") {
  const auto lin = DiscountProfile::linear();
  CHECK(lin.weight(0, 10) == 1.0);
  CHECK(lin.weight(9, 10) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(DiscountProfile::constant().weight(5, 7) == 1.0);
  CHECK(DiscountProfile::constant().weight(0, 1) == 1.0);
  CHECK(lin.weight(0, 1) == 1.0);
}

TEST_CASE("weight sums") {
  CHECK(DiscountProfile::linear().weight_sum(4) == 2.5);
  CHECK(DiscountProfile::constant().weight_sum(7) == 7.0);
  CHECK(DiscountProfile::linear().weight_sum(1) == 1.0);
  CHECK(DiscountProfile::table({1.0, 0.5, 0.25}).weight_sum(2) == 1.5);
}

TEST_CASE("linear weight sum equals (N+1)/2 up to N = 10^4") {
  const auto lin = DiscountProfile::linear();
  for (std::size_t N = 1; N <= 10000; ++N) {
    const double closed = lin.weight_sum(N);
    REQUIRE(closed == (static_cast<double>(N) + 1.0) / 2.0);
    double naive = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      naive += static_cast<double>(N - k) / static_cast<double>(N);
    }
    REQUIRE(std::abs(closed - naive) <= 1e-12 * closed);
    REQUIRE(closed >= static_cast<double>(N) / 2.0);
  }
}

TEST_CASE("weights are in (0,1] and nonincreasing") {
  const std::vector<DiscountProfile> profiles = {DiscountProfile::linear(), DiscountProfile::constant(),
                                                 DiscountProfile::table({1.0, 0.9, 0.9, 0.2})};
  for (const auto& p : profiles) {
    for (std::size_t N = 1; N <= 4; ++N) {
      const auto w = p.weights(N);
      REQUIRE(w.size() == N);
      for (std::size_t k = 0; k < N; ++k) {
        CHECK(w[k] > 0.0);
        CHECK(w[k] <= 1.0);
        if (k > 0) {
          CHECK(w[k] <= w[k - 1]);
        }
      }
    }
  }
  const auto lin = DiscountProfile::linear().weights(5);
  CHECK(lin.back() == doctest::Approx(0.2).epsilon(1e-15));
  for (std::size_t k = 1; k < lin.size(); ++k) {
    CHECK(lin[k] < lin[k - 1]);
  }
}

TEST_CASE("discount errors") {
  CHECK_THROWS_AS(DiscountProfile::linear().weight(10, 10), Error);
  CHECK_THROWS_AS(DiscountProfile::linear().weight(0, 0), Error);
  CHECK_THROWS_AS(DiscountProfile::table({1.0, 0.0}), Error);
  CHECK_THROWS_AS(DiscountProfile::table({1.5}), Error);
  CHECK_THROWS_AS(DiscountProfile::table({1.0, 0.5}).weight(2, 3), Error);
}

TEST_CASE("describe") {
  CHECK(DiscountProfile::linear().describe() == "linear");
  CHECK(DiscountProfile::constant().describe() == "constant");
  CHECK(DiscountProfile::table({1.0, 0.5}).describe() == "table[2]");
}
