#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "alsent/error.hpp"
#include "alsent/nn/rng.hpp"
#include "alsent/uncertainty/uncertainty.hpp"

using namespace alsent;
using namespace alsent::uncertainty;

namespace {

// Full stable sort, then truncate.
std::vector<std::string> oracle_top_k(std::vector<UncertaintyScore> scores, std::size_t k) {
  std::sort(scores.begin(), scores.end(),
            [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
  std::stable_sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) { return a.entropy > b.entropy; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, scores.size()); ++i) out.push_back(scores[i].sample_id);
  return out;
}

std::vector<double> random_distribution(nn::RngStream& rng, std::size_t classes) {
  std::vector<double> d(classes);
  double sum = 0;
  for (double& p : d) sum += (p = rng.uniform() < 0.1 ? 0.0 : rng.uniform());
  if (sum == 0) d[0] = sum = 1.0;
  for (double& p : d) p /= sum;
  return d;
}

}  // namespace

TEST_CASE("entropy values") {
  CHECK(entropy({0.5, 0.5}) == doctest::Approx(std::numbers::ln2).epsilon(1e-12));
  CHECK(entropy({1.0, 0.0}) == 0.0);
  CHECK(entropy({0.9, 0.1}) == doctest::Approx(0.325083).epsilon(1e-6));
  CHECK(entropy({0.9, 0.1}) == doctest::Approx(-0.9 * std::log(0.9) - 0.1 * std::log(0.1)).epsilon(1e-14));
  CHECK(entropy({1.0 / 3, 1.0 / 3, 1.0 / 3}) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("entropy rejects malformed distributions") {
  for (const std::vector<double>& bad : std::vector<std::vector<double>>{
           {}, {0.5, 0.4}, {1.2, -0.2}, {std::nan(""), 1.0}, {0.5, 0.5 + 1e-8}}) {
    try {
      entropy(bad);
      FAIL("expected InvalidDistribution");
    } catch (const Error& e) {
      CHECK(e.code() == "InvalidDistribution");
    }
  }
  CHECK_NOTHROW(entropy({0.5, 0.5 + 1e-10}));
}

TEST_CASE("entropy properties") {
  nn::RngStream rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t classes = 2 + rng.below(5);
    std::vector<double> d = random_distribution(rng, classes);
    const double h = entropy(d);
    CHECK(h >= 0.0);
    CHECK(h <= std::log(static_cast<double>(classes)) + 1e-12);
    std::vector<double> shuffled = d;
    rng.shuffle(shuffled);
    CHECK(entropy(shuffled) == doctest::Approx(h).epsilon(1e-12));
    const double p = rng.uniform();
    CHECK(entropy({p, 1 - p}) == doctest::Approx(entropy({1 - p, p})).epsilon(1e-12));
    const std::vector<double> uniform(classes, 1.0 / static_cast<double>(classes));
    const bool is_uniform = std::all_of(d.begin(), d.end(), [&](double x) { return std::abs(x - uniform[0]) < 1e-12; });
    if (!is_uniform) CHECK(h < entropy(uniform));
  }
}

TEST_CASE("select_batch") {
  CHECK(select_batch({{"a", 0.1}, {"b", 0.69}, {"c", 0.5}}, 2) == std::vector<std::string>{"b", "c"});
  CHECK(select_batch({{"a", 0.1}, {"b", 0.69}}, 0).empty());
  CHECK(select_batch({{"b", 0.5}, {"a", 0.5}}, 1) == std::vector<std::string>{"a"});
  CHECK(select_batch({{"b", 0.5}, {"a", 0.2}}, 9) == std::vector<std::string>{"b", "a"});
  CHECK(select_batch({}, 3).empty());

  nn::RngStream rng(8);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = rng.below(40);
    std::vector<UncertaintyScore> scores;
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse entropies force plenty of ties.
      const double h = static_cast<double>(rng.below(6)) / 10.0;
      scores.push_back({"s" + std::to_string(rng.below(1000)) + "_" + std::to_string(i), h});
    }
    rng.shuffle(scores);
    const std::size_t k = rng.below(n + 5);
    CHECK(select_batch(scores, k) == oracle_top_k(scores, k));
  }
}
