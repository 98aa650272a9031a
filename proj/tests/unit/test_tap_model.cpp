#include <catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "support/monte_carlo.hpp"
#include "tapaudit/errors.hpp"
#include "tapaudit/tap_model.hpp"

using Catch::Approx;
using namespace tapaudit;

namespace {

const ModelCoefficients kDefault{};

}  // namespace

TEST_CASE("default coefficients are the published dual-Gaussian values", "[model]") {
  CHECK(kDefault.a_x == 0.007101);
  CHECK(kDefault.b_x == 1.412);
  CHECK(kDefault.a_y == 0.01181);
  CHECK(kDefault.b_y == 1.365);
  CHECK_NOTHROW(kDefault.validate());
}

TEST_CASE("coefficients must be strictly positive", "[model]") {
  ModelCoefficients c;
  c.b_y = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.a_x = -1.0;
  CHECK_THROWS_AS(success_rate({5, 5}, c), ValidationError);
  c = {};
  c.a_y = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("erf fixed points", "[erf]") {
  CHECK(tapaudit::erf(0.0) == 0.0);
  CHECK(tapaudit::erf(6.0) == Approx(1.0).margin(1e-10));
  CHECK(tapaudit::erf(30.0) == 1.0);
  // 30-digit reference: 0.842700792949714869341220635083
  CHECK(tapaudit::erf(1.0) == Approx(0.8427007929497149).margin(1e-15));
}

TEST_CASE("erf matches the 30-digit reference table", "[erf]") {
  std::ifstream in(TAPAUDIT_FIXTURES "/erf_reference.json");
  REQUIRE(in);
  const auto doc = nlohmann::json::parse(in);
  double worst = 0.0;
  std::size_t n = 0;
  for (const auto& row : doc.at("points")) {
    const double z = std::stod(row.at("z").get<std::string>());
    const double expected = std::stod(row.at("erf").get<std::string>());
    const double err = std::fabs(tapaudit::erf(z) - expected);
    worst = std::max(worst, err);
    ++n;
  }
  INFO("max abs error " << worst << " over " << n << " points");
  CHECK(n > 1000);
  CHECK(worst <= 1e-10);
  // Much tighter than required; catches a regression to a low-order fit.
  CHECK(worst <= 1e-15);
}

TEST_CASE("erf is odd and agrees with the C library", "[erf]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-8.0, 8.0);
  for (int i = 0; i < 20000; ++i) {
    const double z = dist(rng);
    REQUIRE(tapaudit::erf(-z) == -tapaudit::erf(z));
    REQUIRE(tapaudit::erf(z) == Approx(std::erf(z)).margin(1e-14));
  }
}

TEST_CASE("sigma examples", "[model]") {
  CHECK(sigma(0.0, 0.007101, 1.412) == Approx(std::sqrt(1.412)).epsilon(1e-15));
  CHECK(sigma(0.0, 0.007101, 1.412) == Approx(1.18828).margin(5e-6));
  CHECK(sigma(7.04, kDefault.a_x, kDefault.b_x) == Approx(1.328133).margin(5e-6));
  CHECK(sigma(7.04, kDefault.a_y, kDefault.b_y) == Approx(1.396539).margin(5e-6));
  // Cross-check by squaring.
  const double sx = sigma(7.04, kDefault.a_x, kDefault.b_x);
  CHECK(sx * sx == Approx(0.007101 * 7.04 * 7.04 + 1.412).epsilon(1e-14));
}

TEST_CASE("sigma rejects negative and non-finite sizes", "[model]") {
  CHECK_THROWS_AS(sigma(-0.1, 0.007101, 1.412), DomainError);
  CHECK_THROWS_AS(sigma(std::numeric_limits<double>::infinity(), 0.007101, 1.412), DomainError);
  CHECK_THROWS_AS(success_rate({std::nan(""), 3.0}), DomainError);
  CHECK_THROWS_AS(success_rate({3.0, -1.0}), DomainError);
}

TEST_CASE("success rate examples", "[model]") {
  CHECK(success_rate({7.04, 7.04}).value() == Approx(0.980).margin(0.002));
  CHECK(success_rate({7.04, 7.04}).value() >= 0.980);
  CHECK(success_rate({0.0, 10.0}).value() == 0.0);
  CHECK(success_rate({10.0, 0.0}).value() == 0.0);
  // Frozen from a 1e6-sample Monte-Carlo run (0.99542) and the closed form.
  CHECK(success_rate({9.0, 9.0}).value() == Approx(0.9954).margin(5e-4));
  const double mc = testing::monte_carlo_success_rate(9.0, 9.0, 1'000'000, 99);
  CHECK(success_rate({9.0, 9.0}).value() == Approx(mc).margin(0.005));
}

TEST_CASE("success rate is deterministic", "[model]") {
  CHECK(success_rate({3.3, 4.4}) == success_rate({3.3, 4.4}));
}

TEST_CASE("separability: SR = x factor * y factor exactly", "[model][property]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(0.0, 40.0);
  for (int i = 0; i < 2000; ++i) {
    const double w = dist(rng);
    const double h = dist(rng);
    const double fx = axis_success(w, kDefault.a_x, kDefault.b_x);
    const double fy = axis_success(h, kDefault.a_y, kDefault.b_y);
    REQUIRE(success_rate({w, h}).value() == fx * fy);
  }
}

TEST_CASE("bounds: 0 <= SR < 1, zero iff a side is zero", "[model][property]") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> dist(0.0, 200.0);
  for (int i = 0; i < 5000; ++i) {
    const double w = dist(rng);
    const double h = dist(rng);
    const double sr = success_rate({w, h}).value();
    REQUIRE(sr >= 0.0);
    REQUIRE(sr < 1.0);
    REQUIRE((sr == 0.0) == (w == 0.0 || h == 0.0));
  }
  CHECK(success_rate({1e6, 1e6}).value() < 1.0);
}

TEST_CASE("coefficient identity: sigma^2 - a S^2 = b", "[model][property]") {
  for (int i = 0; i <= 1000; ++i) {
    const double s = i * 0.1;
    const double sx = sigma(s, kDefault.a_x, kDefault.b_x);
    const double sy = sigma(s, kDefault.a_y, kDefault.b_y);
    REQUIRE(sx * sx - kDefault.a_x * s * s == Approx(kDefault.b_x).margin(1e-12));
    REQUIRE(sy * sy - kDefault.a_y * s * s == Approx(kDefault.b_y).margin(1e-12));
  }
}

TEST_CASE("custom coefficients change the prediction", "[model]") {
  ModelCoefficients wider{0.02, 3.0, 0.02, 3.0};
  CHECK(success_rate({7.0, 7.0}, wider).value() < success_rate({7.0, 7.0}).value());
}

TEST_CASE("TapSuccessRate rejects values outside [0,1]", "[model]") {
  CHECK_THROWS_AS(TapSuccessRate(1.5), DomainError);
  CHECK_THROWS_AS(TapSuccessRate(-0.1), DomainError);
  CHECK(TapSuccessRate(0.25).percent() == 25.0);
}
