#include "racsim/rng.hpp"
#include "racsim/saturation.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace racsim;

TEST_CASE("saturate clamps to the limits") {
    const SaturationLimits lim{-10.0, 10.0};
    CHECK(saturate(5.0, lim) == 5.0);
    CHECK(saturate(15.0, lim) == 10.0);
    CHECK(saturate(-12.0, lim) == -10.0);
    CHECK(saturate(10.0, lim) == 10.0);
    CHECK(saturate(-10.0, lim) == -10.0);
}

TEST_CASE("saturate rejects non-finite input") {
    const SaturationLimits lim{-1.0, 1.0};
    CHECK_THROWS_AS(saturate(std::numeric_limits<double>::quiet_NaN(), lim), NumericError);
    CHECK_THROWS_AS(saturate(std::numeric_limits<double>::infinity(), lim), NumericError);
}

TEST_CASE("saturation coefficients, hand-evaluated branches") {
    const SaturationLimits lim{-10.0, 10.0};

    const auto interior = saturation_coefficients(5.0, lim);
    CHECK(interior.lambda1 == 1.0);
    CHECK(interior.lambda2 == 0.0);

    // u = 15: lambda1 = 1/16 and lambda2 = 10 - 15/16, both exact dyadics.
    const auto upper = saturation_coefficients(15.0, lim);
    CHECK(upper.lambda1 == 1.0 / 16.0);
    CHECK(upper.lambda2 == doctest::Approx(10.0 - 15.0 / 16.0).epsilon(1e-15));
    CHECK(upper.lambda1 * 15.0 + upper.lambda2 == doctest::Approx(10.0).epsilon(1e-15));

    const auto lower = saturation_coefficients(-12.0, lim);
    CHECK(lower.lambda1 == doctest::Approx(1.0 / 13.0).epsilon(1e-15));
    CHECK(lower.lambda2 == doctest::Approx(-10.0 + 12.0 / 13.0).epsilon(1e-14));
    CHECK(lower.lambda1 * (-12.0) + lower.lambda2 == doctest::Approx(-10.0).epsilon(1e-15));
}

TEST_CASE("linear decomposition reproduces the saturation over both regimes") {
    const SaturationLimits lim{-3.0, 7.0};
    Rng rng(2024);
    double worst = 0.0;
    bool saw_interior = false, saw_upper = false, saw_lower = false;
    for (int i = 0; i < 200000; ++i) {
        const double u = rng.uniform(-40.0, 40.0);
        const auto [l1, l2] = saturation_coefficients(u, lim);
        worst = std::max(worst, std::abs(l1 * u + l2 - saturate(u, lim)));
        CHECK(l1 > 0.0);
        CHECK(l1 <= 1.0);
        const bool interior = u >= lim.u_min && u <= lim.u_max;
        CHECK((l1 == 1.0) == interior);
        saw_interior |= interior;
        saw_upper |= u > lim.u_max;
        saw_lower |= u < lim.u_min;
    }
    CHECK(worst < 1e-12);
    CHECK(saw_interior);
    CHECK(saw_upper);
    CHECK(saw_lower);
}
