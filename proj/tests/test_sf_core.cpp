#include "racsim/sf_model.hpp"
#include "racsim/simulate.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace racsim;

namespace {

UncertainSfModel pure_integrator_chain() {
    // x1' = x2, x2' = u
    UncertainSfModel m;
    m.order = 2;
    return m;
}

}  // namespace

TEST_CASE("model validation") {
    UncertainSfModel m;
    m.order = 1;
    CHECK_THROWS_AS(m.validate(), ConfigError);
    m.order = 2;
    CHECK_NOTHROW(m.validate());
    m.f.resize(3);
    CHECK_THROWS_AS(m.validate(), ConfigError);
}

TEST_CASE("rk4 step is exact for a constant derivative") {
    UncertainSfModel m = pure_integrator_chain();
    Vec x = Vec::Zero(2);
    const Vec next = step(m, x, 1.0, 0.0, 0.01);
    // x2' = u = 1 exactly; x1 picks up the quadratic ramp of x2.
    CHECK(next[1] == doctest::Approx(0.01).epsilon(1e-15));
}

TEST_CASE("rk4 matches the exponential decay closed form") {
    UncertainSfModel m;
    m.order = 2;
    m.f = {[](const Vec& x, double) { return -x[0]; }, [](const Vec&, double) { return 0.0; }};
    m.g = {[](const Vec&, double) { return 0.0; }, [](const Vec&, double) { return 1.0; }};

    Vec x(2);
    x << 1.0, 0.0;
    const Vec next = step(m, x, 0.0, 0.0, 0.1);
    // one fourth-order step at h = 0.1 carries an h^5/120 defect of ~8.3e-8
    CHECK(std::abs(next[0] - std::exp(-0.1)) < 2e-7);
    CHECK(std::abs(next[0] - std::exp(-0.1)) > 1e-9);  // and it is a real defect, not luck
}

TEST_CASE("rk4 order measured by Richardson slope") {
    auto rhs = [](const Vec& x, double) {
        Vec dx(1);
        dx[0] = -x[0];
        return dx;
    };
    auto integrate = [&](double h) {
        Vec x(1);
        x[0] = 1.0;
        const int n = static_cast<int>(std::llround(1.0 / h));
        for (int k = 0; k < n; ++k) x = rk4_step(rhs, x, k * h, h);
        return std::abs(x[0] - std::exp(-1.0));
    };
    const double e1 = integrate(0.02);
    const double e2 = integrate(0.01);
    const double slope = std::log2(e1 / e2);
    CHECK(slope > 3.9);
    CHECK(slope < 4.5);
}

TEST_CASE("undamped oscillator holds its energy over ten thousand steps") {
    auto rhs = [](const Vec& x, double) {
        Vec dx(2);
        dx[0] = x[1];
        dx[1] = -x[0];
        return dx;
    };
    Vec x(2);
    x << 1.0, 0.0;
    const double h = 1e-3;
    for (int k = 0; k < 10000; ++k) x = rk4_step(rhs, x, k * h, h);
    const double energy = x[0] * x[0] + x[1] * x[1];
    CHECK(std::abs(energy - 1.0) < 1e-6);
}

TEST_CASE("integration reports the offending subsystem") {
    UncertainSfModel m;
    m.order = 2;
    m.d = {UncertainSfModel::StateFn{},
           [](const Vec&, double) { return std::numeric_limits<double>::quiet_NaN(); }};
    Vec x = Vec::Zero(2);
    try {
        (void)step(m, x, 0.0, 0.0, 1e-3);
        FAIL("expected NumericError");
    } catch (const NumericError& err) {
        CHECK(err.subsystem() == 2);
    }
}

TEST_CASE("generic simulate: quiescent loop stays identically zero") {
    UncertainSfModel m = pure_integrator_chain();
    RacController ctrl({{2.0, 1.0, 0.5, 0.1, 1.0}, {4.0, 1.0, 0.5, 0.1, 1.0}},
                       {-10.0, 10.0});
    PpcEnvelope env{1.0, 0.2, 1.0};
    const Trace trace =
        simulate(m, ctrl, env, 0.8, constant_reference(0.0), 0.5, 1e-3, 42);

    REQUIRE(trace.rows.size() == 500);
    for (const auto& row : trace.rows) {
        CHECK(row.e[0] == 0.0);
        CHECK(row.e[1] == 0.0);
        CHECK(row.u_sat[0] == 0.0);
    }
    CHECK_FALSE(trace.shutdown());
}

TEST_CASE("generic simulate: forced envelope violation truncates at the first bad step") {
    UncertainSfModel m = pure_integrator_chain();
    // A disturbance far beyond the actuator authority drags x1 out of the
    // envelope; the supervisor must end the rollout at the crossing.
    m.gamma.resize(2);
    m.gamma[0] = [](double t) { return t >= 0.2 ? 5.0 : 0.0; };

    RacController ctrl({{2.0, 1.0, 0.5, 0.1, 1.0}, {4.0, 1.0, 0.5, 0.1, 1.0}},
                       {-0.5, 0.5});
    PpcEnvelope env{0.05, 0.05, 1.0};  // constant-bound mode
    const Trace trace =
        simulate(m, ctrl, env, 0.8, constant_reference(0.0), 2.0, 1e-3, 0);

    REQUIRE(trace.shutdown());
    CHECK(trace.rows.size() < 2000);
    CHECK(trace.rows.back().u_sat[0] == 0.0);
    CHECK(trace.rows.back().event == StepEvent::Shutdown);
    // every earlier row satisfied the bound
    for (std::size_t k = 0; k + 1 < trace.rows.size(); ++k) {
        CHECK(std::abs(trace.rows[k].e[0]) < trace.rows[k].envelope);
    }
}

TEST_CASE("generic simulate twice gives identical traces") {
    UncertainSfModel m = pure_integrator_chain();
    m.gamma.resize(2);
    m.gamma[1] = [](double t) { return 0.3 * std::sin(5.0 * t); };

    auto run = [&]() {
        RacController ctrl({{2.0, 1.0, 0.5, 0.1, 1.0}, {4.0, 1.0, 0.5, 0.1, 1.0}},
                           {-10.0, 10.0});
        PpcEnvelope env{2.0, 0.5, 1.0};
        return simulate(m, ctrl, env, 0.8, constant_reference(0.0), 1.0, 1e-3, 7);
    };
    const Trace a = run();
    const Trace b = run();
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
        CHECK(a.rows[k].x == b.rows[k].x);
        CHECK(a.rows[k].u_sat == b.rows[k].u_sat);
    }
}
