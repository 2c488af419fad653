#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ode.hpp"

TEST_CASE("dopri5 integrates exp decay to tight tolerance") {
  acid::ode::Rhs rhs = [](double, const double* y, double* dy) { dy[0] = -y[0]; };
  auto y = acid::ode::Dopri5(1, rhs).integrate(0.0, {1.0}, 5.0);
  CHECK(std::abs(y[0] - std::exp(-5.0)) < 1e-10);
}
