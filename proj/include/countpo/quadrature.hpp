#pragma once

#include <functional>

namespace countpo {

// Adaptive Simpson integration of f on [a, b] to absolute tolerance tol.
// Good enough for the smooth, rapidly decaying integrands used here; depth
// is capped so kinked integrands (absolute differences) terminate.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol);

}  // namespace countpo
