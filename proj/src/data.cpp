#include "countpo/data.hpp"

#include <cmath>
#include <string>

#include "countpo/errors.hpp"

namespace countpo {

void validate(const Dataset& d) {
  const int n = d.n();
  if (n < 1) throw ValidationError("dataset: no rows");
  if (d.x.cols() < 1) throw ValidationError("dataset: X has no columns");
  if (static_cast<int>(d.y_obs.size()) != n)
    throw ValidationError("dataset: y_obs length " +
                          std::to_string(d.y_obs.size()) + " != N " +
                          std::to_string(n));
  if (static_cast<int>(d.w.size()) != n)
    throw ValidationError("dataset: w length " + std::to_string(d.w.size()) +
                          " != N " + std::to_string(n));
  if (!d.x_names.empty() &&
      static_cast<int>(d.x_names.size()) != d.x.cols())
    throw ValidationError("dataset: x_names size does not match X columns");
  for (const auto& po : {std::cref(d.y0), std::cref(d.y1)}) {
    if (po.get() && static_cast<int>(po.get()->size()) != n)
      throw ValidationError("dataset: potential outcome length != N");
  }
  for (int i = 0; i < n; ++i) {
    if (d.x(i, 0) != 1.0)
      throw ValidationError("dataset: row " + std::to_string(i) +
                            ": first X column must be the intercept (1)");
    for (int j = 0; j < d.x.cols(); ++j) {
      if (!std::isfinite(d.x(i, j)))
        throw ValidationError("dataset: row " + std::to_string(i) +
                              ": non-finite covariate in column " +
                              std::to_string(j));
    }
    if (d.w[i] != 0 && d.w[i] != 1)
      throw ValidationError("dataset: non-binary treatment at index " +
                            std::to_string(i) + " (got " +
                            std::to_string(d.w[i]) + ")");
    if (d.y_obs[i] < 0)
      throw ValidationError("dataset: negative outcome at index " +
                            std::to_string(i));
    if (d.y0 && (*d.y0)[i] < 0)
      throw ValidationError("dataset: row " + std::to_string(i) +
                            ": negative potential outcome y0");
    if (d.y1 && (*d.y1)[i] < 0)
      throw ValidationError("dataset: row " + std::to_string(i) +
                            ": negative potential outcome y1");
  }
}

}  // namespace countpo
