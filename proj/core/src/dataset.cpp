#include "cigen/dataset.hpp"

#include "cigen/error.hpp"

namespace cigen {

void Dataset::validate() const {
  if (y.rows() != x.rows() || z.rows() != x.rows()) throw ShapeError("dataset: x, y, z row counts differ");
  if (x.cols() < 1 || y.cols() < 1 || z.cols() < 1) throw ShapeError("dataset: x, y and z need at least one column");
  require_finite(x, "dataset x");
  require_finite(y, "dataset y");
  require_finite(z, "dataset z");
}

}  // namespace cigen
