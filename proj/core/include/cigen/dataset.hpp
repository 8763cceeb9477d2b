#pragma once

#include <string>

#include "cigen/numerics.hpp"

namespace cigen {

// n rows of (x, y, z).
struct Dataset {
  Matrix x;
  Matrix y;
  Matrix z;
  std::string provenance;

  Index rows() const { return x.rows(); }
  Index dx() const { return x.cols(); }
  Index dy() const { return y.cols(); }
  Index dz() const { return z.cols(); }

  // Throws ShapeError / DegenerateInputError when rows disagree or values are non-finite.
  void validate() const;
};

}  // namespace cigen
