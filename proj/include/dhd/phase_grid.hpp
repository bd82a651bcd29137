#pragma once

#include "dhd/error.hpp"

namespace dhd {

/// Square cell grid on [-range, range]^2 in plotted quadrature units.
struct PhaseGrid {
  int bins = 100;
  double range = 3.0;

  double cell_width() const { return 2.0 * range / bins; }
  double cell_area() const { return cell_width() * cell_width(); }
  double center(int index) const { return -range + (index + 0.5) * cell_width(); }

  void validate() const {
    if (bins < 2) throw Error(ErrorKind::domain, "grid needs at least 2 bins per axis");
    if (!(range > 0.0)) throw Error(ErrorKind::domain, "grid range must be positive");
  }
};

}  // namespace dhd
