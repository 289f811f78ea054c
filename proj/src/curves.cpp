#include "fretflim/curves.hpp"

#include <cmath>

#include "fretflim/errors.hpp"

namespace fretflim {

void TimeGrid::validate() const {
    if (!(bin_width_ps > 0.0)) throw UsageError("bin_width_ps must be > 0");
    if (n_bins < 2) throw UsageError("n_bins must be >= 2");
}

void IrfSpec::validate() const {
    if (!(fwhm_ps > 0.0)) throw UsageError("irf fwhm_ps must be > 0");
}

double IrfSpec::sigma_ns() const {
    return fwhm_ps * 1e-3 / (2.0 * std::sqrt(2.0 * std::log(2.0)));
}

}  // namespace fretflim
