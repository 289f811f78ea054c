// Time axis and sampled-signal containers shared by the simulator and the
// fitting engine.
//
// Bin k covers [k*bin_width_ps, (k+1)*bin_width_ps) on the file time axis;
// the excitation pulse sits at origin_ps. Curve and model values are sampled
// at bin starts, so the bin at the origin carries the t = 0 value.
#pragma once

#include <cstdint>
#include <vector>

namespace fretflim {

struct TimeGrid {
    double bin_width_ps = 32.0;
    int n_bins = 4096;
    double origin_ps = 4096.0;  // excitation pulse position (bin 128 by default)

    void validate() const;

    /// Time of bin start relative to the excitation pulse, in ns.
    double rel_time_ns(int bin) const {
        return (static_cast<double>(bin) * bin_width_ps - origin_ps) * 1e-3;
    }

    double span_ns() const { return static_cast<double>(n_bins) * bin_width_ps * 1e-3; }

    bool operator==(const TimeGrid&) const = default;
};

struct DecayCurve {
    TimeGrid grid;
    std::vector<double> values;  // one nonnegative sample per bin
};

struct TcspcHistogram {
    TimeGrid grid;
    std::vector<std::uint32_t> counts;

    std::uint64_t total() const {
        std::uint64_t sum = 0;
        for (auto c : counts) sum += c;
        return sum;
    }
};

struct IrfSpec {
    double fwhm_ps = 326.0;
    double center_ps = 0.0;  // shift of the response relative to the pulse

    void validate() const;
    double sigma_ns() const;
};

}  // namespace fretflim
