// Fritsch-Carlson monotone cubic (PCHIP) interpolation. Internal.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "fretflim/errors.hpp"

namespace fretflim::detail {

class MonotoneCubic {
public:
    // x must be strictly increasing.
    MonotoneCubic(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) throw UsageError("interpolation needs >= 2 samples");
        for (std::size_t i = 1; i < n; ++i)
            if (!(x_[i] > x_[i - 1])) throw UsageError("interpolation abscissae must increase");

        std::vector<double> h(n - 1), s(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = x_[i + 1] - x_[i];
            s[i] = (y_[i + 1] - y_[i]) / h[i];
        }
        d_.assign(n, 0.0);
        d_[0] = endpoint_slope(h[0], n > 2 ? h[1] : h[0], s[0], n > 2 ? s[1] : s[0]);
        d_[n - 1] = endpoint_slope(h[n - 2], n > 2 ? h[n - 3] : h[n - 2], s[n - 2],
                                   n > 2 ? s[n - 3] : s[n - 2]);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (s[i - 1] * s[i] <= 0.0) {
                d_[i] = 0.0;
            } else {
                const double w1 = 2.0 * h[i] + h[i - 1];
                const double w2 = h[i] + 2.0 * h[i - 1];
                d_[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
            }
        }
    }

    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }

    double value(double x) const { return eval(x).first; }
    double derivative(double x) const { return eval(x).second; }

private:
    static double endpoint_slope(double h0, double h1, double s0, double s1) {
        double d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
        if (d * s0 <= 0.0) d = 0.0;
        else if (s0 * s1 <= 0.0 && std::fabs(d) > 3.0 * std::fabs(s0)) d = 3.0 * s0;
        return d;
    }

    std::pair<double, double> eval(double x) const {
        if (x < x_min() || x > x_max())
            throw UsageError("interpolation query outside data range");
        std::size_t i = 0;
        std::size_t hi = x_.size() - 1;
        while (hi - i > 1) {
            const std::size_t mid = (i + hi) / 2;
            if (x_[mid] <= x) i = mid;
            else hi = mid;
        }
        const double h = x_[i + 1] - x_[i];
        const double t = (x - x_[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1;
        const double h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2;
        const double h11 = t3 - t2;
        const double v = h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
        const double dh00 = (6 * t2 - 6 * t) / h;
        const double dh10 = 3 * t2 - 4 * t + 1;
        const double dh01 = (-6 * t2 + 6 * t) / h;
        const double dh11 = 3 * t2 - 2 * t;
        const double dv = dh00 * y_[i] + dh10 * d_[i] + dh01 * y_[i + 1] + dh11 * d_[i + 1];
        return {v, dv};
    }

    std::vector<double> x_, y_, d_;
};

}  // namespace fretflim::detail
