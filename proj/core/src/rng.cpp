#include "morphkit/rng.hpp"

#include <cmath>

namespace morphkit {

double Rng::normal(double mean, double stddev) {
    // Marsaglia polar method; std::normal_distribution is not portable bit-for-bit.
    if (has_spare_) {
        has_spare_ = false;
        return mean + stddev * spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * unit() - 1.0;
        v = 2.0 * unit() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return mean + stddev * u * m;
}

}  // namespace morphkit
