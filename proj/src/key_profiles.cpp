#include "moodshift/key_profiles.hpp"

#include <cmath>

namespace moodshift {

double pitch_class_correlation(const std::array<double, 12>& a, const std::array<double, 12>& b) {
    double ma = 0.0, mb = 0.0;
    for (int i = 0; i < 12; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= 12.0;
    mb /= 12.0;
    double num = 0.0, da = 0.0, db = 0.0;
    for (int i = 0; i < 12; ++i) {
        const double xa = a[i] - ma;
        const double xb = b[i] - mb;
        num += xa * xb;
        da += xa * xa;
        db += xb * xb;
    }
    if (da <= 0.0 || db <= 0.0) return 0.0;
    return num / std::sqrt(da * db);
}

}  // namespace moodshift
