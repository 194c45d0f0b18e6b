#include "dirsc/quadrature.hpp"

namespace dirsc {

double loglog_slope(const std::vector<double>& r, const std::vector<double>& v) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (size_t i = 0; i < r.size(); ++i) {
        if (r[i] <= 0 || v[i] <= 0) continue;
        double x = std::log(r[i]), y = std::log(v[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) throw DomainError("loglog_slope: need at least two positive samples");
    double denom = n * sxx - sx * sx;
    if (denom == 0) throw DomainError("loglog_slope: degenerate abscissae");
    return (n * sxy - sx * sy) / denom;
}

} // namespace dirsc
