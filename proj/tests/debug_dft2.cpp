#include <fftw3.h>
#include <complex>
#include <cstdio>
#include <vector>
#include <cmath>

using Complex = std::complex<double>;
const Complex iu{0, 1};

// exact copy of the library's centered_dft2
void centered_dft2(std::vector<Complex>& a, int n, int sign) {
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            if ((p + q) % 2) a[size_t(p) * n + q] = -a[size_t(p) * n + q];
    fftw_plan plan = fftw_plan_dft_2d(n, n, reinterpret_cast<fftw_complex*>(a.data()),
                                      reinterpret_cast<fftw_complex*>(a.data()),
                                      sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    double h2 = (n / 2) % 2 ? -1.0 : 1.0;
    double par = h2 * h2;
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
            double s = ((k + l) % 2 ? -1.0 : 1.0) * par;
            a[size_t(k) * n + l] *= s;
        }
}

int main() {
    int n = 16;
    double dy = 0.5;
    std::vector<Complex> v(n * n);
    auto f = [&](double x, double y) { return std::exp(-(x - 0.7) * (x - 0.7) - y * y) ; };
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            v[size_t(p) * n + q] = f((p - n / 2) * dy, (q - n / 2) * dy);
    std::vector<Complex> a = v;
    centered_dft2(a, n, -1);
    // direct: F[k,l] = sum v e^{-i <y,eta>}
    double deta = 2.0 * 3.14159265358979324 / (n * dy);
    int k = n / 2 + 3, l = n / 2 - 2;
    Complex direct = 0;
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
            double yx = (p - n / 2) * dy, yy = (q - n / 2) * dy;
            double ex = (k - n / 2) * deta, ey = (l - n / 2) * deta;
            direct += v[size_t(p) * n + q] * std::exp(-iu * (yx * ex + yy * ey));
        }
    std::printf("centered_dft2(-1): got (%.6g, %.6g), direct e^{-i}: (%.6g, %.6g)\n",
                a[size_t(k) * n + l].real(), a[size_t(k) * n + l].imag(), direct.real(),
                direct.imag());
    return 0;
}
