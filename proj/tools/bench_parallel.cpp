// Times the OpenMP kernel-grid assembly against the serial reference on a small
// forward problem and prints one line per case.

#include "dirsc/amplitude.hpp"

#include <chrono>
#include <cstdio>

using namespace dirsc;

namespace {

double time_ms(const std::function<void()>& fn) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

} // namespace

int main() {
    ModelPtr model = make_sum({make_gaussian_electric(0.4, 1.0), make_gaussian_magnetic(0.2, 1.1)});
    Kinematics kin = kinematics(1.6, 1.0);
    Direction omega0(0.1, 0.0, 1.0);
    PlaneBasis basis = plane_basis(omega0);
    std::vector<std::pair<Direction, Direction>> pairs;
    for (int i = 0; i < 4; ++i) {
        double a = 0.12 + 0.1 * i;
        pairs.emplace_back(
            Direction(Vec3(basis.embed(Vec2(a, 0)) + std::sqrt(1 - a * a) * omega0.vec())),
            Direction(Vec3(basis.embed(Vec2(-a, 0.05)) +
                           std::sqrt(1 - a * a - 0.0025) * omega0.vec())));
    }

    KernelGrid serial_grid, parallel_grid;
    double t_serial = time_ms([&] {
        serial_grid = assemble_kernel_grid_serial(model, kin, 0, omega0, pairs);
    });
    double t_parallel = time_ms([&] {
        parallel_grid = assemble_kernel_grid(model, kin, 0, omega0, pairs);
    });

    double worst = 0;
    for (size_t i = 0; i < serial_grid.samples.size(); ++i)
        worst = std::max(worst, max_abs(serial_grid.samples[i].g, parallel_grid.samples[i].g));

    std::printf("kernel_grid_serial_ms   %10.1f\n", t_serial);
    std::printf("kernel_grid_parallel_ms %10.1f\n", t_parallel);
    std::printf("speedup                 %10.2f\n", t_serial / t_parallel);
    std::printf("max_abs_difference      %10.3e\n", worst);
    return worst < 1e-13 ? 0 : 1;
}
