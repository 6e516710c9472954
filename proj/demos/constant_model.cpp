/// @file constant_model.cpp
/// @brief Constant-coupling model: exact momentum density vs the QCLE marginal, with marginal negativity.
///
/// Usage: demo_constant_model [theta]   (default pi/4; D 1, E 0.05, M 2000, P0 20)

#include <qcle_lab/qcle_lab.hpp>

#include <cstdio>
#include <cstdlib>

using namespace qlab;

int main(int argc, char** argv)
{
    const double theta = argc > 1 ? std::strtod(argv[1], nullptr) : pi / 4.0;
    const ConstParams p;
    const std::vector<double> times{0.0, 25.0, 50.0, 75.0, 100.0};
    const double half = p.kick() + p.d_coupling * p.gap * times.back() + 10.0 * p.sigma_p;
    const auto axis = uniform_axis(p.p0 - half, p.p0 + half, static_cast<std::size_t>(2.0 * half / (p.sigma_p / 16.0)) | 1u);
    const auto series = const_marginal_qcle_solve(const_initial_marginals(p, theta, axis), p, times.back(), 0.0, times);
    const double h = axis[1] - axis[0];
    std::printf("%8s %14s %14s %14s\n", "t", "max|diff|", "L1 diff", "qcle neg");
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto exact = const_exact_total_marginal(axis, times[i], p, theta);
        const auto qcle = series.snapshots[i].total();
        double mx = 0.0, l1 = 0.0;
        for (std::size_t k = 0; k < axis.size(); ++k) {
            mx = std::max(mx, std::abs(exact[k] - qcle[k]));
            l1 += std::abs(exact[k] - qcle[k]) * h;
        }
        std::printf("%8.1f %14.6e %14.6e %14.6e\n", times[i], mx, l1, negativity_index(qcle));
    }
    return 0;
}
