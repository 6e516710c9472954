/// @file dac_populations.cpp
/// @brief Final population difference of the dual avoided crossing: exact wavepacket vs QCLE.
///
/// Usage: demo_dac_populations [P0 ...]   (default 20 40; dr_cap 0.1 grids)

#include <qcle_lab/qcle_lab.hpp>

#include <cstdio>
#include <cstdlib>

using namespace qlab;

int main(int argc, char** argv)
{
    std::vector<double> p0s;
    for (int i = 1; i < argc; ++i) p0s.push_back(std::strtod(argv[i], nullptr));
    if (p0s.empty()) p0s = {20.0, 40.0};
    const fs::path root = fs::temp_directory_path() / "qcle_lab_demo_dac";
    std::printf("%8s %8s %6s %12s %12s %10s\n", "P0", "ln E", "N", "tdse", "qcle", "|diff|");
    for (double p0 : p0s) {
        double pd[2] = {0.0, 0.0};
        std::size_t n = 0;
        int i = 0;
        for (Method m : {Method::tdse_split, Method::qcle}) {
            ExperimentConfig c;
            c.method = m;
            c.p0 = p0;
            c.dr_cap = 0.1;
            c.trace_tolerance = 1e-3;
            c.edge_tolerance = 1e-3;
            c.output_dir = root / (to_string(m) + "_" + fmt(p0));
            const auto s = run_experiment(c);
            pd[i++] = s.final.pop_diff;
            n = s.n_points;
        }
        std::printf("%8.3f %8.3f %6zu %12.6f %12.6f %10.2e\n", p0, log_energy(p0, 2000.0), n, pd[0], pd[1], std::abs(pd[0] - pd[1]));
    }
    return 0;
}
