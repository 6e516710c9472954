/// @file grid.hpp
/// @brief Phase-space lattice, Gaussian wavepackets and the shared Fourier convention.

#pragma once

#include "core.hpp"
#include "fft.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

namespace qlab {

/// Odd-N lattice: positions symmetric about 0, momenta symmetric about p0,
/// dp = 2 pi hbar / ((2N - 1) dr).
struct PhaseSpaceGrid {
    std::size_t n_points = 0;
    double dr = 0.0;
    double dp = 0.0;
    double r_max = 0.0;
    double p0 = 0.0;
    double hbar = 1.0;
    std::vector<double> r_values;
    std::vector<double> p_values;

    std::size_t size() const { return n_points; }
    std::size_t half() const { return (n_points - 1) / 2; }
    double p_min() const { return p_values.front(); }
    double p_max() const { return p_values.back(); }
    bool same_as(const PhaseSpaceGrid& o) const
    {
        return n_points == o.n_points && dr == o.dr && dp == o.dp && p0 == o.p0 && hbar == o.hbar;
    }
};

/// Lattice with explicit spacing and odd size; dp follows from the (2N-1) rule.
inline PhaseSpaceGrid make_grid(std::size_t n_points, double dr, double p0, double hbar = 1.0)
{
    require(n_points % 2 == 1 && n_points >= 3, "grid size must be odd and at least 3");
    require(dr > 0.0 && hbar > 0.0, "grid spacing and hbar must be positive");
    PhaseSpaceGrid g;
    g.n_points = n_points;
    g.dr = dr;
    g.hbar = hbar;
    g.p0 = p0;
    g.dp = 2.0 * pi * hbar / ((2.0 * static_cast<double>(n_points) - 1.0) * dr);
    const auto h = static_cast<std::ptrdiff_t>(g.half());
    g.r_max = static_cast<double>(h) * dr;
    g.r_values.resize(n_points);
    g.p_values.resize(n_points);
    for (std::ptrdiff_t k = -h; k <= h; ++k) {
        g.r_values[static_cast<std::size_t>(k + h)] = static_cast<double>(k) * dr;
        g.p_values[static_cast<std::size_t>(k + h)] = p0 + static_cast<double>(k) * g.dp;
    }
    return g;
}

inline constexpr double default_memory_budget = 4.0 * 1024 * 1024 * 1024;

/// Grid from the packet: dr = min(dr_cap, 4 pi sigma_r / (23 k)),
/// r_max = max(2|r0|, 23 k sigma_r / 4) rounded up to an odd point count.
/// Rejects grids whose packed density field would exceed `memory_budget` bytes.
inline PhaseSpaceGrid build_grid(double r0, double p0, double sigma_r, int k, double dr_cap,
                                 double hbar = 1.0, double memory_budget = default_memory_budget)
{
    require(sigma_r > 0.0, "sigma_r must be positive");
    require(dr_cap > 0.0, "dr_cap must be positive");
    require(p0 >= 0.0, "p0 must be non-negative");
    require(k >= 1, "k must be at least 1");
    const double dr = std::min(dr_cap, 4.0 * pi * sigma_r / (23.0 * k));
    const double r_want = std::max(2.0 * std::abs(r0), 23.0 * k * sigma_r / 4.0);
    const double cells = 2.0 * r_want / dr;
    auto n = static_cast<std::size_t>(std::ceil(cells * (1.0 - 1e-12)));
    if (n % 2 == 1) ++n;
    const std::size_t n_points = n + 1;
    const double bytes = static_cast<double>(n_points) * static_cast<double>(n_points) * 32.0;
    require(bytes <= memory_budget, "grid of " + std::to_string(n_points) + " points exceeds the memory budget");
    return make_grid(n_points, dr, p0, hbar);
}

/// Minimum-uncertainty packet with adiabatic (or diabatic) mixing angle theta.
struct GaussianSpec {
    double r0 = 0.0;
    double p0 = 0.0;
    double sigma_r = 1.0;
    double sigma_p = 0.5;
    double mixing_theta = 0.0;

    static GaussianSpec from_sigma_p(double r0, double p0, double sigma_p, double theta = 0.0, double hbar = 1.0)
    {
        return {r0, p0, hbar / (2.0 * sigma_p), sigma_p, theta};
    }
    void validate(double hbar = 1.0) const
    {
        require(sigma_r > 0.0 && sigma_p > 0.0, "packet widths must be positive");
        require(std::abs(sigma_r * sigma_p - hbar / 2.0) <= 1e-12 * hbar, "packet must satisfy sigma_r sigma_p = hbar/2");
    }
};

/// Two-surface amplitudes, surface-major: amp[s*N + m].
struct Wavefunction {
    Basis basis = Basis::diabatic;
    PhaseSpaceGrid grid;
    std::vector<cplx> amp;

    cplx* surface(int s) { return amp.data() + static_cast<std::size_t>(s) * grid.n_points; }
    const cplx* surface(int s) const { return amp.data() + static_cast<std::size_t>(s) * grid.n_points; }
    cplx& operator()(int s, std::size_t m) { return amp[static_cast<std::size_t>(s) * grid.n_points + m]; }
    const cplx& operator()(int s, std::size_t m) const { return amp[static_cast<std::size_t>(s) * grid.n_points + m]; }
};

inline double surface_norm(const Wavefunction& psi, int s)
{
    double acc = 0.0;
    for (std::size_t m = 0; m < psi.grid.n_points; ++m) acc += std::norm(psi(s, m));
    return acc * psi.grid.dr;
}

inline double norm(const Wavefunction& psi) { return surface_norm(psi, 0) + surface_norm(psi, 1); }

inline Wavefunction gaussian_packet(const GaussianSpec& spec, const PhaseSpaceGrid& grid, Basis basis)
{
    spec.validate(grid.hbar);
    if (std::abs(spec.r0) + 5.0 * spec.sigma_r > grid.r_max)
        throw BoundaryViolation("packet support |r0| + 5 sigma_r exceeds r_max");
    Wavefunction psi{basis, grid, std::vector<cplx>(2 * grid.n_points)};
    const double pref = std::pow(2.0 * pi, -0.25) / std::sqrt(spec.sigma_r);
    const double c = std::cos(spec.mixing_theta), s = std::sin(spec.mixing_theta);
    for (std::size_t m = 0; m < grid.n_points; ++m) {
        const double r = grid.r_values[m];
        const double x = (r - spec.r0) / (2.0 * spec.sigma_r);
        const cplx g = pref * std::exp(cplx(-x * x, spec.p0 * r / grid.hbar));
        psi(0, m) = c * g;
        psi(1, m) = s * g;
    }
    const double scale = 1.0 / std::sqrt(norm(psi));
    for (auto& a : psi.amp) a *= scale;
    return psi;
}

/// Momentum amplitudes on the grid's P values:
/// phi(P_n) = dr / sqrt(2 pi hbar) * sum_m psi(R_m) exp(-i P_n R_m / hbar).
/// Evaluated with a length-(2N-1) transform, whose bin spacing equals dp.
inline std::vector<cplx> momentum_amplitudes(const cplx* line, const PhaseSpaceGrid& g)
{
    const std::size_t n = g.n_points, len = 2 * n - 1;
    AlignedBuffer<cplx> buf(len);
    const double r0 = g.r_values.front();
    for (std::size_t m = 0; m < n; ++m)
        buf[m] = line[m] * std::polar(1.0, -g.p0 * static_cast<double>(m) * g.dr / g.hbar);
    fft_lines(buf.data(), buf.data(), static_cast<int>(len), 1, true);
    std::vector<cplx> phi(n);
    const auto h = static_cast<std::ptrdiff_t>(g.half());
    const double pref = g.dr / std::sqrt(2.0 * pi * g.hbar);
    for (std::ptrdiff_t j = -h; j <= h; ++j) {
        const auto idx = static_cast<std::size_t>((j % static_cast<std::ptrdiff_t>(len) + static_cast<std::ptrdiff_t>(len)) % static_cast<std::ptrdiff_t>(len));
        const double p = g.p_values[static_cast<std::size_t>(j + h)];
        phi[static_cast<std::size_t>(j + h)] = pref * std::polar(1.0, -p * r0 / g.hbar) * buf[idx];
    }
    return phi;
}

/// Text header (one `# key=value` per line) followed by a CSV body `index,r,p`.
inline void write_grid(std::ostream& os, const PhaseSpaceGrid& g)
{
    os << std::setprecision(17);
    os << "# n_points=" << g.n_points << "\n# dr=" << g.dr << "\n# dp=" << g.dp << "\n# r_max=" << g.r_max
       << "\n# p0=" << g.p0 << "\n# hbar=" << g.hbar << "\nindex,r,p\n";
    for (std::size_t k = 0; k < g.n_points; ++k) os << k << ',' << g.r_values[k] << ',' << g.p_values[k] << '\n';
}

/// Grid header, a basis line, then `r,re0,im0,re1,im1`.
inline void write_wavefunction(std::ostream& os, const Wavefunction& psi, double t)
{
    const auto& g = psi.grid;
    os << std::setprecision(17);
    os << "# n_points=" << g.n_points << "\n# dr=" << g.dr << "\n# dp=" << g.dp << "\n# r_max=" << g.r_max
       << "\n# p0=" << g.p0 << "\n# hbar=" << g.hbar << "\n# basis=" << to_string(psi.basis) << "\n# t=" << t
       << "\nr,re0,im0,re1,im1\n";
    for (std::size_t m = 0; m < g.n_points; ++m)
        os << g.r_values[m] << ',' << psi(0, m).real() << ',' << psi(0, m).imag() << ',' << psi(1, m).real() << ','
           << psi(1, m).imag() << '\n';
}

} // namespace qlab
