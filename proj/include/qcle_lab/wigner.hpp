/// @file wigner.hpp
/// @brief Partial Wigner transform, PWTDM fields, basis rotation and field dumps.

#pragma once

#include "core.hpp"
#include "fft.hpp"
#include "grid.hpp"
#include "models.hpp"

#include <bit>
#include <cstring>
#include <iomanip>
#include <sstream>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

namespace qlab {

/// 2x2 Hermitian matrix field over the (R, P) lattice.
///
/// Stored packed as (rho00, rho11, rho01); rho10 = conj(rho01). Element
/// (R_m, P_n) lives at index m*N + n, so momentum rows are contiguous.
struct PWTDM {
    Basis basis = Basis::diabatic;
    PhaseSpaceGrid grid;
    std::vector<double> r00, r11;
    std::vector<cplx> r01;

    PWTDM() = default;
    PWTDM(const PhaseSpaceGrid& g, Basis b)
        : basis(b), grid(g), r00(g.n_points * g.n_points), r11(g.n_points * g.n_points), r01(g.n_points * g.n_points)
    {
    }
    std::size_t n() const { return grid.n_points; }
    std::size_t idx(std::size_t m, std::size_t k) const { return m * grid.n_points + k; }
    /// Element (row, col) at (R_m, P_k).
    cplx element(std::size_t m, std::size_t k, int row, int col) const
    {
        const std::size_t i = idx(m, k);
        if (row == 0 && col == 0) return r00[i];
        if (row == 1 && col == 1) return r11[i];
        if (row == 0) return r01[i];
        return std::conj(r01[i]);
    }
};

/// Packed congruence rho' = W^T rho W for a real 2x2 W.
inline void congruence(double& a, double& b, cplx& c, const Mat2& w)
{
    const double rc = c.real();
    const double na = w[0][0] * w[0][0] * a + w[1][0] * w[1][0] * b + 2.0 * w[0][0] * w[1][0] * rc;
    const double nb = w[0][1] * w[0][1] * a + w[1][1] * w[1][1] * b + 2.0 * w[0][1] * w[1][1] * rc;
    const cplx nc = w[0][0] * w[0][1] * a + w[1][0] * w[1][1] * b + w[0][0] * w[1][1] * c + w[1][0] * w[0][1] * std::conj(c);
    a = na;
    b = nb;
    c = nc;
}

inline Mat2 transpose(const Mat2& w) { return {{{w[0][0], w[1][0]}, {w[0][1], w[1][1]}}}; }

/// One transformed R row handed to a streaming consumer.
struct WignerRow {
    std::size_t m;
    std::span<const double> r00, r11;
    std::span<const cplx> r01;
};

/// Row-streaming partial Wigner transform of a diabatic wavefunction.
///
/// For each R_m the products psi_i(R_m - q dr) psi_j*(R_m + q dr) (zero outside
/// the grid) are summed against exp(2 i P_n q dr / hbar) with a length-(2N-1)
/// transform, times dr / (pi hbar). Rows are computed in parallel chunks and
/// delivered to `visit` in ascending m, so reductions are deterministic.
inline void partial_wigner_rows(const Wavefunction& psi, const std::function<void(const WignerRow&)>& visit)
{
    require(psi.basis == Basis::diabatic, "partial_wigner_transform needs a diabatic wavefunction");
    const PhaseSpaceGrid& g = psi.grid;
    const std::size_t n = g.n_points, len = 2 * n - 1;
    const auto nn = static_cast<std::ptrdiff_t>(n);
    const auto ll = static_cast<std::ptrdiff_t>(len);
    const auto h = static_cast<std::ptrdiff_t>(g.half());
    std::vector<cplx> phase(len);
    for (std::ptrdiff_t q = -(nn - 1); q <= nn - 1; ++q)
        phase[static_cast<std::size_t>((q + ll) % ll)] = std::polar(1.0, 2.0 * g.p0 * static_cast<double>(q) * g.dr / g.hbar);
    std::vector<std::size_t> out_index(n);
    for (std::ptrdiff_t j = -h; j <= h; ++j) out_index[static_cast<std::size_t>(j + h)] = static_cast<std::size_t>(((2 * j) % ll + ll) % ll);
    const double pref = g.dr / (pi * g.hbar);
    cached_plan(FftKind::backward, static_cast<int>(len), 2, true);

    const int threads = worker_threads();
    const std::size_t chunk = static_cast<std::size_t>(std::max(8, 4 * threads));
    std::vector<double> c00(chunk * n), c11(chunk * n);
    std::vector<cplx> c01(chunk * n);
    std::vector<AlignedBuffer<cplx>> bufs;
    for (int t = 0; t < threads; ++t) bufs.emplace_back(2 * len);
    const cplx* p0 = psi.surface(0);
    const cplx* p1 = psi.surface(1);

    for (std::size_t m0 = 0; m0 < n; m0 += chunk) {
        const std::size_t nb = std::min(chunk, n - m0);
#pragma omp parallel for schedule(static) num_threads(threads)
        for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
            const auto m = static_cast<std::ptrdiff_t>(m0) + b;
            cplx* w = bufs[omp_get_thread_num()].data();
            cplx* wd = w;
            cplx* wc = w + len;
            std::fill(w, w + 2 * len, cplx{});
            const std::ptrdiff_t qmax = std::min(m, nn - 1 - m);
            for (std::ptrdiff_t q = -qmax; q <= qmax; ++q) {
                const auto lo = static_cast<std::size_t>(m - q), hi = static_cast<std::size_t>(m + q);
                const auto k = static_cast<std::size_t>((q + ll) % ll);
                const cplx ph = phase[k];
                // diagonal sequences are Hermitian, so one transform of d00 + i d11 yields both
                wd[k] = (p0[lo] * std::conj(p0[hi]) + I * (p1[lo] * std::conj(p1[hi]))) * ph;
                wc[k] = p0[lo] * std::conj(p1[hi]) * ph;
            }
            fftw_execute_dft(cached_plan(FftKind::backward, static_cast<int>(len), 2, true), fc(w), fc(w));
            const std::size_t base = static_cast<std::size_t>(b) * n;
            for (std::size_t k = 0; k < n; ++k) {
                const cplx d = wd[out_index[k]] * pref;
                c00[base + k] = d.real();
                c11[base + k] = d.imag();
                c01[base + k] = wc[out_index[k]] * pref;
            }
        }
        for (std::size_t b = 0; b < nb; ++b) {
            const std::size_t base = b * n;
            visit(WignerRow{m0 + b, std::span<const double>(c00.data() + base, n), std::span<const double>(c11.data() + base, n),
                            std::span<const cplx>(c01.data() + base, n)});
        }
    }
}

inline PWTDM partial_wigner_transform(const Wavefunction& psi)
{
    PWTDM rho(psi.grid, Basis::diabatic);
    const std::size_t n = psi.grid.n_points;
    partial_wigner_rows(psi, [&](const WignerRow& row) {
        std::copy(row.r00.begin(), row.r00.end(), rho.r00.begin() + static_cast<std::ptrdiff_t>(row.m * n));
        std::copy(row.r11.begin(), row.r11.end(), rho.r11.begin() + static_cast<std::ptrdiff_t>(row.m * n));
        std::copy(row.r01.begin(), row.r01.end(), rho.r01.begin() + static_cast<std::ptrdiff_t>(row.m * n));
    });
    return rho;
}

inline PWTDM partial_wigner_transform(const Wavefunction& psi, const PhaseSpaceGrid& grid)
{
    require(psi.grid.same_as(grid), "wavefunction lives on a different grid");
    return partial_wigner_transform(psi);
}

/// Diabatic <-> adiabatic: rho_adia = U^T rho_dia U at every (R_m, P_n).
inline PWTDM rotate_basis(const PWTDM& rho, const CouplingProfile& prof, Basis target)
{
    require(rho.basis != target, "rotate_basis: the density is already in the target basis");
    require(prof.size() == rho.n(), "rotate_basis: profile does not match the grid");
    PWTDM out = rho;
    out.basis = target;
    const std::size_t n = rho.n();
#pragma omp parallel for schedule(static) num_threads(worker_threads())
    for (std::ptrdiff_t mm = 0; mm < static_cast<std::ptrdiff_t>(n); ++mm) {
        const auto m = static_cast<std::size_t>(mm);
        const Mat2 w = target == Basis::adiabatic ? prof.u[m] : transpose(prof.u[m]);
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t i = m * n + k;
            congruence(out.r00[i], out.r11[i], out.r01[i], w);
        }
    }
    return out;
}

inline PWTDM rotate_basis(const PWTDM& rho, const ModelSpec& model, Basis target)
{
    return rotate_basis(rho, coupling_profile(model, rho.grid), target);
}

/// Pointwise trace rho00 + rho11 (real by construction of the packed storage).
inline std::vector<double> pseudo_density(const PWTDM& rho)
{
    std::vector<double> out(rho.r00.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = rho.r00[i] + rho.r11[i];
    return out;
}

inline std::vector<double> coherence_magnitude(const PWTDM& rho)
{
    require(rho.basis == Basis::adiabatic, "coherence_magnitude expects an adiabatic density");
    std::vector<double> out(rho.r01.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(rho.r01[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Field dumps

/// Header of the binary field format.
///
/// Layout: ASCII lines `QLABFIELD 1`, `name=`, `basis=`, `n_points=`, `dr=`,
/// `dp=`, `r_min=`, `p_min=`, `END`, each newline terminated, followed by
/// n_points*n_points little-endian float64 values in row-major order (R index
/// outer, P index inner).
struct FieldHeader {
    std::string name;
    std::string basis;
    std::size_t n_points = 0;
    double dr = 0.0, dp = 0.0, r_min = 0.0, p_min = 0.0;
};

inline void write_field_binary(std::ostream& os, const std::vector<double>& field, const PhaseSpaceGrid& g, const std::string& name,
                               Basis basis)
{
    require(field.size() == g.n_points * g.n_points, "field size does not match the grid");
    std::ostringstream hdr;
    hdr << std::setprecision(17) << "QLABFIELD 1\nname=" << name << "\nbasis=" << to_string(basis) << "\nn_points=" << g.n_points
        << "\ndr=" << g.dr << "\ndp=" << g.dp << "\nr_min=" << g.r_values.front() << "\np_min=" << g.p_values.front() << "\nEND\n";
    const std::string s = hdr.str();
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
    static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");
    os.write(reinterpret_cast<const char*>(field.data()), static_cast<std::streamsize>(field.size() * sizeof(double)));
}

inline std::vector<double> read_field_binary(std::istream& is, FieldHeader& h)
{
    std::string line;
    std::getline(is, line);
    if (line != "QLABFIELD 1") throw InvalidInput("not a field dump");
    while (std::getline(is, line) && line != "END") {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InvalidInput("malformed field header line: " + line);
        const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
        if (k == "name") h.name = v;
        else if (k == "basis") h.basis = v;
        else if (k == "n_points") h.n_points = std::stoul(v);
        else if (k == "dr") h.dr = std::stod(v);
        else if (k == "dp") h.dp = std::stod(v);
        else if (k == "r_min") h.r_min = std::stod(v);
        else if (k == "p_min") h.p_min = std::stod(v);
    }
    std::vector<double> field(h.n_points * h.n_points);
    is.read(reinterpret_cast<char*>(field.data()), static_cast<std::streamsize>(field.size() * sizeof(double)));
    if (!is) throw InvalidInput("truncated field dump");
    return field;
}

/// CSV `R,P,value`, R outer; `stride` thins both axes for plotting.
inline void write_field_csv(std::ostream& os, const std::vector<double>& field, const PhaseSpaceGrid& g, const std::string& name,
                            std::size_t stride = 1)
{
    require(stride >= 1, "stride must be positive");
    os << std::setprecision(12) << "# field=" << name << " n_points=" << g.n_points << " stride=" << stride << "\nR,P,value\n";
    for (std::size_t m = 0; m < g.n_points; m += stride)
        for (std::size_t k = 0; k < g.n_points; k += stride)
            os << g.r_values[m] << ',' << g.p_values[k] << ',' << field[m * g.n_points + k] << '\n';
}

} // namespace qlab
