/// @file constmodel.hpp
/// @brief Constant-coupling model: exact momentum-space TDSE solution, exact
/// nonlocal PWTDM evolution, momentum-marginal QCLE solver and perturbative marginals.
///
/// Marginal vectors are ordered (eta0, eta_r, eta_i, eta1) with
/// eta_r + i eta_i the momentum marginal of the 10 coherence.
/// Perturbative formulas work in t~ = E t / hbar and P~ = P / sigma_p,
/// converting at the interface.

#pragma once

#include "core.hpp"
#include "fft.hpp"
#include "grid.hpp"
#include "models.hpp"
#include "wigner.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace qlab {

struct ConstParams {
    double d_coupling = 1.0; ///< D (1/length)
    double gap = 0.05;       ///< E (energy)
    double mass = 2000.0;
    double p0 = 20.0;
    double sigma_p = 1.0;
    double r0 = 0.0;
    double hbar = 1.0;

    double c1() const { return hbar * d_coupling / sigma_p; }
    double c2() const { return sigma_p * sigma_p / (gap * mass); }
    double sigma_r() const { return hbar / (2.0 * sigma_p); }
    double t_tilde(double t) const { return gap * t / hbar; }
    double p_tilde(double p) const { return p / sigma_p; }
    double r_tilde(double r) const { return r / sigma_r(); }
    /// Momentum shift hbar D carried by the coupling.
    double kick() const { return hbar * d_coupling; }

    ModelSpec model() const
    {
        ModelSpec m = ModelSpec::constant_model(d_coupling, gap, mass);
        m.hbar = hbar;
        return m;
    }
    GaussianSpec packet(double theta) const { return GaussianSpec::from_sigma_p(r0, p0, sigma_p, theta, hbar); }
    void validate() const
    {
        require(d_coupling >= 0.0 && gap >= 0.0, "D and E must be non-negative");
        require(mass > 0.0 && sigma_p > 0.0 && hbar > 0.0, "mass, sigma_p and hbar must be positive");
        require(std::isfinite(p0) && std::isfinite(r0), "packet centre must be finite");
    }
};

/// Regime in which the momentum-derivative terms dominate: c1 exceeds both
/// e and the P-multiplication scale hbar D |P0| / (E M) by a factor of ten.
inline bool large_coupling_regime(const ConstParams& p)
{
    const double mul_scale = p.hbar * p.d_coupling * std::abs(p.p0) / (p.gap * p.mass);
    return p.c1() >= 10.0 * std::max(std::exp(1.0), mul_scale);
}

using Vec4 = std::array<double, 4>;
using Mat4 = std::array<Vec4, 4>;

/// Four momentum marginals on one P axis.
struct MarginalVector {
    std::vector<double> p;
    std::array<std::vector<double>, 4> eta;

    MarginalVector() = default;
    explicit MarginalVector(std::vector<double> axis) : p(std::move(axis))
    {
        for (auto& e : eta) e.assign(p.size(), 0.0);
    }
    std::size_t size() const { return p.size(); }
    std::vector<double> total() const
    {
        std::vector<double> t(p.size());
        for (std::size_t n = 0; n < p.size(); ++n) t[n] = eta[0][n] + eta[3][n];
        return t;
    }
    /// Trapezoidal integral of one component.
    double integral(int c) const
    {
        double s = 0.0;
        for (std::size_t n = 1; n < p.size(); ++n) s += 0.5 * (eta[c][n] + eta[c][n - 1]) * (p[n] - p[n - 1]);
        return s;
    }
    double population() const { return integral(0) + integral(3); }
};

/// Uniform momentum axis [p_min, p_max] with n points.
inline std::vector<double> uniform_axis(double p_min, double p_max, std::size_t n)
{
    require(n >= 2 && p_max > p_min, "axis needs at least two points and p_max > p_min");
    std::vector<double> p(n);
    const double h = (p_max - p_min) / static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k) p[k] = p_min + static_cast<double>(k) * h;
    return p;
}

namespace detail {

inline double axis_spacing(const std::vector<double>& p)
{
    require(p.size() >= 2, "axis needs at least two points");
    const double h = p[1] - p[0];
    for (std::size_t k = 2; k < p.size(); ++k)
        require(std::abs(p[k] - p[k - 1] - h) <= 1e-9 * std::abs(h), "momentum axis must be uniform");
    require(h > 0.0, "momentum axis must be increasing");
    return h;
}

inline void check_support(const ConstParams& p, double p_lo, double p_hi)
{
    const double reach = p.kick() + 5.0 * p.sigma_p;
    if (p.p0 - reach < p_lo || p.p0 + reach > p_hi)
        throw BoundaryViolation("P0 +- hbar D +- 5 sigma_p exceeds the momentum grid");
}

/// eta(P, 0) components for the packet psi0 (cos theta |0> + sin theta |1>).
inline Vec4 initial_marginal_at(const ConstParams& p, double theta, double pv)
{
    const double n0 = normal_pdf(pv, p.p0, p.sigma_p);
    const double np = normal_pdf(pv, p.p0 + p.kick(), p.sigma_p);
    const double nm = normal_pdf(pv, p.p0 - p.kick(), p.sigma_p);
    const double c2t = std::cos(2.0 * theta), s2t = std::sin(2.0 * theta);
    return {0.25 * (2.0 * c2t * n0 + np + nm), 0.5 * s2t * n0, 0.25 * (np - nm), 0.25 * (-2.0 * c2t * n0 + np + nm)};
}

} // namespace detail

/// Closed-form initial marginals on an arbitrary momentum axis.
inline MarginalVector const_initial_marginals(const ConstParams& params, double theta, const std::vector<double>& p_values)
{
    params.validate();
    MarginalVector out(p_values);
    for (std::size_t n = 0; n < p_values.size(); ++n) {
        const Vec4 v = detail::initial_marginal_at(params, theta, p_values[n]);
        for (int c = 0; c < 4; ++c) out.eta[c][n] = v[c];
    }
    return out;
}

struct ConstInitialState {
    PWTDM rho;           ///< adiabatic
    MarginalVector eta;  ///< on grid.p_values
};

/// Adiabatic PWTDM of psi0(R)(cos theta |0(R)> + sin theta |1(R)>) in closed form.
inline ConstInitialState const_initial_state(const ConstParams& params, double theta, const PhaseSpaceGrid& grid)
{
    params.validate();
    require(std::abs(grid.hbar - params.hbar) <= 1e-15 * params.hbar, "grid and parameters disagree on hbar");
    detail::check_support(params, grid.p_min(), grid.p_max());
    const double sr = params.sigma_r();
    if (std::abs(params.r0) + 5.0 * sr > grid.r_max) throw BoundaryViolation("packet support |r0| + 5 sigma_r exceeds r_max");
    ConstInitialState st{PWTDM(grid, Basis::adiabatic), const_initial_marginals(params, theta, grid.p_values)};
    const std::size_t n = grid.n_points;
    const double c2t = std::cos(2.0 * theta), s2t = std::sin(2.0 * theta);
    std::vector<double> n0(n), np(n), nm(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double pv = grid.p_values[k];
        n0[k] = normal_pdf(pv, params.p0, params.sigma_p);
        np[k] = normal_pdf(pv, params.p0 + params.kick(), params.sigma_p);
        nm[k] = normal_pdf(pv, params.p0 - params.kick(), params.sigma_p);
    }
    for (std::size_t m = 0; m < n; ++m) {
        const double nr = 0.25 * normal_pdf(grid.r_values[m], params.r0, sr);
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t i = st.rho.idx(m, k);
            st.rho.r00[i] = nr * (2.0 * c2t * n0[k] + np[k] + nm[k]);
            st.rho.r11[i] = nr * (-2.0 * c2t * n0[k] + np[k] + nm[k]);
            // rho10 = nr (2 sin 2theta N0 + i (N+ - N-)); stored as rho01 = conj(rho10)
            st.rho.r01[i] = nr * cplx(2.0 * s2t * n0[k], -(np[k] - nm[k]));
        }
    }
    return st;
}

// ---------------------------------------------------------------------------
// Exact Schroedinger dynamics in the Fourier variable xi

using Spinor = std::array<cplx, 2>;

/// Fourier-transformed initial adiabatic amplitudes (cos theta, sin theta) phi(xi).
inline std::vector<Spinor> const_initial_fourier(const std::vector<double>& xi, const ConstParams& p, double theta)
{
    p.validate();
    std::vector<Spinor> out(xi.size());
    const double pref = std::pow(2.0 * pi, -0.25) / std::sqrt(p.sigma_p);
    for (std::size_t k = 0; k < xi.size(); ++k) {
        const double z = (xi[k] - p.p0) / (2.0 * p.sigma_p);
        const cplx g = pref * std::exp(cplx(-z * z, -p.r0 * (xi[k] - p.p0) / p.hbar));
        out[k] = {std::cos(theta) * g, std::sin(theta) * g};
    }
    return out;
}

/// Closed-form propagation of the Fourier amplitudes. The overall phase
/// factor exp(-i t (xi^2 + hbar^2 D^2 + E^2 M^2) / (2 M hbar)) is kept as
/// published; it is common to both components and cancels in densities.
inline std::vector<Spinor> const_exact_momentum_solution(const std::vector<double>& xi, double t, const ConstParams& p,
                                                          const std::vector<Spinor>& phi0)
{
    p.validate();
    require(xi.size() == phi0.size(), "xi and phi0 sizes differ");
    const double hb = p.hbar, d = p.d_coupling, em = p.gap * p.mass;
    std::vector<Spinor> out(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k) {
        const double x = xi[k];
        const double zeta = std::sqrt(4.0 * hb * hb * d * d * x * x + em * em);
        const double tau = zeta * t / (2.0 * p.mass * hb);
        const cplx phase = std::polar(1.0, -t * (x * x + hb * hb * d * d + em * em) / (2.0 * p.mass * hb));
        const double c = std::cos(tau), s = std::sin(tau);
        if (zeta == 0.0) {
            out[k] = {phase * phi0[k][0], phase * phi0[k][1]};
            continue;
        }
        const cplx a00(c, em * s / zeta), a11(c, -em * s / zeta);
        const double a01 = -2.0 * hb * d * x * s / zeta;
        out[k] = {phase * (a00 * phi0[k][0] + a01 * phi0[k][1]), phase * (-a01 * phi0[k][0] + a11 * phi0[k][1])};
    }
    return out;
}

/// Adaptive Dormand-Prince integration of i hbar dphi/dt = H(xi) phi per xi.
/// The scalar part of H is removed exactly; the 2x2 remainder is integrated.
inline std::vector<Spinor> const_ode_oracle(const std::vector<double>& xi, double t, const ConstParams& p,
                                            const std::vector<Spinor>& phi0, double tol = 1e-13)
{
    namespace ode = boost::numeric::odeint;
    p.validate();
    require(xi.size() == phi0.size(), "xi and phi0 sizes differ");
    using State = std::array<double, 4>;
    std::vector<Spinor> out(xi.size());
    const double hb = p.hbar, d = p.d_coupling, m = p.mass;
    double peak = 1e-300;
    for (const auto& f : phi0) peak = std::max(peak, std::norm(f[0]) + std::norm(f[1]));
    for (std::size_t k = 0; k < xi.size(); ++k) {
        const double x = xi[k];
        const double h0 = (hb * hb * d * d + x * x) / (2.0 * m), h1 = h0 + p.gap, v = hb * d * x / m;
        // H = h0 + [[0, -i v], [i v, E]]
        const double e = h1 - h0;
        auto rhs = [&](const State& s, State& ds, double) {
            const cplx a(s[0], s[1]), b(s[2], s[3]);
            const cplx da = -I / hb * (-I * v * b);
            const cplx db = -I / hb * (I * v * a + e * b);
            ds = {da.real(), da.imag(), db.real(), db.imag()};
        };
        State s = {phi0[k][0].real(), phi0[k][0].imag(), phi0[k][1].real(), phi0[k][1].imag()};
        const double n0 = s[0] * s[0] + s[1] * s[1] + s[2] * s[2] + s[3] * s[3];
        if (t != 0.0) {
            const double rate = (std::abs(e) + 2.0 * std::abs(v)) / hb;
            const double dt0 = std::min(std::abs(t), 0.1 / std::max(rate, 1e-300));
            ode::integrate_adaptive(ode::make_controlled<ode::runge_kutta_dopri5<State>>(tol, tol), rhs, s, 0.0, t, dt0);
        }
        const double n1 = s[0] * s[0] + s[1] * s[1] + s[2] * s[2] + s[3] * s[3];
        if (!(std::abs(n1 - n0) <= 1e4 * tol * peak))
            throw NumericalFailure("ODE oracle tolerance not met (norm drift)");
        const cplx ph = std::polar(1.0, -h0 * t / hb);
        out[k] = {ph * cplx(s[0], s[1]), ph * cplx(s[2], s[3])};
    }
    return out;
}

/// Adiabatic position-space wavefunction at time t on the grid, from the
/// exact Fourier solution sampled on the grid momenta.
inline Wavefunction const_exact_wavefunction(const ConstParams& p, double theta, const PhaseSpaceGrid& grid, double t)
{
    detail::check_support(p, grid.p_min(), grid.p_max());
    const auto phi = const_exact_momentum_solution(grid.p_values, t, p, const_initial_fourier(grid.p_values, p, theta));
    const std::size_t n = grid.n_points, len = 2 * n - 1;
    const auto h = static_cast<std::ptrdiff_t>(grid.half());
    const auto L = static_cast<std::ptrdiff_t>(len);
    auto wrap = [&](std::ptrdiff_t j) { return static_cast<std::size_t>((j % L + L) % L); };
    Wavefunction psi{Basis::adiabatic, grid, std::vector<cplx>(2 * n)};
    AlignedBuffer<cplx> buf(len);
    const double pref = grid.dp / std::sqrt(2.0 * pi * grid.hbar);
    for (int s = 0; s < 2; ++s) {
        std::fill(buf.data(), buf.data() + len, cplx{});
        for (std::ptrdiff_t j = -h; j <= h; ++j) buf[wrap(j)] = phi[static_cast<std::size_t>(j + h)][s];
        fft_lines(buf.data(), buf.data(), static_cast<int>(len), 1, false);
        // psi(R_m) = pref sum_j phi_j exp(i (p0 + j dp) R_m / hbar), dp dr = 2 pi hbar / len
        for (std::ptrdiff_t m = -h; m <= h; ++m) {
            const double r = static_cast<double>(m) * grid.dr;
            psi(s, static_cast<std::size_t>(m + h)) = pref * std::polar(1.0, grid.p0 * r / grid.hbar) * buf[wrap(m)];
        }
    }
    return psi;
}

/// Adiabatic PWTDM of the exact solution (transform in the diabatic basis, then rotate).
inline PWTDM const_exact_pwtdm(const ConstParams& p, double theta, const PhaseSpaceGrid& grid, double t)
{
    const ModelSpec model = p.model();
    const auto prof = coupling_profile(model, grid);
    const Wavefunction dia = change_basis(const_exact_wavefunction(p, theta, grid, t), prof, Basis::diabatic);
    return rotate_basis(partial_wigner_transform(dia), prof, Basis::adiabatic);
}

/// Exact total momentum density sum_s |phi_s^dia(P)|^2. The diabatic
/// amplitudes follow from the adiabatic Fourier amplitudes shifted by +-hbar D.
inline std::vector<double> const_exact_total_marginal(const std::vector<double>& p_values, double t, const ConstParams& p,
                                                      double theta)
{
    const std::size_t n = p_values.size();
    std::vector<double> up(n), dn(n);
    for (std::size_t k = 0; k < n; ++k) {
        up[k] = p_values[k] + p.kick();
        dn[k] = p_values[k] - p.kick();
    }
    const auto fu = const_exact_momentum_solution(up, t, p, const_initial_fourier(up, p, theta));
    const auto fd = const_exact_momentum_solution(dn, t, p, const_initial_fourier(dn, p, theta));
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        // cos(DR) psi -> (phi(P - hD) + phi(P + hD)) / 2, sin(DR) psi -> (phi(P - hD) - phi(P + hD)) / 2i
        const cplx c0 = 0.5 * (fd[k][0] + fu[k][0]), s0 = -0.5 * I * (fd[k][0] - fu[k][0]);
        const cplx c1 = 0.5 * (fd[k][1] + fu[k][1]), s1 = -0.5 * I * (fd[k][1] - fu[k][1]);
        out[k] = std::norm(c0 + s1) + std::norm(c1 - s0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// QCLE momentum marginals by the method of lines

namespace detail {

/// Spectral d/dP of two real lines at once (packed as real and imaginary parts).
class SpectralDerivative {
public:
    explicit SpectralDerivative(std::size_t n, double h) : n_(n), buf_(n), k_(n)
    {
        const auto nn = static_cast<std::ptrdiff_t>(n);
        for (std::ptrdiff_t j = 0; j < nn; ++j) {
            const std::ptrdiff_t f = j <= (nn - 1) / 2 ? j : j - nn;
            k_[static_cast<std::size_t>(j)] = 2.0 * pi * static_cast<double>(f) / (static_cast<double>(n) * h);
        }
        if (n % 2 == 0) k_[n / 2] = 0.0;
    }
    void apply(const double* a, const double* b, double* da, double* db)
    {
        for (std::size_t j = 0; j < n_; ++j) buf_[j] = cplx(a[j], b[j]);
        fft_lines(buf_.data(), buf_.data(), static_cast<int>(n_), 1, true);
        const double s = 1.0 / static_cast<double>(n_);
        for (std::size_t j = 0; j < n_; ++j) buf_[j] = cmul(buf_[j], cplx(0.0, k_[j] * s));
        fft_lines(buf_.data(), buf_.data(), static_cast<int>(n_), 1, false);
        for (std::size_t j = 0; j < n_; ++j) {
            da[j] = buf_[j].real();
            db[j] = buf_[j].imag();
        }
    }

private:
    std::size_t n_;
    AlignedBuffer<cplx> buf_;
    std::vector<double> k_;
};

} // namespace detail

/// Largest RK4-stable step for the marginal equations on a given axis.
inline double marginal_ode_timestep(const ConstParams& p, const std::vector<double>& p_values, double safety = 0.8)
{
    const double h = detail::axis_spacing(p_values);
    const double pmax = std::max(std::abs(p_values.front()), std::abs(p_values.back()));
    const double lam = p.d_coupling * p.gap * pi / h + p.gap / p.hbar + 2.0 * p.d_coupling * pmax / p.mass;
    return safety * 2.0 * std::sqrt(2.0) / std::max(lam, 1e-300);
}

struct MarginalSeries {
    std::vector<double> times;
    std::vector<MarginalVector> snapshots;
};

/// RK4 integration of the QCLE momentum-marginal equations with spectral d/dP.
/// Snapshots are taken at each requested time (sorted, within [0, t_final]);
/// dt <= 0 selects marginal_ode_timestep. Steps are shortened to land on
/// snapshot times exactly.
inline MarginalSeries const_marginal_qcle_solve(const MarginalVector& eta0, const ConstParams& p, double t_final, double dt,
                                                std::vector<double> snapshot_times = {})
{
    p.validate();
    const std::size_t n = eta0.size();
    const double h = detail::axis_spacing(eta0.p);
    require(p.sigma_p / h >= 8.0 - 1e-9, "momentum axis must resolve sigma_p with at least 8 points");
    require(t_final >= 0.0, "t_final must be non-negative");
    const double dt_max = marginal_ode_timestep(p, eta0.p, 1.0);
    if (dt <= 0.0) dt = 0.8 * dt_max;
    if (dt > dt_max) throw NumericalFailure("time step exceeds the RK4 stability bound for this momentum axis");
    std::sort(snapshot_times.begin(), snapshot_times.end());
    if (snapshot_times.empty() || snapshot_times.back() < t_final) snapshot_times.push_back(t_final);

    detail::SpectralDerivative deriv(n, h);
    const double de = p.d_coupling * p.gap, w = p.gap / p.hbar;
    std::vector<double> dpm(n);
    for (std::size_t k = 0; k < n; ++k) dpm[k] = p.d_coupling * eta0.p[k] / p.mass;
    std::vector<double> tot(n), dr_(n), dtot(n);
    auto rhs = [&](const std::array<std::vector<double>, 4>& y, std::array<std::vector<double>, 4>& f) {
        for (std::size_t k = 0; k < n; ++k) tot[k] = y[0][k] + y[3][k];
        deriv.apply(y[1].data(), tot.data(), dr_.data(), dtot.data());
        for (std::size_t k = 0; k < n; ++k) {
            const double er = y[1][k];
            f[0][k] = -2.0 * dpm[k] * er + de * dr_[k];
            f[1][k] = dpm[k] * (y[0][k] - y[3][k]) + 0.5 * de * dtot[k] + w * y[2][k];
            f[2][k] = -w * er;
            f[3][k] = 2.0 * dpm[k] * er + de * dr_[k];
        }
    };
    MarginalSeries out;
    MarginalVector cur = eta0;
    std::array<std::vector<double>, 4> k1, k2, k3, k4, tmp;
    for (auto* a : {&k1, &k2, &k3, &k4, &tmp})
        for (auto& v : *a) v.assign(n, 0.0);
    double t = 0.0;
    double pop = cur.population();
    for (double ts : snapshot_times) {
        require(ts >= 0.0 && ts <= t_final + 1e-12 * std::max(1.0, t_final), "snapshot time outside [0, t_final]");
        while (t < ts - 1e-12 * std::max(1.0, ts)) {
            const double hstep = std::min(dt, ts - t);
            auto& y = cur.eta;
            rhs(y, k1);
            for (int c = 0; c < 4; ++c)
                for (std::size_t k = 0; k < n; ++k) tmp[c][k] = y[c][k] + 0.5 * hstep * k1[c][k];
            rhs(tmp, k2);
            for (int c = 0; c < 4; ++c)
                for (std::size_t k = 0; k < n; ++k) tmp[c][k] = y[c][k] + 0.5 * hstep * k2[c][k];
            rhs(tmp, k3);
            for (int c = 0; c < 4; ++c)
                for (std::size_t k = 0; k < n; ++k) tmp[c][k] = y[c][k] + hstep * k3[c][k];
            rhs(tmp, k4);
            for (int c = 0; c < 4; ++c)
                for (std::size_t k = 0; k < n; ++k)
                    y[c][k] += hstep / 6.0 * (k1[c][k] + 2.0 * k2[c][k] + 2.0 * k3[c][k] + k4[c][k]);
            t += hstep;
            const double pn = cur.population();
            if (!std::isfinite(pn) || std::abs(pn - pop) > 1e-6 * std::max(std::abs(pop), 1e-300))
                throw NumericalFailure("marginal solver unstable (population drift above 1e-6 per step)");
            pop = pn;
        }
        t = ts;
        out.times.push_back(ts);
        out.snapshots.push_back(cur);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Exact nonlocal PWTDM evolution

/// Lattice with dp = hbar D / ell so that P +- hbar D are grid nodes.
inline PhaseSpaceGrid nonlocal_grid(const ConstParams& p, int ell, std::size_t n_points)
{
    require(ell > 0 && p.d_coupling > 0.0, "nonlocal grid needs ell > 0 and D > 0");
    const double dp = p.kick() / ell;
    const double dr = 2.0 * pi * p.hbar / ((2.0 * static_cast<double>(n_points) - 1.0) * dp);
    return make_grid(n_points, dr, p.p0, p.hbar);
}

/// Number of momentum cells spanned by hbar D; rejects grids where it is not an integer.
inline std::size_t nonlocal_shift(const ConstParams& p, const PhaseSpaceGrid& grid)
{
    const double q = p.kick() / grid.dp;
    const double l = std::round(q);
    if (l < 1.0 || std::abs(q - l) > 1e-12 * std::max(1.0, q))
        throw InvalidInput("hbar D is not an integer multiple of dp");
    return static_cast<std::size_t>(l);
}

/// One explicit RK4 step of the exact nonlocal equations for the adiabatic PWTDM.
/// Momentum-shifted values beyond the grid are taken as zero.
inline PWTDM const_nonlocal_step(const PWTDM& rho, const ConstParams& p, double dt)
{
    p.validate();
    require(rho.basis == Basis::adiabatic, "nonlocal step needs an adiabatic PWTDM");
    const auto& g = rho.grid;
    const std::size_t n = g.n_points, l = nonlocal_shift(p, g);
    const double e4 = p.gap / (4.0 * p.hbar), e2 = p.gap / (2.0 * p.hbar);

    // spectral d/dR along columns: R index has stride n
    std::vector<double> kr(n);
    {
        const auto nn = static_cast<std::ptrdiff_t>(n);
        for (std::ptrdiff_t j = 0; j < nn; ++j) {
            const std::ptrdiff_t f = j <= (nn - 1) / 2 ? j : j - nn;
            kr[static_cast<std::size_t>(j)] = 2.0 * pi * static_cast<double>(f) / (static_cast<double>(n) * g.dr);
        }
    }
    AlignedBuffer<cplx> ab(n * n), cb(n * n);
    auto d_dr = [&](const PWTDM& y, std::vector<double>& da, std::vector<double>& db, std::vector<cplx>& dc) {
        // line k (momentum index) holds the R profile
        for (std::size_t m = 0; m < n; ++m)
            for (std::size_t k = 0; k < n; ++k) {
                ab[k * n + m] = cplx(y.r00[m * n + k], y.r11[m * n + k]);
                cb[k * n + m] = y.r01[m * n + k];
            }
        fft_lines(ab.data(), ab.data(), static_cast<int>(n), static_cast<int>(n), true);
        fft_lines(cb.data(), cb.data(), static_cast<int>(n), static_cast<int>(n), true);
        const double s = 1.0 / static_cast<double>(n);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < n; ++j) {
                const cplx f(0.0, kr[j] * s);
                ab[k * n + j] = cmul(ab[k * n + j], f);
                cb[k * n + j] = cmul(cb[k * n + j], f);
            }
        fft_lines(ab.data(), ab.data(), static_cast<int>(n), static_cast<int>(n), false);
        fft_lines(cb.data(), cb.data(), static_cast<int>(n), static_cast<int>(n), false);
        for (std::size_t m = 0; m < n; ++m)
            for (std::size_t k = 0; k < n; ++k) {
                da[m * n + k] = ab[k * n + m].real();
                db[m * n + k] = ab[k * n + m].imag();
                dc[m * n + k] = cb[k * n + m];
            }
    };
    std::vector<double> da(n * n), db(n * n);
    std::vector<cplx> dc(n * n);
    auto rhs = [&](const PWTDM& y, PWTDM& f) {
        d_dr(y, da, db, dc);
        for (std::size_t m = 0; m < n; ++m) {
            const std::size_t row = m * n;
            auto s_at = [&](std::ptrdiff_t k) -> double {
                if (k < 0 || k >= static_cast<std::ptrdiff_t>(n)) return 0.0;
                return 2.0 * y.r01[row + static_cast<std::size_t>(k)].real();
            };
            auto t_at = [&](std::ptrdiff_t k) -> double {
                if (k < 0 || k >= static_cast<std::ptrdiff_t>(n)) return 0.0;
                return y.r00[row + static_cast<std::size_t>(k)] + y.r11[row + static_cast<std::size_t>(k)];
            };
            auto c_at = [&](std::ptrdiff_t k) -> cplx {
                if (k < 0 || k >= static_cast<std::ptrdiff_t>(n)) return {};
                return y.r01[row + static_cast<std::size_t>(k)];
            };
            for (std::size_t k = 0; k < n; ++k) {
                const std::size_t i = row + k;
                const auto kp = static_cast<std::ptrdiff_t>(k + l), km = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(l);
                const double pv = g.p_values[k], v = pv / p.mass, dpm = p.d_coupling * v;
                const double s = 2.0 * y.r01[i].real();
                const double ds = e4 * (s_at(kp) - s_at(km));
                f.r00[i] = ds - dpm * s - v * da[i];
                f.r11[i] = ds + dpm * s - v * db[i];
                f.r01[i] = e4 * (t_at(kp) - t_at(km)) + dpm * (y.r00[i] - y.r11[i]) - v * dc[i] + I * e2 * (c_at(kp) + c_at(km));
            }
        }
    };
    auto axpy = [&](const PWTDM& y, double h, const PWTDM& f, PWTDM& out) {
        for (std::size_t i = 0; i < n * n; ++i) {
            out.r00[i] = y.r00[i] + h * f.r00[i];
            out.r11[i] = y.r11[i] + h * f.r11[i];
            out.r01[i] = y.r01[i] + h * f.r01[i];
        }
    };
    PWTDM k1(g, rho.basis), k2(g, rho.basis), k3(g, rho.basis), k4(g, rho.basis), tmp(g, rho.basis);
    rhs(rho, k1);
    axpy(rho, 0.5 * dt, k1, tmp);
    rhs(tmp, k2);
    axpy(rho, 0.5 * dt, k2, tmp);
    rhs(tmp, k3);
    axpy(rho, dt, k3, tmp);
    rhs(tmp, k4);
    PWTDM out = rho;
    for (std::size_t i = 0; i < n * n; ++i) {
        out.r00[i] += dt / 6.0 * (k1.r00[i] + 2.0 * k2.r00[i] + 2.0 * k3.r00[i] + k4.r00[i]);
        out.r11[i] += dt / 6.0 * (k1.r11[i] + 2.0 * k2.r11[i] + 2.0 * k3.r11[i] + k4.r11[i]);
        out.r01[i] += dt / 6.0 * (k1.r01[i] + 2.0 * k2.r01[i] + 2.0 * k3.r01[i] + k4.r01[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Perturbative marginals

/// Total marginal when the momentum-derivative terms dominate:
/// eta(P, t) = (T(P+DEt) + T(P-DEt))/2 + eta_r(P+DEt) - eta_r(P-DEt), T = eta0 + eta1 at t = 0.
/// For theta = pi/4 this is the six-Gaussian form.
inline std::vector<double> pert_marginal_closed_form(const std::vector<double>& p_values, double t, const ConstParams& p,
                                                     double theta = pi / 4.0)
{
    p.validate();
    const double s = p.d_coupling * p.gap * t;
    std::vector<double> out(p_values.size());
    for (std::size_t k = 0; k < p_values.size(); ++k) {
        const Vec4 a = detail::initial_marginal_at(p, theta, p_values[k] + s);
        const Vec4 b = detail::initial_marginal_at(p, theta, p_values[k] - s);
        out[k] = 0.5 * (a[0] + a[3] + b[0] + b[3]) + a[1] - b[1];
    }
    return out;
}

/// eta(P~, 0) = sum_i w_i exp(-(P~ - P~_i)^2 / 2), centres in units of sigma_p.
struct GaussianMixture {
    std::vector<double> centers;
    std::vector<Vec4> weights;

    void validate() const
    {
        require(!centers.empty() && centers.size() == weights.size(), "mixture needs matching, non-empty centres and weights");
        for (std::size_t i = 0; i < centers.size(); ++i) {
            require(std::isfinite(centers[i]), "mixture centre must be finite");
            for (double w : weights[i]) require(std::isfinite(w), "mixture weight must be finite");
        }
    }
};

/// Initial marginals of const_initial_marginals as a unit-width mixture in P~.
inline GaussianMixture const_initial_mixture(const ConstParams& p, double theta)
{
    p.validate();
    const double nrm = 1.0 / (std::sqrt(2.0 * pi) * p.sigma_p);
    const double c2t = std::cos(2.0 * theta), s2t = std::sin(2.0 * theta);
    const double pc = p.p_tilde(p.p0), c1 = p.c1();
    GaussianMixture g;
    g.centers = {pc, pc + c1, pc - c1};
    g.weights = {Vec4{0.5 * c2t * nrm, 0.5 * s2t * nrm, 0.0, -0.5 * c2t * nrm}, Vec4{0.25 * nrm, 0.0, 0.25 * nrm, 0.25 * nrm},
                 Vec4{0.25 * nrm, 0.0, -0.25 * nrm, 0.25 * nrm}};
    return g;
}

namespace pert {

inline Mat4 mat_diff() { return {{{0, 1, 0, 0}, {0.5, 0, 0, 0.5}, {0, 0, 0, 0}, {0, 1, 0, 0}}}; }
inline Mat4 mat_rot() { return {{{0, 0, 0, 0}, {0, 0, 1, 0}, {0, -1, 0, 0}, {0, 0, 0, 0}}}; }
inline Mat4 mat_mul() { return {{{0, -1, 0, 0}, {0.5, 0, 0, -0.5}, {0, 0, 0, 0}, {0, 1, 0, 0}}}; }

inline Mat4 outer(const Vec4& a, const Vec4& b)
{
    Mat4 m{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) m[i][j] = a[i] * b[j];
    return m;
}

inline Vec4 mat_vec(const Mat4& m, const Vec4& v)
{
    Vec4 r{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r[i] += m[i][j] * v[j];
    return r;
}

/// Spectral projectors of the derivative matrix: eigenvalues +1, -1, 0.
inline std::array<Mat4, 3> projectors()
{
    const Mat4 mp = outer({0.5, 0.5, 0, 0.5}, {0.5, 1, 0, 0.5});
    const Mat4 mm = outer({0.5, -0.5, 0, 0.5}, {0.5, -1, 0, 0.5});
    Mat4 m0{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) m0[i][j] = (i == j ? 1.0 : 0.0) - mp[i][j] - mm[i][j];
    return {mp, mm, m0};
}
inline constexpr std::array<double, 3> eigen = {1.0, -1.0, 0.0};

inline double gauss(double u) { return std::exp(-0.5 * u * u); }

/// int_{u0}^{u1} exp(-u^2/2) du without cancellation in the tails.
inline double gauss_area(double u0, double u1)
{
    const double s = std::sqrt(pi / 2.0), a = u0 / std::sqrt(2.0), b = u1 / std::sqrt(2.0);
    if (a > 0.0 && b > 0.0) return s * (std::erfc(a) - std::erfc(b));
    if (a < 0.0 && b < 0.0) return s * (std::erfc(-b) - std::erfc(-a));
    return s * (std::erf(b) - std::erf(a));
}

/// int_{u0}^{u1} u^r exp(-u^2/2) du for r = 0..rmax.
inline std::array<double, 6> moment_areas(double u0, double u1, int rmax)
{
    std::array<double, 6> d{};
    d[0] = gauss_area(u0, u1);
    if (rmax >= 1) d[1] = gauss(u0) - gauss(u1);
    for (int r = 2; r <= rmax; ++r)
        d[r] = -(std::pow(u1, r - 1) * gauss(u1) - std::pow(u0, r - 1) * gauss(u0)) + (r - 1) * d[r - 2];
    return d;
}

/// I_q = int_0^t tau^q exp(-(a + b tau)^2 / 2) dtau.
inline double moment_line(int q, double a, double b, double t)
{
    if (b == 0.0) return std::pow(t, q + 1) / (q + 1) * gauss(a);
    const auto d = moment_areas(a, a + b * t, q);
    double s = 0.0, binom = 1.0;
    for (int r = q; r >= 0; --r) {
        // term C(q, r) (-a)^(q-r) d_r
        s += binom * std::pow(-a, q - r) * d[r];
        binom = binom * r / (q - r + 1);
    }
    return s / std::pow(b, q + 1);
}

/// K_q = int_0^t tau^q G(a + b tau) dtau with G(u) = int_0^u exp(-v^2/2) dv.
inline double erf_line(int q, double a, double b, double t)
{
    const double g_end = gauss_area(0.0, a + b * t);
    if (b == 0.0) return std::pow(t, q + 1) / (q + 1) * g_end;
    return std::pow(t, q + 1) / (q + 1) * g_end - b / (q + 1) * moment_line(q + 1, a, b, t);
}

/// J_{n,m} = int_0^t dtau int_0^tau dsigma tau^n sigma^m exp(-(a + b tau + c sigma)^2 / 2), m <= 1.
inline double moment_triangle(int n, int m, double a, double b, double c, double t)
{
    if (c == 0.0) return moment_line(n + m + 1, a, b, t) / (m + 1);
    const double dk = erf_line(n, a, b + c, t) - erf_line(n, a, b, t);
    if (m == 0) return dk / c;
    return (-moment_line(n, a, b + c, t) + moment_line(n, a, b, t) - a * dk -
            b * (erf_line(n + 1, a, b + c, t) - erf_line(n + 1, a, b, t))) /
           (c * c);
}

} // namespace pert

/// Cumulative perturbative marginals eta(0) + ... + eta(order) in the
/// large-c1 regime, where the momentum-derivative operator is the dominant
/// part and rotation plus P-multiplication are the perturbation. Zeroth
/// order is the three-way split by the derivative projectors; the
/// corrections are the Duhamel integrals evaluated in closed form through
/// Gaussian and error-function moments.
inline MarginalVector pert_marginal_large_coupling(int order, const std::vector<double>& p_values, double t, const ConstParams& p,
                                                   const GaussianMixture& mix)
{
    using namespace pert;
    p.validate();
    mix.validate();
    require(order >= 0 && order <= 2, "large-coupling order must be 0, 1 or 2");
    const double c1 = p.c1(), kap = 2.0 * c1 * p.c2(), tt = p.t_tilde(t);
    const auto proj = projectors();
    const Mat4 mr = mat_rot(), mm = mat_mul();
    MarginalVector out(p_values);
    const std::size_t nc = mix.centers.size();

    // projector chains applied to each weight vector
    struct Chain1 {
        Vec4 rot, mul;
    };
    struct Chain2 {
        Vec4 rr, rm, mr_, mmul;
    };
    std::vector<std::array<Vec4, 3>> zero(nc);
    std::vector<std::array<std::array<Chain1, 3>, 3>> one(nc);
    std::vector<std::array<std::array<std::array<Chain2, 3>, 3>, 3>> two(nc);
    for (std::size_t i = 0; i < nc; ++i)
        for (int j = 0; j < 3; ++j) {
            zero[i][j] = mat_vec(proj[j], mix.weights[i]);
            for (int k = 0; k < 3; ++k) {
                const Vec4 pk = mat_vec(proj[k], mix.weights[i]);
                one[i][j][k] = {mat_vec(proj[j], mat_vec(mr, pk)), mat_vec(proj[j], mat_vec(mm, pk))};
                for (int l = 0; l < 3; ++l) {
                    const Vec4 pl = mat_vec(proj[l], mix.weights[i]);
                    const Vec4 kr = mat_vec(proj[k], mat_vec(mr, pl)), km = mat_vec(proj[k], mat_vec(mm, pl));
                    two[i][j][k][l] = {mat_vec(proj[j], mat_vec(mr, kr)), mat_vec(proj[j], mat_vec(mr, km)), mat_vec(proj[j], mat_vec(mm, kr)),
                                       mat_vec(proj[j], mat_vec(mm, km))};
                }
            }
        }

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ip = 0; ip < static_cast<std::ptrdiff_t>(p_values.size()); ++ip) {
        const auto n = static_cast<std::size_t>(ip);
        const double pt = p.p_tilde(p_values[n]);
        Vec4 acc{};
        for (std::size_t i = 0; i < nc; ++i) {
            const double x = pt - mix.centers[i];
            for (int j = 0; j < 3; ++j) {
                const double sj = c1 * eigen[j];
                const double g0 = gauss(x + sj * tt);
                for (int c = 0; c < 4; ++c) acc[c] += zero[i][j][c] * g0;
                if (order < 1) continue;
                const double a = x + sj * tt, pj = pt + sj * tt;
                for (int k = 0; k < 3; ++k) {
                    const double sk = c1 * eigen[k], b = sk - sj;
                    const double i0 = moment_line(0, a, b, tt), i1 = moment_line(1, a, b, tt);
                    const double q = kap * (pj * i0 - sj * i1);
                    for (int c = 0; c < 4; ++c) acc[c] += one[i][j][k].rot[c] * i0 + one[i][j][k].mul[c] * q;
                    if (order < 2) continue;
                    for (int l = 0; l < 3; ++l) {
                        const double cc = c1 * eigen[l] - sk;
                        const double j00 = moment_triangle(0, 0, a, b, cc, tt), j10 = moment_triangle(1, 0, a, b, cc, tt);
                        const double j01 = moment_triangle(0, 1, a, b, cc, tt), j20 = moment_triangle(2, 0, a, b, cc, tt);
                        const double j11 = moment_triangle(1, 1, a, b, cc, tt);
                        const double q1 = pj * j00 - sj * j10;
                        const double q2 = pj * j00 + b * j10 - sk * j01;
                        const double q12 = pj * pj * j00 + pj * (b - sj) * j10 - pj * sk * j01 - sj * b * j20 + sj * sk * j11;
                        const auto& ch = two[i][j][k][l];
                        for (int c = 0; c < 4; ++c)
                            acc[c] += ch.rr[c] * j00 + kap * (ch.rm[c] * q2 + ch.mr_[c] * q1) + kap * kap * ch.mmul[c] * q12;
                    }
                }
            }
        }
        for (int c = 0; c < 4; ++c) out.eta[c][n] = acc[c];
    }
    return out;
}

/// Cumulative marginals in the small-c1 branch: derivative plus rotation are
/// solved exactly in Fourier space and P-multiplication is the perturbation.
/// p_values must be uniform and wide enough to hold the evolved marginals.
inline MarginalVector pert_marginal_fourier(int order, const std::vector<double>& p_values, double t, const ConstParams& p,
                                            double theta)
{
    using namespace pert;
    p.validate();
    require(order == 0 || order == 1, "Fourier-branch order must be 0 or 1");
    const std::size_t n = p_values.size();
    const double h = detail::axis_spacing(p_values) / p.sigma_p;
    const double c1 = p.c1(), c2 = p.c2(), tt = p.t_tilde(t);
    const MarginalVector eta0 = const_initial_marginals(p, theta, p_values);

    std::array<AlignedBuffer<cplx>, 4> spec;
    for (int c = 0; c < 4; ++c) {
        spec[c] = AlignedBuffer<cplx>(n);
        for (std::size_t k = 0; k < n; ++k) spec[c][k] = eta0.eta[c][k];
        fft_lines(spec[c].data(), spec[c].data(), static_cast<int>(n), 1, true);
    }
    std::vector<double> xi(n);
    for (std::size_t j = 0; j < n; ++j) {
        const auto jj = static_cast<std::ptrdiff_t>(j), nn = static_cast<std::ptrdiff_t>(n);
        const std::ptrdiff_t f = jj <= (nn - 1) / 2 ? jj : jj - nn;
        xi[j] = 2.0 * pi * static_cast<double>(f) / (static_cast<double>(n) * h);
    }
    {
        // aliasing guard: the initial spectrum must have decayed at the Nyquist bin
        double peak = 0.0;
        for (int c = 0; c < 4; ++c)
            for (std::size_t j = 0; j < n; ++j) peak = std::max(peak, std::abs(spec[c][j]));
        const std::size_t ny = n / 2;
        double edge = 0.0;
        for (int c = 0; c < 4; ++c) edge = std::max({edge, std::abs(spec[c][ny]), std::abs(spec[c][(ny + 1) % n])});
        if (edge > 1e-10 * peak) throw NumericalFailure("xi grid aliasing: spectrum not decayed at the Nyquist frequency");
    }

    using CMat4 = std::array<std::array<cplx, 4>, 4>;
    auto cm = [](const Mat4& a, cplx s) {
        CMat4 r{};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) r[i][j] = s * a[i][j];
        return r;
    };
    auto add = [](CMat4& a, const CMat4& b) {
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) a[i][j] += b[i][j];
    };
    auto mul = [](const Mat4& a, const Mat4& b) {
        Mat4 r{};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                for (int k = 0; k < 4; ++k) r[i][j] += a[i][k] * b[k][j];
        return r;
    };
    auto sum = [](const Mat4& a, const Mat4& b, double sb = 1.0) {
        Mat4 r{};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) r[i][j] = a[i][j] + sb * b[i][j];
        return r;
    };
    const Mat4 md = mat_diff(), mr = mat_rot(), mmu = mat_mul();
    const Mat4 dr_rd = sum(mul(md, mr), mul(mr, md)), dd = mul(md, md), rr = mul(mr, mr);
    const Mat4 mr_rm = sum(mul(mmu, mr), mul(mr, mmu)), md_dm = sum(mul(mmu, md), mul(md, mmu));
    const Mat4 ddm = mul(dd, mmu), dm = mul(md, mmu), rm = mul(mr, mmu);
    Mat4 id{};
    for (int i = 0; i < 4; ++i) id[i][i] = 1.0;

    auto kernel_apply = [&](const std::function<CMat4(double)>& kern) {
        std::array<AlignedBuffer<cplx>, 4> r;
        for (int c = 0; c < 4; ++c) r[c] = AlignedBuffer<cplx>(n);
        for (std::size_t j = 0; j < n; ++j) {
            const CMat4 k = kern(xi[j]);
            for (int a = 0; a < 4; ++a) {
                cplx s{};
                for (int b = 0; b < 4; ++b) s += k[a][b] * spec[b][j];
                r[a][j] = s;
            }
        }
        std::array<std::vector<double>, 4> out;
        for (int c = 0; c < 4; ++c) {
            fft_lines(r[c].data(), r[c].data(), static_cast<int>(n), 1, false);
            out[c].resize(n);
            for (std::size_t j = 0; j < n; ++j) out[c][j] = r[c][j].real() / static_cast<double>(n);
        }
        return out;
    };

    // order 0: exp(t (Mrot + i c1 xi Mdiff))
    const auto k0 = [&](double x) {
        const double z = std::sqrt(c1 * c1 * x * x + 1.0), s = std::sin(z * tt), oc = 1.0 - std::cos(z * tt);
        CMat4 k = cm(id, 1.0);
        add(k, cm(md, I * c1 * x * s / z));
        add(k, cm(mr, s / z));
        add(k, cm(dr_rd, I * c1 * x * oc / (z * z)));
        add(k, cm(sum(dd, rr), oc / (z * z)));
        add(k, cm(dd, -oc));
        return k;
    };
    MarginalVector out(p_values);
    const auto e0 = kernel_apply(k0);
    for (int c = 0; c < 4; ++c) out.eta[c] = e0[c];
    if (order == 1) {
        const auto k1 = [&](double x) {
            const double z = std::sqrt(c1 * c1 * x * x + 1.0), s = std::sin(z * tt), oc = 1.0 - std::cos(z * tt);
            CMat4 k = cm(mmu, s / z);
            add(k, cm(mr_rm, oc / (z * z)));
            add(k, cm(md_dm, I * c1 * x * oc / (z * z)));
            return k;
        };
        const auto k2 = [&](double x) {
            const double z = std::sqrt(c1 * c1 * x * x + 1.0), zt = z * tt, s = std::sin(zt), c = std::cos(zt), oc = 1.0 - c;
            const double z2 = z * z, z4 = z2 * z2;
            CMat4 k = cm(ddm, I * c1 * x * (s - zt * c) / (z2 * z));
            add(k, cm(dm, (oc + (z2 - 1.0) * (zt * s - oc)) / z4));
            add(k, cm(rm, I * c1 * x * (2.0 * oc - zt * s) / z4));
            return k;
        };
        const auto a = kernel_apply(k1), b = kernel_apply(k2);
        for (int c = 0; c < 4; ++c)
            for (std::size_t j = 0; j < n; ++j)
                out.eta[c][j] += 2.0 * c1 * c2 * (p.p_tilde(p_values[j]) * a[c][j] + c1 * b[c][j]);
    }
    double peak = 0.0, edge = 0.0;
    for (int c = 0; c < 4; ++c) {
        for (double v : out.eta[c]) peak = std::max(peak, std::abs(v));
        edge = std::max({edge, std::abs(out.eta[c].front()), std::abs(out.eta[c].back())});
    }
    if (edge > 1e-8 * peak) throw NumericalFailure("momentum window too narrow for the evolved marginals");
    return out;
}

/// CSV `P,eta0,eta_r,eta_i,eta1,total` with `# key=value` header lines.
inline void write_marginal_vector(std::ostream& os, const MarginalVector& v, const std::string& comment)
{
    os << std::setprecision(17);
    if (!comment.empty()) os << "# " << comment << '\n';
    os << "P,eta0,eta_r,eta_i,eta1,total\n";
    for (std::size_t k = 0; k < v.size(); ++k)
        os << v.p[k] << ',' << v.eta[0][k] << ',' << v.eta[1][k] << ',' << v.eta[2][k] << ',' << v.eta[3][k] << ','
           << v.eta[0][k] + v.eta[3][k] << '\n';
}

} // namespace qlab
