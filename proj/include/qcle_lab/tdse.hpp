/// @file tdse.hpp
/// @brief Exact propagation: split-operator stepping and DVR diagonalization.

#pragma once

#include "core.hpp"
#include "fft.hpp"
#include "grid.hpp"
#include "models.hpp"
#include "observables.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <vector>

namespace qlab {

/// Largest potential energy scale used by the timestep rule.
inline double potential_scale(const ModelSpec& model)
{
    return model.kind == ModelKind::dac ? model.dac.E0 : model.cst.E;
}

/// dt = hbar / (V_max + pi^2 hbar^2 / (2 M dr^2)).
inline double timestep(const ModelSpec& model, const PhaseSpaceGrid& grid)
{
    const double kin = pi * pi * model.hbar * model.hbar / (2.0 * model.mass * grid.dr * grid.dr);
    return model.hbar / (potential_scale(model) + kin);
}

/// Throws when more than `tolerance` of the position density lies beyond |R| = r_max - 5 sigma_r0.
inline void check_boundary(const std::vector<double>& density, const PhaseSpaceGrid& g, double sigma_r0, double tolerance = 1e-6)
{
    const double limit = g.r_max - 5.0 * sigma_r0;
    double total = 0.0, outside = 0.0;
    for (std::size_t m = 0; m < g.n_points; ++m) {
        total += density[m];
        if (std::abs(g.r_values[m]) > limit) outside += density[m];
    }
    if (outside > tolerance * total)
        throw BoundaryViolation("wavepacket reached the boundary zone |R| > " + std::to_string(limit) +
                                " (mass fraction " + std::to_string(outside / total) + ")");
}

/// Symmetric split step V/2 T V/2; V applied in the adiabatic basis.
class SplitOperator {
public:
    SplitOperator(const ModelSpec& model, const PhaseSpaceGrid& grid, double dt)
        : grid_(grid), dt_(dt), n_(grid.n_points), prof_(coupling_profile(model, grid)), ph0_(n_), ph1_(n_), kin_(n_), buf_(2 * n_)
    {
        const double hb = model.hbar;
        for (std::size_t m = 0; m < n_; ++m) {
            ph0_[m] = std::polar(1.0, -prof_.e0[m] * dt / (2.0 * hb));
            ph1_[m] = std::polar(1.0, -prof_.e1[m] * dt / (2.0 * hb));
        }
        // each FFT wavenumber is taken as its lattice alias nearest to p0 / hbar
        const double dk = 2.0 * pi / (static_cast<double>(n_) * grid.dr), period = 2.0 * pi / grid.dr;
        const double kc = grid.p0 / hb;
        for (std::size_t j = 0; j < n_; ++j) {
            double k = dk * static_cast<double>(j);
            k += period * std::round((kc - k) / period);
            kin_[j] = std::polar(1.0, -hb * k * k * dt / (2.0 * model.mass)) / static_cast<double>(n_);
        }
    }

    double dt() const { return dt_; }
    const CouplingProfile& profile() const { return prof_; }

    void step(Wavefunction& psi)
    {
        require(psi.basis == Basis::diabatic, "split_operator_step expects a diabatic wavefunction");
        require(psi.grid.same_as(grid_), "split_operator_step: grid mismatch");
        half_potential(psi);
        std::copy(psi.amp.begin(), psi.amp.end(), buf_.data());
        fft_lines(buf_.data(), buf_.data(), static_cast<int>(n_), 2, true);
        for (std::size_t j = 0; j < n_; ++j) {
            buf_[j] *= kin_[j];
            buf_[n_ + j] *= kin_[j];
        }
        fft_lines(buf_.data(), buf_.data(), static_cast<int>(n_), 2, false);
        std::copy(buf_.data(), buf_.data() + 2 * n_, psi.amp.begin());
        half_potential(psi);
    }

private:
    void half_potential(Wavefunction& psi) const
    {
        for (std::size_t m = 0; m < n_; ++m) {
            const Mat2& u = prof_.u[m];
            const cplx d0 = psi(0, m), d1 = psi(1, m);
            const cplx a0 = (u[0][0] * d0 + u[1][0] * d1) * ph0_[m];
            const cplx a1 = (u[0][1] * d0 + u[1][1] * d1) * ph1_[m];
            psi(0, m) = u[0][0] * a0 + u[0][1] * a1;
            psi(1, m) = u[1][0] * a0 + u[1][1] * a1;
        }
    }

    PhaseSpaceGrid grid_;
    double dt_;
    std::size_t n_;
    CouplingProfile prof_;
    std::vector<cplx> ph0_, ph1_, kin_;
    AlignedBuffer<cplx> buf_;
};

inline Wavefunction split_operator_step(const Wavefunction& psi, const ModelSpec& model, const PhaseSpaceGrid& grid, double dt)
{
    SplitOperator op(model, grid, dt);
    Wavefunction out = psi;
    op.step(out);
    return out;
}

/// <H> of a diabatic wavefunction: spectral kinetic energy plus <V>.
inline double wavefunction_energy(const Wavefunction& psi, const ModelSpec& model)
{
    require(psi.basis == Basis::diabatic, "wavefunction_energy expects a diabatic wavefunction");
    const auto& g = psi.grid;
    const std::size_t n = g.n_points;
    AlignedBuffer<cplx> buf(2 * n);
    std::copy(psi.amp.begin(), psi.amp.end(), buf.data());
    fft_lines(buf.data(), buf.data(), static_cast<int>(n), 2, true);
    const double dk = 2.0 * pi / (static_cast<double>(n) * g.dr);
    double kin = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double k = dk * (j <= n / 2 ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(n));
        kin += (std::norm(buf[j]) + std::norm(buf[n + j])) * model.hbar * model.hbar * k * k / (2.0 * model.mass);
    }
    kin *= g.dr / static_cast<double>(n);
    double pot = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
        const Mat2 v = diabatic_potential(model, g.r_values[m]);
        const cplx a = psi(0, m), b = psi(1, m);
        pot += v[0][0] * std::norm(a) + v[1][1] * std::norm(b) + 2.0 * v[0][1] * (std::conj(a) * b).real();
    }
    return kin + pot * g.dr;
}

/// Sinc-DVR propagator: H is diagonalized once, then psi(t) = C exp(-iEt) C^T psi0.
///
/// The kinetic diagonal is hbar^2 N^2 / (6 M dr^2) by default; `standard_diagonal`
/// switches to hbar^2 pi^2 / (6 M dr^2). The two differ by a multiple of the
/// identity, i.e. by a global phase of psi(t).
class Dvr {
public:
    Dvr(const ModelSpec& model, const PhaseSpaceGrid& grid, bool standard_diagonal = false, std::size_t budget = 4000)
        : grid_(grid), hbar_(model.hbar)
    {
        const std::size_t n = grid.n_points, dim = 2 * n;
        require(dim <= budget, "DVR matrix of dimension " + std::to_string(dim) + " exceeds the diagonalization budget");
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        const double scale = model.hbar * model.hbar / (model.mass * grid.dr * grid.dr);
        const double nd = static_cast<double>(n);
        diag_ = scale * (standard_diagonal ? pi * pi / 6.0 : nd * nd / 6.0);
        for (std::size_t s = 0; s < 2; ++s)
            for (std::size_t m = 0; m < n; ++m)
                for (std::size_t k = 0; k < n; ++k) {
                    const auto d = static_cast<double>(static_cast<std::ptrdiff_t>(m) - static_cast<std::ptrdiff_t>(k));
                    const double t = m == k ? diag_ : scale * ((static_cast<long>(d) % 2 == 0) ? 1.0 : -1.0) / (d * d);
                    h(static_cast<Eigen::Index>(s * n + m), static_cast<Eigen::Index>(s * n + k)) = t;
                }
        for (std::size_t m = 0; m < n; ++m) {
            const Mat2 v = diabatic_potential(model, grid.r_values[m]);
            for (std::size_t i = 0; i < 2; ++i)
                for (std::size_t j = 0; j < 2; ++j)
                    h(static_cast<Eigen::Index>(i * n + m), static_cast<Eigen::Index>(j * n + m)) += v[i][j];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
        if (es.info() != Eigen::Success) throw NumericalFailure("DVR diagonalization did not converge");
        evals_ = es.eigenvalues();
        evecs_ = es.eigenvectors();
    }

    const Eigen::VectorXd& eigenvalues() const { return evals_; }
    double kinetic_diagonal() const { return diag_; }

    Wavefunction propagate(const Wavefunction& psi0, double t) const
    {
        require(psi0.basis == Basis::diabatic, "dvr_propagate expects a diabatic wavefunction");
        require(psi0.grid.same_as(grid_), "dvr_propagate: grid mismatch");
        const auto dim = evals_.size();
        Eigen::VectorXd re(dim), im(dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            re(i) = psi0.amp[static_cast<std::size_t>(i)].real();
            im(i) = psi0.amp[static_cast<std::size_t>(i)].imag();
        }
        const Eigen::VectorXd cr = evecs_.transpose() * re, ci = evecs_.transpose() * im;
        Eigen::VectorXd nr(dim), ni(dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            const cplx c = cplx(cr(i), ci(i)) * std::polar(1.0, -evals_(i) * t / hbar_);
            nr(i) = c.real();
            ni(i) = c.imag();
        }
        const Eigen::VectorXd outr = evecs_ * nr, outi = evecs_ * ni;
        Wavefunction out{Basis::diabatic, grid_, std::vector<cplx>(static_cast<std::size_t>(dim))};
        for (Eigen::Index i = 0; i < dim; ++i) out.amp[static_cast<std::size_t>(i)] = cplx(outr(i), outi(i));
        return out;
    }

private:
    PhaseSpaceGrid grid_;
    double hbar_;
    double diag_ = 0.0;
    Eigen::VectorXd evals_;
    Eigen::MatrixXd evecs_;
};

inline Wavefunction dvr_propagate(const Wavefunction& psi0, const ModelSpec& model, const PhaseSpaceGrid& grid, double t)
{
    return Dvr(model, grid).propagate(psi0, t);
}

struct TdseOptions {
    double dt = 0.0;                       ///< 0 selects timestep()
    std::optional<double> stop_mean_r;     ///< stop once <R> >= this
    double t_final = 0.0;                  ///< used when stop_mean_r is unset
    std::size_t sample_every = 0;          ///< 0 selects ceil(T_est / (500 dt))
    std::vector<double> snapshot_times;
    std::size_t max_steps = 1000000;
    double sigma_r0 = 0.0;                 ///< boundary guard width; 0 disables the guard
};

struct TdseRun {
    Wavefunction psi;
    std::vector<ObservableRecord> records;
    std::vector<std::pair<double, Wavefunction>> snapshots;
    std::size_t steps = 0;
    double t = 0.0;
    double dt = 0.0;
};

inline ObservableRecord tdse_record(const Wavefunction& psi, const ModelSpec& model, const CouplingProfile& prof, double t)
{
    ObservableRecord r;
    r.t = t;
    r.trace = norm(psi);
    r.pop_diff = population_difference(psi, prof);
    r.mean_r = mean_position(psi);
    r.mean_p = mean_momentum(psi);
    r.energy = wavefunction_energy(psi, model);
    r.purity = 1.0;
    r.neg_r = negativity_index(position_density(psi));
    r.neg_p = negativity_index(momentum_density(psi));
    return r;
}

/// Split-operator run with sampling, snapshots and termination on <R>.
inline TdseRun run_tdse(const Wavefunction& psi0, const ModelSpec& model, const TdseOptions& opt)
{
    const PhaseSpaceGrid& g = psi0.grid;
    const double dt = opt.dt > 0.0 ? opt.dt : timestep(model, g);
    SplitOperator op(model, g, dt);
    TdseRun run{psi0, {}, {}, 0, 0.0, dt};
    double t_est = opt.t_final;
    if (opt.stop_mean_r) {
        const double v = std::max(std::abs(mean_momentum(psi0)) / model.mass, 1e-12);
        t_est = std::abs(*opt.stop_mean_r - mean_position(psi0)) / v;
    }
    const std::size_t every = opt.sample_every ? opt.sample_every : std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t_est / (500.0 * dt))));
    std::vector<bool> taken(opt.snapshot_times.size(), false);
    auto snap = [&]() {
        for (std::size_t i = 0; i < opt.snapshot_times.size(); ++i)
            if (!taken[i] && std::abs(run.t - opt.snapshot_times[i]) <= 0.5 * dt + 1e-12) {
                run.snapshots.emplace_back(run.t, run.psi);
                taken[i] = true;
            }
    };
    run.records.push_back(tdse_record(run.psi, model, op.profile(), 0.0));
    snap();
    while (true) {
        if (opt.stop_mean_r) {
            if (mean_position(run.psi) >= *opt.stop_mean_r) break;
        } else if (run.t >= opt.t_final - 0.5 * dt) {
            break;
        }
        if (run.steps >= opt.max_steps) throw NumericalFailure("max-step cap reached before termination");
        op.step(run.psi);
        ++run.steps;
        run.t = static_cast<double>(run.steps) * dt;
        snap();
        if (run.steps % every == 0) {
            run.records.push_back(tdse_record(run.psi, model, op.profile(), run.t));
            if (opt.sigma_r0 > 0.0) check_boundary(position_density(run.psi).values, g, opt.sigma_r0);
        }
    }
    if (run.records.back().t != run.t) run.records.push_back(tdse_record(run.psi, model, op.profile(), run.t));
    return run;
}

} // namespace qlab
