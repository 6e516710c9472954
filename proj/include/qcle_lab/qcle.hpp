/// @file qcle.hpp
/// @brief Adiabatic-basis QCLE propagation with the symmetric three-part Trotter step.
///
/// One step is Q(dt/2) R(dt/2) P(dt) R(dt/2) Q(dt/2):
///  - Q: pointwise conjugation by exp(-i V' dt / (2 hbar)), V' = diag(E) - i hbar (P/M) D;
///  - R: translation along R by P dt / (2M) on every momentum column;
///  - P: in the eigenbasis of F(R_m), element (k, l) translates along P by (f_k + f_l) dt / 2.

#pragma once

#include "core.hpp"
#include "fft.hpp"
#include "grid.hpp"
#include "models.hpp"
#include "observables.hpp"
#include "tdse.hpp"
#include "wigner.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace qlab {

struct QcleState {
    PWTDM rho;
    double t = 0.0;
    std::size_t step_count = 0;
};

class QclePropagator {
public:
    /// `pad` zero-pads the line transforms to the next 7-smooth length.
    QclePropagator(const ModelSpec& model, const PhaseSpaceGrid& grid, double dt, bool pad = true)
        : grid_(grid), dt_(dt), mass_(model.mass), n_(grid.n_points), prof_(coupling_profile(model, grid)),
          len_(pad ? next_smooth_length(grid.n_points) : grid.n_points), rshift_(n_, len_, grid.dr), pshift_(n_, len_, grid.dp),
          qu_(n_ * n_), qv_(n_ * n_), w_(n_), lam0_(n_), lam1_(n_)
    {
        const double hb = model.hbar;
        const double tau = dt / (2.0 * hb);
        for (std::size_t m = 0; m < n_; ++m) {
            const double bz = 0.5 * (prof_.e0[m] - prof_.e1[m]);
            for (std::size_t k = 0; k < n_; ++k) {
                const double by = hb * grid.p_values[k] * prof_.d01[m] / mass_;
                const double om = std::hypot(bz, by);
                const double c = std::cos(om * tau);
                const double sinc = om * tau > 1e-300 ? std::sin(om * tau) / om : tau;
                qu_[m * n_ + k] = cplx(c, -sinc * bz);
                qv_[m * n_ + k] = sinc * by;
            }
            const double f00 = prof_.f00[m], f11 = prof_.f11[m], f01 = prof_.f01[m];
            const double mean = 0.5 * (f00 + f11), rad = std::hypot(0.5 * (f00 - f11), f01);
            const double psi = 0.5 * std::atan2(2.0 * f01, f00 - f11);
            lam0_[m] = mean - rad;
            lam1_[m] = mean + rad;
            w_[m] = {{{-std::sin(psi), std::cos(psi)}, {std::cos(psi), std::sin(psi)}}};
        }
    }

    double dt() const { return dt_; }
    std::size_t transform_length() const { return len_; }
    const CouplingProfile& profile() const { return prof_; }

    void step(PWTDM& rho)
    {
        require(rho.basis == Basis::adiabatic, "qcle_step expects an adiabatic density");
        require(rho.grid.same_as(grid_), "qcle_step: grid mismatch");
        quantum_half(rho);
        advect_r_half(rho);
        force_p_full(rho);
        advect_r_half(rho);
        quantum_half(rho);
    }

    void step(QcleState& s)
    {
        step(s.rho);
        ++s.step_count;
        s.t = static_cast<double>(s.step_count) * dt_;
    }

    // The three factors are public so that tests can check each one on its own.

    void quantum_half(PWTDM& rho) const
    {
        const std::size_t total = n_ * n_;
#pragma omp parallel for schedule(static) num_threads(worker_threads())
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(total); ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            const cplx u = qu_[i];
            const double v = qv_[i];
            const double a = rho.r00[i], b = rho.r11[i];
            const cplx c = rho.r01[i];
            const double uu = std::norm(u), vv = v * v;
            const cplx uc = cmul(u, c);
            const double x = 2.0 * v * uc.real();
            rho.r00[i] = uu * a + vv * b - x;
            rho.r11[i] = vv * a + uu * b + x;
            rho.r01[i] = (v * (a - b)) * u + cmul(u, uc) - vv * std::conj(c);
        }
    }

    void advect_r_half(PWTDM& rho)
    {
        const double f = dt_ / (2.0 * mass_);
        const auto& p = grid_.p_values;
        auto delta = [&](std::size_t k) { return p[k] * f; };
        const auto stride = static_cast<std::ptrdiff_t>(n_);
        rshift_.shift_real_pair(rho.r00.data(), rho.r11.data(), n_, 1, stride, delta, delta);
        rshift_.shift_complex(rho.r01.data(), n_, 1, stride, delta);
    }

    void force_p_full(PWTDM& rho)
    {
        rotate_rows(rho, false);
        const auto stride = static_cast<std::ptrdiff_t>(n_);
        pshift_.shift_real_pair(rho.r00.data(), rho.r11.data(), n_, stride, 1, [&](std::size_t m) { return lam0_[m] * dt_; },
                                [&](std::size_t m) { return lam1_[m] * dt_; });
        pshift_.shift_complex(rho.r01.data(), n_, stride, 1, [&](std::size_t m) { return 0.5 * (lam0_[m] + lam1_[m]) * dt_; });
        rotate_rows(rho, true);
    }

private:
    void rotate_rows(PWTDM& rho, bool back) const
    {
#pragma omp parallel for schedule(static) num_threads(worker_threads())
        for (std::ptrdiff_t mm = 0; mm < static_cast<std::ptrdiff_t>(n_); ++mm) {
            const auto m = static_cast<std::size_t>(mm);
            const Mat2 w = back ? transpose(w_[m]) : w_[m];
            for (std::size_t k = 0; k < n_; ++k) {
                const std::size_t i = m * n_ + k;
                congruence(rho.r00[i], rho.r11[i], rho.r01[i], w);
            }
        }
    }

    PhaseSpaceGrid grid_;
    double dt_, mass_;
    std::size_t n_;
    CouplingProfile prof_;
    std::size_t len_;
    LineShifter rshift_, pshift_;
    std::vector<cplx> qu_;
    std::vector<double> qv_;
    std::vector<Mat2> w_;
    std::vector<double> lam0_, lam1_;
};

inline QcleState qcle_step(const QcleState& state, const ModelSpec& model, const PhaseSpaceGrid& grid, double dt)
{
    QclePropagator prop(model, grid, dt);
    QcleState out = state;
    prop.step(out);
    return out;
}

/// Fraction of |pseudo-density| within `width` columns of either momentum edge.
inline double momentum_edge_mass(const PWTDM& rho, std::size_t width = 8)
{
    const std::size_t n = rho.n();
    width = std::min(width, n / 2);
    double edge = 0.0, all = 0.0;
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t k = 0; k < n; ++k) {
            const double d = std::abs(rho.r00[m * n + k] + rho.r11[m * n + k]);
            all += d;
            if (k < width || k >= n - width) edge += d;
        }
    return all > 0.0 ? edge / all : 0.0;
}

struct QcleOptions {
    double dt = 0.0;                       ///< 0 selects timestep()
    std::optional<double> stop_mean_r;
    double t_final = 0.0;
    std::size_t sample_every = 0;          ///< 0 selects ceil(T_est / (500 dt))
    std::vector<double> snapshot_times;
    std::size_t max_steps = 1000000;
    double sigma_r0 = 0.0;                 ///< boundary guard width; 0 disables the R guard
    double trace_tolerance = 1e-8;
    double edge_tolerance = 1e-7;          ///< allowed momentum-edge mass fraction
    bool pad = true;
};

struct QcleRun {
    QcleState state;
    std::vector<ObservableRecord> records;
    std::vector<std::pair<double, PWTDM>> snapshots;
    double dt = 0.0;
    std::size_t transform_length = 0;
};

inline ObservableRecord qcle_record(const PWTDM& rho, const CouplingProfile& prof, double mass, double t)
{
    ObservableRecord r;
    r.t = t;
    r.trace = trace_integral(rho);
    r.pop_diff = population_difference(rho);
    const PhasePoint pp = mean_phase_point(rho);
    r.mean_r = pp.r;
    r.mean_p = pp.p;
    r.energy = energy(rho, prof, mass);
    r.purity = purity(rho);
    r.neg_r = negativity_index(marginal(rho, Axis::R));
    r.neg_p = negativity_index(marginal(rho, Axis::P));
    return r;
}

/// Steps until <R> >= stop_mean_r (or t_final), sampling observables and
/// taking snapshots. Throws on the step cap, trace drift or boundary contact.
inline QcleRun run_qcle(const PWTDM& rho0, const ModelSpec& model, const QcleOptions& opt)
{
    require(rho0.basis == Basis::adiabatic, "run_qcle expects an adiabatic density");
    const PhaseSpaceGrid& g = rho0.grid;
    const double dt = opt.dt > 0.0 ? opt.dt : timestep(model, g);
    QclePropagator prop(model, g, dt, opt.pad);
    QcleRun run{{rho0, 0.0, 0}, {}, {}, dt, prop.transform_length()};
    const double trace0 = trace_integral(rho0);
    require(std::abs(trace0 - 1.0) < 1e-6, "run_qcle expects a normalized density");
    const PhasePoint start = mean_phase_point(rho0);
    double t_est = opt.t_final;
    if (opt.stop_mean_r) t_est = std::abs(*opt.stop_mean_r - start.r) / std::max(std::abs(start.p) / model.mass, 1e-12);
    const std::size_t every = opt.sample_every ? opt.sample_every : std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t_est / (500.0 * dt))));
    std::vector<bool> taken(opt.snapshot_times.size(), false);
    auto snap = [&]() {
        for (std::size_t i = 0; i < opt.snapshot_times.size(); ++i)
            if (!taken[i] && std::abs(run.state.t - opt.snapshot_times[i]) <= 0.5 * dt + 1e-12) {
                run.snapshots.emplace_back(run.state.t, run.state.rho);
                taken[i] = true;
            }
    };
    auto sample = [&]() {
        run.records.push_back(qcle_record(run.state.rho, prop.profile(), model.mass, run.state.t));
        const auto& r = run.records.back();
        if (std::abs(r.trace - trace0) > opt.trace_tolerance)
            throw NumericalFailure("QCLE trace drift " + std::to_string(r.trace - trace0) + " exceeds tolerance");
        if (opt.sigma_r0 > 0.0) check_boundary(marginal(run.state.rho, Axis::R).values, g, opt.sigma_r0);
        if (momentum_edge_mass(run.state.rho) > opt.edge_tolerance) throw BoundaryViolation("density reached the momentum window edge");
    };
    sample();
    snap();
    while (true) {
        if (opt.stop_mean_r) {
            if (mean_phase_point(run.state.rho).r >= *opt.stop_mean_r) break;
        } else if (run.state.t >= opt.t_final - 0.5 * dt) {
            break;
        }
        if (run.state.step_count >= opt.max_steps) throw NumericalFailure("max-step cap reached before termination");
        prop.step(run.state);
        snap();
        if (run.state.step_count % every == 0) sample();
    }
    if (run.records.back().t != run.state.t) sample();
    return run;
}

} // namespace qlab
