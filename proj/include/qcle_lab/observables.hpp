/// @file observables.hpp
/// @brief Marginals, negativity index and expectation values of PWTDMs and wavefunctions.

#pragma once

#include "core.hpp"
#include "grid.hpp"
#include "models.hpp"
#include "wigner.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

namespace qlab {

enum class Axis { R, P };

/// Density along one axis. Labels: total, surface-0, surface-1,
/// coherence-real, coherence-imag (real/imaginary part of the 01 element).
struct Marginal {
    Axis axis = Axis::R;
    std::vector<double> coords;
    std::vector<double> values;
    double spacing = 0.0;
    std::string label = "total";
    Basis basis = Basis::diabatic;

    double integral() const
    {
        double s = 0.0;
        for (double v : values) s += v;
        return s * spacing;
    }
};

inline Marginal marginal(const PWTDM& rho, Axis axis, const std::string& label = "total")
{
    const std::size_t n = rho.n();
    const auto& g = rho.grid;
    Marginal out;
    out.axis = axis;
    out.label = label;
    out.basis = rho.basis;
    out.coords = axis == Axis::R ? g.r_values : g.p_values;
    out.spacing = axis == Axis::R ? g.dr : g.dp;
    const double w = axis == Axis::R ? g.dp : g.dr;
    auto value = [&](std::size_t i) -> double {
        if (label == "total") return rho.r00[i] + rho.r11[i];
        if (label == "surface-0") return rho.r00[i];
        if (label == "surface-1") return rho.r11[i];
        if (label == "coherence-real") return rho.r01[i].real();
        if (label == "coherence-imag") return rho.r01[i].imag();
        throw InvalidInput("unknown marginal label: " + label);
    };
    value(0);
    out.values.assign(n, 0.0);
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t k = 0; k < n; ++k) out.values[axis == Axis::R ? m : k] += value(m * n + k);
    for (double& v : out.values) v *= w;
    return out;
}

/// Sum(|f| - f) / (2 Sum |f|); zero when every |f| <= atol.
inline double negativity_index(const std::vector<double>& f, double atol = 1e-14)
{
    double abs_sum = 0.0, neg = 0.0;
    bool nonzero = false;
    for (double v : f) {
        if (std::abs(v) > atol) nonzero = true;
        abs_sum += std::abs(v);
        neg += std::abs(v) - v;
    }
    if (!nonzero) return 0.0;
    return neg / (2.0 * abs_sum);
}

inline double negativity_index(const Marginal& f, double atol = 1e-14) { return negativity_index(f.values, atol); }

inline double trace_integral(const PWTDM& rho)
{
    double s = 0.0;
    for (std::size_t i = 0; i < rho.r00.size(); ++i) s += rho.r00[i] + rho.r11[i];
    return s * rho.grid.dr * rho.grid.dp;
}

inline double population_difference(const PWTDM& rho)
{
    require(rho.basis == Basis::adiabatic, "population_difference expects an adiabatic density");
    double s = 0.0;
    for (std::size_t i = 0; i < rho.r00.size(); ++i) s += rho.r00[i] - rho.r11[i];
    return s * rho.grid.dr * rho.grid.dp;
}

/// <H_W> with H_W = P^2/2M + diag(E_alpha(R)) in the adiabatic basis.
inline double energy(const PWTDM& rho, const CouplingProfile& prof, double mass)
{
    require(rho.basis == Basis::adiabatic, "energy expects an adiabatic density");
    const std::size_t n = rho.n();
    double s = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
        double row = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t i = m * n + k;
            const double p = rho.grid.p_values[k];
            row += p * p / (2.0 * mass) * (rho.r00[i] + rho.r11[i]) + prof.e0[m] * rho.r00[i] + prof.e1[m] * rho.r11[i];
        }
        s += row;
    }
    return s * rho.grid.dr * rho.grid.dp;
}

inline double energy(const PWTDM& rho, const ModelSpec& model)
{
    return energy(rho, coupling_profile(model, rho.grid), model.mass);
}

/// S = 2 pi hbar Sum Tr(rho^2) dr dp.
inline double purity(const PWTDM& rho)
{
    double s = 0.0;
    for (std::size_t i = 0; i < rho.r00.size(); ++i) s += rho.r00[i] * rho.r00[i] + rho.r11[i] * rho.r11[i] + 2.0 * std::norm(rho.r01[i]);
    return 2.0 * pi * rho.grid.hbar * s * rho.grid.dr * rho.grid.dp;
}

struct PhasePoint {
    double r = 0.0, p = 0.0;
};

/// Pseudo-density weighted means, negative regions included.
inline PhasePoint mean_phase_point(const PWTDM& rho)
{
    const std::size_t n = rho.n();
    double w = 0.0, sr = 0.0, sp = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
        double row = 0.0, rowp = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double d = rho.r00[m * n + k] + rho.r11[m * n + k];
            row += d;
            rowp += d * rho.grid.p_values[k];
        }
        w += row;
        sr += row * rho.grid.r_values[m];
        sp += rowp;
    }
    return {sr / w, sp / w};
}

/// Position spread from the pseudo-density, used by the boundary guards.
inline double position_spread(const PWTDM& rho, double mean_r)
{
    const std::size_t n = rho.n();
    double w = 0.0, s2 = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
        double row = 0.0;
        for (std::size_t k = 0; k < n; ++k) row += rho.r00[m * n + k] + rho.r11[m * n + k];
        w += row;
        s2 += row * sqr(rho.grid.r_values[m] - mean_r);
    }
    return std::sqrt(std::max(0.0, s2 / w));
}

// ---------------------------------------------------------------------------
// Wavefunction observables

/// Adiabatic population difference of a diabatic (or adiabatic) wavefunction.
inline double population_difference(const Wavefunction& psi, const CouplingProfile& prof)
{
    const Wavefunction a = psi.basis == Basis::adiabatic ? psi : change_basis(psi, prof, Basis::adiabatic);
    return surface_norm(a, 0) - surface_norm(a, 1);
}

inline double excited_population(const Wavefunction& psi, const CouplingProfile& prof)
{
    const Wavefunction a = psi.basis == Basis::adiabatic ? psi : change_basis(psi, prof, Basis::adiabatic);
    return surface_norm(a, 1);
}

inline double mean_position(const Wavefunction& psi)
{
    double w = 0.0, s = 0.0;
    for (int su = 0; su < 2; ++su)
        for (std::size_t m = 0; m < psi.grid.n_points; ++m) {
            const double d = std::norm(psi(su, m));
            w += d;
            s += d * psi.grid.r_values[m];
        }
    return s / w;
}

inline double position_spread(const Wavefunction& psi, double mean_r)
{
    double w = 0.0, s = 0.0;
    for (int su = 0; su < 2; ++su)
        for (std::size_t m = 0; m < psi.grid.n_points; ++m) {
            const double d = std::norm(psi(su, m));
            w += d;
            s += d * sqr(psi.grid.r_values[m] - mean_r);
        }
    return std::sqrt(s / w);
}

/// Diabatic position density |psi_s(R)|^2 (s = -1 for the total).
inline Marginal position_density(const Wavefunction& psi, int s = -1)
{
    Marginal out;
    out.axis = Axis::R;
    out.coords = psi.grid.r_values;
    out.spacing = psi.grid.dr;
    out.basis = psi.basis;
    out.label = s < 0 ? "total" : "surface-" + std::to_string(s);
    out.values.assign(psi.grid.n_points, 0.0);
    for (int su = 0; su < 2; ++su) {
        if (s >= 0 && su != s) continue;
        for (std::size_t m = 0; m < psi.grid.n_points; ++m) out.values[m] += std::norm(psi(su, m));
    }
    return out;
}

/// Momentum density |phi_s(P)|^2 on the grid's P values (s = -1 for the total).
inline Marginal momentum_density(const Wavefunction& psi, int s = -1)
{
    Marginal out;
    out.axis = Axis::P;
    out.coords = psi.grid.p_values;
    out.spacing = psi.grid.dp;
    out.basis = psi.basis;
    out.label = s < 0 ? "total" : "surface-" + std::to_string(s);
    out.values.assign(psi.grid.n_points, 0.0);
    for (int su = 0; su < 2; ++su) {
        if (s >= 0 && su != s) continue;
        const auto phi = momentum_amplitudes(psi.surface(su), psi.grid);
        for (std::size_t k = 0; k < phi.size(); ++k) out.values[k] += std::norm(phi[k]);
    }
    return out;
}

inline double mean_momentum(const Wavefunction& psi)
{
    const Marginal eta = momentum_density(psi);
    double w = 0.0, s = 0.0;
    for (std::size_t k = 0; k < eta.values.size(); ++k) {
        w += eta.values[k];
        s += eta.values[k] * eta.coords[k];
    }
    return s / w;
}

/// Marginals of a wavefunction's PWTDM, accumulated row by row so that the
/// N x N field is never stored.
struct WignerMarginals {
    Marginal n_total, n0, n1, eta_total, eta0, eta1;
    double trace = 0.0;
};

inline WignerMarginals wigner_marginals(const Wavefunction& psi)
{
    const auto& g = psi.grid;
    const std::size_t n = g.n_points;
    WignerMarginals w;
    auto init = [&](Marginal& mg, Axis ax, const std::string& label) {
        mg.axis = ax;
        mg.label = label;
        mg.basis = Basis::diabatic;
        mg.coords = ax == Axis::R ? g.r_values : g.p_values;
        mg.spacing = ax == Axis::R ? g.dr : g.dp;
        mg.values.assign(n, 0.0);
    };
    init(w.n_total, Axis::R, "total");
    init(w.n0, Axis::R, "surface-0");
    init(w.n1, Axis::R, "surface-1");
    init(w.eta_total, Axis::P, "total");
    init(w.eta0, Axis::P, "surface-0");
    init(w.eta1, Axis::P, "surface-1");
    partial_wigner_rows(psi, [&](const WignerRow& row) {
        double s0 = 0.0, s1 = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            s0 += row.r00[k];
            s1 += row.r11[k];
            w.eta0.values[k] += row.r00[k];
            w.eta1.values[k] += row.r11[k];
        }
        w.n0.values[row.m] = s0;
        w.n1.values[row.m] = s1;
    });
    for (std::size_t i = 0; i < n; ++i) {
        w.n0.values[i] *= g.dp;
        w.n1.values[i] *= g.dp;
        w.eta0.values[i] *= g.dr;
        w.eta1.values[i] *= g.dr;
        w.n_total.values[i] = w.n0.values[i] + w.n1.values[i];
        w.eta_total.values[i] = w.eta0.values[i] + w.eta1.values[i];
    }
    w.trace = w.n_total.integral();
    return w;
}

// ---------------------------------------------------------------------------
// Time series

struct ObservableRecord {
    double t = 0.0;
    double trace = 1.0;
    double pop_diff = 0.0;
    double mean_r = 0.0, mean_p = 0.0;
    double energy = 0.0;
    double purity = 1.0;
    double neg_r = 0.0, neg_p = 0.0;
};

inline void write_observable_header(std::ostream& os, const std::string& comment)
{
    os << "# " << comment << "\n" << "t,trace,pop_diff,mean_r,mean_p,energy,purity,neg_r,neg_p\n";
}

inline void write_observable_row(std::ostream& os, const ObservableRecord& r)
{
    os << std::setprecision(15) << r.t << ',' << r.trace << ',' << r.pop_diff << ',' << r.mean_r << ',' << r.mean_p << ','
       << r.energy << ',' << r.purity << ',' << r.neg_r << ',' << r.neg_p << '\n';
}

inline void write_marginal_csv(std::ostream& os, const std::vector<const Marginal*>& cols, const std::string& comment)
{
    require(!cols.empty(), "no marginals to write");
    os << "# " << comment << "\n" << (cols.front()->axis == Axis::R ? "R" : "P");
    for (const auto* c : cols) os << ',' << c->label;
    os << '\n' << std::setprecision(15);
    for (std::size_t k = 0; k < cols.front()->values.size(); ++k) {
        os << cols.front()->coords[k];
        for (const auto* c : cols) os << ',' << c->values[k];
        os << '\n';
    }
}

} // namespace qlab
