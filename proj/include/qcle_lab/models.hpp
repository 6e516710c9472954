/// @file models.hpp
/// @brief DAC and constant-coupling models, adiabatization and coupling profiles.
///
/// Conventions: the mixing angle is theta = atan2(2 V01, V00 - V11). The
/// transformation matrix is the proper rotation U = [[cos phi, -sin phi],
/// [sin phi, cos phi]] with phi = (theta - pi) / 2, so column 0 is the lower
/// eigenvector and U -> identity where the diabatic coupling vanishes with
/// V00 < V11. With this rotation d01 = <0|d/dR|1> = -dphi/dR.

#pragma once

#include "core.hpp"
#include "grid.hpp"

#include <array>
#include <cmath>
#include <ostream>
#include <vector>

namespace qlab {

using Mat2 = std::array<std::array<double, 2>, 2>;

enum class ModelKind { dac, constant };

struct DacParams {
    double A = 0.1, B = 0.28, C = 0.015, D = 0.06, E0 = 0.05;
};

struct ConstCoupling {
    double D = 1.0; ///< coupling d01 (1/length)
    double E = 0.05; ///< gap (energy)
};

struct ModelSpec {
    ModelKind kind = ModelKind::dac;
    DacParams dac{};
    ConstCoupling cst{};
    double mass = 2000.0;
    double hbar = 1.0;

    static ModelSpec dac_model(DacParams p = {}, double mass = 2000.0)
    {
        ModelSpec m;
        m.kind = ModelKind::dac;
        m.dac = p;
        m.mass = mass;
        return m;
    }
    static ModelSpec constant_model(double d, double e, double mass)
    {
        ModelSpec m;
        m.kind = ModelKind::constant;
        m.cst = {d, e};
        m.mass = mass;
        return m;
    }
    void validate() const
    {
        require(mass > 0.0 && hbar > 0.0, "mass and hbar must be positive");
        if (kind == ModelKind::dac)
            require(dac.A >= 0.0 && dac.B > 0.0 && dac.C >= 0.0 && dac.D > 0.0, "DAC parameters out of range");
        else
            require(cst.D >= 0.0 && cst.E >= 0.0, "constant-model parameters must be non-negative");
    }
    std::string name() const { return kind == ModelKind::dac ? "dac" : "constant"; }
};

/// Diabatic potential matrix and its first two R-derivatives.
struct DiabaticJet {
    Mat2 v{}, dv{}, d2v{};
};

inline DiabaticJet diabatic_jet(const ModelSpec& model, double r)
{
    DiabaticJet j;
    if (model.kind == ModelKind::dac) {
        const auto& p = model.dac;
        const double g11 = std::exp(-p.B * r * r), g01 = std::exp(-p.D * r * r);
        j.v = {{{0.0, p.C * g01}, {p.C * g01, -p.A * g11 + p.E0}}};
        const double d11 = 2.0 * p.A * p.B * r * g11;
        const double d01 = -2.0 * p.C * p.D * r * g01;
        j.dv = {{{0.0, d01}, {d01, d11}}};
        const double dd11 = 2.0 * p.A * p.B * g11 * (1.0 - 2.0 * p.B * r * r);
        const double dd01 = -2.0 * p.C * p.D * g01 * (1.0 - 2.0 * p.D * r * r);
        j.d2v = {{{0.0, dd01}, {dd01, dd11}}};
    } else {
        const double d = model.cst.D, e = model.cst.E;
        const double c = std::cos(2.0 * d * r), s = std::sin(2.0 * d * r);
        j.v = {{{0.5 * e * (1.0 - c), 0.5 * e * s}, {0.5 * e * s, 0.5 * e * (1.0 + c)}}};
        j.dv = {{{e * d * s, e * d * c}, {e * d * c, -e * d * s}}};
        j.d2v = {{{2.0 * e * d * d * c, -2.0 * e * d * d * s}, {-2.0 * e * d * d * s, -2.0 * e * d * d * c}}};
    }
    return j;
}

inline Mat2 diabatic_potential(const ModelSpec& model, double r) { return diabatic_jet(model, r).v; }

struct AdiabaticData {
    double e0 = 0.0, e1 = 0.0;
    Mat2 u{};
    double theta = 0.0;
    double d01 = 0.0;
    Mat2 g{};
    Mat2 f{};
};

/// Rotation U(phi) and derived quantities for a given mixing-angle jet.
inline void fill_from_angle(AdiabaticData& a, double theta, double dtheta, double d2theta, const Mat2& dv)
{
    const double phi = 0.5 * (theta - pi), dphi = 0.5 * dtheta, d2phi = 0.5 * d2theta;
    const double c = std::cos(phi), s = std::sin(phi);
    a.theta = theta;
    a.u = {{{c, -s}, {s, c}}};
    a.d01 = -dphi;
    a.g = {{{-dphi * dphi, -d2phi}, {d2phi, -dphi * dphi}}};
    // F = -U^T V' U
    for (int al = 0; al < 2; ++al)
        for (int be = 0; be < 2; ++be) {
            double acc = 0.0;
            for (int i = 0; i < 2; ++i)
                for (int k = 0; k < 2; ++k) acc += a.u[i][al] * dv[i][k] * a.u[k][be];
            a.f[al][be] = -acc;
        }
}

inline AdiabaticData adiabatize(const ModelSpec& model, double r)
{
    AdiabaticData a;
    const DiabaticJet j = diabatic_jet(model, r);
    if (model.kind == ModelKind::constant) {
        const double d = model.cst.D, e = model.cst.E;
        a.e0 = 0.0;
        a.e1 = e;
        fill_from_angle(a, pi - 2.0 * d * r, -2.0 * d, 0.0, j.dv);
        a.theta = std::atan2(j.v[0][1] * 2.0, j.v[0][0] - j.v[1][1]);
        a.d01 = d;
        a.g = {{{-d * d, 0.0}, {0.0, -d * d}}};
        a.f = {{{0.0, -d * e}, {-d * e, 0.0}}};
        return a;
    }
    const double x = j.v[0][0] - j.v[1][1], y = 2.0 * j.v[0][1];
    const double dx = j.dv[0][0] - j.dv[1][1], dy = 2.0 * j.dv[0][1];
    const double d2x = j.d2v[0][0] - j.d2v[1][1], d2y = 2.0 * j.d2v[0][1];
    const double rho2 = x * x + y * y;
    if (rho2 == 0.0) throw NumericalFailure("degenerate diabatic potential at r=" + std::to_string(r));
    const double num = x * dy - y * dx;
    const double dtheta = num / rho2;
    const double d2theta = ((x * d2y - y * d2x) * rho2 - num * (2.0 * x * dx + 2.0 * y * dy)) / (rho2 * rho2);
    const double mean = 0.5 * (j.v[0][0] + j.v[1][1]), half = 0.5 * std::sqrt(rho2);
    a.e0 = mean - half;
    a.e1 = mean + half;
    fill_from_angle(a, std::atan2(y, x), dtheta, d2theta, j.dv);
    return a;
}

/// Adiabatic data along the grid with continuous theta and gauge.
struct CouplingProfile {
    std::vector<double> r, v00, v11, v01, e0, e1, theta, d01, g00, g11, g01, f00, f11, f01;
    std::vector<Mat2> u;
    std::size_t size() const { return r.size(); }
};

inline CouplingProfile coupling_profile(const ModelSpec& model, const std::vector<double>& rs)
{
    model.validate();
    CouplingProfile p;
    const std::size_t n = rs.size();
    for (auto* v : {&p.r, &p.v00, &p.v11, &p.v01, &p.e0, &p.e1, &p.theta, &p.d01, &p.g00, &p.g11, &p.g01, &p.f00, &p.f11, &p.f01})
        v->resize(n);
    p.u.resize(n);
    double offset = 0.0, prev = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
        AdiabaticData a = adiabatize(model, rs[m]);
        // unwrap theta, then rebuild U from the continuous angle
        double th = a.theta + offset;
        if (m > 0) {
            while (th - prev > pi) { th -= 2.0 * pi; offset -= 2.0 * pi; }
            while (th - prev < -pi) { th += 2.0 * pi; offset += 2.0 * pi; }
        } else if (std::cos(0.5 * (th - pi)) < 0.0) {
            th += 2.0 * pi;
            offset += 2.0 * pi;
        }
        prev = th;
        const double phi = 0.5 * (th - pi);
        a.u = {{{std::cos(phi), -std::sin(phi)}, {std::sin(phi), std::cos(phi)}}};
        // a 2 pi shift of theta flips both columns, which leaves d01, g and F unchanged
        if (m > 0) {
            for (int col = 0; col < 2; ++col) {
                const double ov = p.u[m - 1][0][col] * a.u[0][col] + p.u[m - 1][1][col] * a.u[1][col];
                if (ov <= 0.0) throw NumericalFailure("gauge continuity lost at r=" + std::to_string(rs[m]));
            }
        }
        const DiabaticJet j = diabatic_jet(model, rs[m]);
        p.r[m] = rs[m];
        p.v00[m] = j.v[0][0];
        p.v11[m] = j.v[1][1];
        p.v01[m] = j.v[0][1];
        p.e0[m] = a.e0;
        p.e1[m] = a.e1;
        p.theta[m] = th;
        p.d01[m] = a.d01;
        p.g00[m] = a.g[0][0];
        p.g11[m] = a.g[1][1];
        p.g01[m] = a.g[0][1];
        p.f00[m] = a.f[0][0];
        p.f11[m] = a.f[1][1];
        p.f01[m] = a.f[0][1];
        p.u[m] = a.u;
    }
    return p;
}

inline CouplingProfile coupling_profile(const ModelSpec& model, const PhaseSpaceGrid& grid)
{
    return coupling_profile(model, grid.r_values);
}

/// Fig.-1-style CSV: R, V00, V11, V01, E0, E1, d01, g00, F00, F11, F01.
inline void write_profile(std::ostream& os, const CouplingProfile& p, const ModelSpec& model)
{
    os << std::setprecision(12) << "# model=" << model.name() << " mass=" << model.mass << "\n";
    os << "R,V00,V11,V01,E0,E1,d01,g00,F00,F11,F01\n";
    for (std::size_t m = 0; m < p.size(); ++m)
        os << p.r[m] << ',' << p.v00[m] << ',' << p.v11[m] << ',' << p.v01[m] << ',' << p.e0[m] << ',' << p.e1[m] << ','
           << p.d01[m] << ',' << p.g00[m] << ',' << p.f00[m] << ',' << p.f11[m] << ',' << p.f01[m] << '\n';
}

/// Wavefunction change of basis with the profile's U: psi_dia = U psi_adia.
inline Wavefunction change_basis(const Wavefunction& psi, const CouplingProfile& prof, Basis target)
{
    require(psi.basis != target, "change_basis: wavefunction is already in the target basis");
    require(prof.size() == psi.grid.n_points, "change_basis: profile does not match the grid");
    Wavefunction out{target, psi.grid, std::vector<cplx>(psi.amp.size())};
    for (std::size_t m = 0; m < prof.size(); ++m) {
        const Mat2& u = prof.u[m];
        const cplx a = psi(0, m), b = psi(1, m);
        if (target == Basis::diabatic) {
            out(0, m) = u[0][0] * a + u[0][1] * b;
            out(1, m) = u[1][0] * a + u[1][1] * b;
        } else {
            out(0, m) = u[0][0] * a + u[1][0] * b;
            out(1, m) = u[0][1] * a + u[1][1] * b;
        }
    }
    return out;
}

} // namespace qlab
