/// @file test_tdse.cpp
/// @brief Split-operator and DVR propagation against analytic and independent oracles.

#include <qcle_lab/constmodel.hpp>
#include <qcle_lab/tdse.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

using namespace qlab;

namespace {

ModelSpec free_model() { return ModelSpec::constant_model(0.0, 0.0, 2000.0); }

/// Number of nodes of the Numerov solution of -psi''/2M + V psi = E psi on [-L, L].
int numerov_nodes(const std::function<double(double)>& v, double mass, double e, double L, double h)
{
    const auto n = static_cast<std::size_t>(std::llround(2.0 * L / h));
    auto f = [&](double r) { return 2.0 * mass * (e - v(r)); };
    double r = -L, y0 = 0.0, y1 = 1e-30;
    double f0 = f(r), f1 = f(r + h);
    int nodes = 0;
    for (std::size_t k = 1; k < n; ++k) {
        const double f2 = f(r + 2 * h);
        const double y2 = (2.0 * y1 * (1.0 - 5.0 * h * h * f1 / 12.0) - y0 * (1.0 + h * h * f0 / 12.0)) / (1.0 + h * h * f2 / 12.0);
        if ((y2 < 0.0) != (y1 < 0.0) && y2 != 0.0) ++nodes;
        y0 = y1;
        y1 = y2;
        f0 = f1;
        f1 = f2;
        r += h;
        if (std::abs(y1) > 1e200) {
            y0 *= 1e-200;
            y1 *= 1e-200;
        }
    }
    return nodes;
}

/// Bound-state energy with `level` nodes, by bisection on the node count.
double shooting_level(const std::function<double(double)>& v, double mass, int level, double lo, double hi)
{
    for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (numerov_nodes(v, mass, mid, 8.0, 2e-3) > level) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

/// max_m |a - e^{i phi} b| with the best global phase.
double phase_aligned_diff(const Wavefunction& a, const Wavefunction& b)
{
    cplx ov = 0.0;
    for (std::size_t i = 0; i < a.amp.size(); ++i) ov += std::conj(b.amp[i]) * a.amp[i];
    const cplx ph = ov / std::abs(ov);
    double e = 0.0;
    for (std::size_t i = 0; i < a.amp.size(); ++i) e = std::max(e, std::abs(a.amp[i] - ph * b.amp[i]));
    return e;
}

} // namespace

TEST(Tdse, TimestepRule)
{
    const auto g = make_grid(1201, 0.05, 40.0);
    EXPECT_NEAR(timestep(ModelSpec::dac_model(), g), 1.0 / (0.05 + pi * pi / 10.0), 1e-15);
    EXPECT_NEAR(timestep(ModelSpec::dac_model(), g), 0.96435, 1e-5);
    double prev = 1e300;
    for (double e : {0.0, 0.1, 1.0, 10.0, 100.0, 1e4}) {
        const double dt = timestep(ModelSpec::constant_model(1.0, e, 2000.0), g);
        EXPECT_LT(dt, prev);
        prev = dt;
    }
    const auto h = make_grid(401, 0.02, 20.0);
    EXPECT_DOUBLE_EQ(timestep(ModelSpec::constant_model(500.0, 100.0, 200.0), h), 1.0 / (100.0 + pi * pi / (400.0 * 0.0004)));
}

TEST(Tdse, FreeGaussianAdvances)
{
    const auto g = make_grid(401, 0.05, 0.0);
    const auto model = free_model();
    auto psi = gaussian_packet(GaussianSpec::from_sigma_p(-3.0, 20.0, 1.0), g, Basis::diabatic);
    SplitOperator op(model, g, 0.5);
    const double r0 = mean_position(psi);
    for (int s = 0; s < 200; ++s) op.step(psi);
    EXPECT_NEAR(norm(psi), 1.0, 1e-12);
    EXPECT_NEAR(mean_position(psi) - r0, 20.0 * 100.0 / 2000.0, 1e-6);
    // width grows as sigma_r sqrt(1 + (t sigma_p / (M sigma_r))^2)
    const double sr = 0.5, t = 100.0, expect = sr * std::sqrt(1.0 + sqr(t * 1.0 / (2000.0 * sr)));
    EXPECT_NEAR(position_spread(psi, mean_position(psi)), expect, 1e-6);
}

TEST(Tdse, SplitOperatorNormDrift)
{
    const auto g = make_grid(401, 0.05, 20.0);
    const auto model = ModelSpec::dac_model();
    auto psi = gaussian_packet(GaussianSpec::from_sigma_p(-3.0, 20.0, 1.0), g, Basis::diabatic);
    SplitOperator op(model, g, timestep(model, g));
    for (int s = 0; s < 1000; ++s) op.step(psi);
    EXPECT_NEAR(norm(psi), 1.0, 1e-10);
}

TEST(Tdse, SplitOperatorEnergyDriftIsSecondOrder)
{
    const auto g = make_grid(401, 0.05, 20.0);
    const auto model = ModelSpec::dac_model();
    const auto psi0 = gaussian_packet(GaussianSpec::from_sigma_p(-3.0, 20.0, 1.0), g, Basis::diabatic);
    const double e0 = wavefunction_energy(psi0, model);
    std::vector<double> drift;
    for (double dt : {0.8, 0.4}) {
        auto psi = psi0;
        SplitOperator op(model, g, dt);
        double d = 0.0;
        for (int s = 0; s < static_cast<int>(std::lround(300.0 / dt)); ++s) {
            op.step(psi);
            d = std::max(d, std::abs(wavefunction_energy(psi, model) - e0));
        }
        drift.push_back(d / std::abs(e0));
    }
    EXPECT_LT(drift[0], 1e-3);
    EXPECT_NEAR(drift[0] / drift[1], 4.0, 0.6);
}

TEST(Tdse, ConstantModelMatchesExactSolution)
{
    ConstParams p;
    p.r0 = -3.0;
    const auto g = make_grid(301, 0.1, p.p0);
    const auto model = p.model();
    const auto prof = coupling_profile(model, g);
    const double theta = pi / 4.0, t = 200.0, dt = 0.05;
    auto psi = change_basis(gaussian_packet(p.packet(theta), g, Basis::adiabatic), prof, Basis::diabatic);
    SplitOperator op(model, g, dt);
    for (int s = 0; s < static_cast<int>(std::lround(t / dt)); ++s) op.step(psi);
    const auto ad = change_basis(psi, prof, Basis::adiabatic);
    const auto start = gaussian_packet(p.packet(theta), g, Basis::adiabatic);
    const auto b0 = momentum_amplitudes(start.surface(0), g), b1 = momentum_amplitudes(start.surface(1), g);
    std::vector<Spinor> phi0(g.n_points);
    for (std::size_t k = 0; k < g.n_points; ++k) phi0[k] = {b0[k], b1[k]};
    const auto exact = const_exact_momentum_solution(g.p_values, t, p, phi0);
    const auto f0 = momentum_amplitudes(ad.surface(0), g), f1 = momentum_amplitudes(ad.surface(1), g);
    double err = 0.0;
    for (std::size_t k = 0; k < g.n_points; ++k) {
        err = std::max(err, std::abs(std::norm(f0[k]) - std::norm(exact[k][0])));
        err = std::max(err, std::abs(std::norm(f1[k]) - std::norm(exact[k][1])));
    }
    EXPECT_LT(err, 1e-6);
}

TEST(Dvr, IdentityAtZeroTimeAndUnitarity)
{
    const auto g = make_grid(301, 0.05, 20.0);
    const auto model = ModelSpec::dac_model();
    const auto psi = gaussian_packet(GaussianSpec::from_sigma_p(-2.0, 20.0, 1.0, 0.3), g, Basis::diabatic);
    const Dvr dvr(model, g);
    const auto z = dvr.propagate(psi, 0.0);
    for (std::size_t i = 0; i < psi.amp.size(); ++i) EXPECT_LT(std::abs(z.amp[i] - psi.amp[i]), 1e-10);
    for (double t : {10.0, 1e3, 1e5}) EXPECT_NEAR(norm(dvr.propagate(psi, t)), 1.0, 1e-8);
    EXPECT_THROW(Dvr(model, g, false, 500), InvalidInput);
    EXPECT_THROW(dvr.propagate(change_basis(psi, coupling_profile(model, g), Basis::adiabatic), 1.0), InvalidInput);
}

TEST(Dvr, PrintedDiagonalIsAGlobalShift)
{
    const auto g = make_grid(151, 0.05, 0.0);
    const auto model = ModelSpec::dac_model();
    const Dvr a(model, g), b(model, g, true);
    const double shift = a.kinetic_diagonal() - b.kinetic_diagonal();
    EXPECT_NEAR(shift, (151.0 * 151.0 - pi * pi) / (6.0 * 2000.0 * 0.0025), 1e-9);
    for (Eigen::Index i = 0; i < a.eigenvalues().size(); ++i) EXPECT_NEAR(a.eigenvalues()(i) - b.eigenvalues()(i), shift, 1e-9);
}

TEST(Dvr, BoundLevelsMatchShootingOracle)
{
    DacParams dp;
    dp.C = 0.0;
    const auto model = ModelSpec::dac_model(dp);
    const auto g = make_grid(481, 0.05, 0.0);
    const Dvr dvr(model, g, true);
    auto v11 = [&](double r) { return -dp.A * std::exp(-dp.B * r * r) + dp.E0; };
    // levels below zero live on the upper diabatic surface only
    std::vector<double> levels;
    for (Eigen::Index i = 0; i < dvr.eigenvalues().size(); ++i)
        if (dvr.eigenvalues()(i) < -1e-3) levels.push_back(dvr.eigenvalues()(i));
    ASSERT_GE(levels.size(), 4u);
    for (int n = 0; n < 4; ++n) {
        const double ref = shooting_level(v11, model.mass, n, -0.05, 0.0);
        EXPECT_NEAR(levels[static_cast<std::size_t>(n)], ref, 1e-8) << "level " << n;
    }
}

TEST(Dvr, AgreesWithSplitOperator)
{
    const auto g = make_grid(401, 0.05, 20.0);
    const auto model = ModelSpec::dac_model();
    const auto psi0 = gaussian_packet(GaussianSpec::from_sigma_p(-3.0, 20.0, 1.0), g, Basis::diabatic);
    const double dt = timestep(model, g);
    const int steps = 300;
    auto psi = psi0;
    SplitOperator op(model, g, dt);
    for (int s = 0; s < steps; ++s) op.step(psi);
    const auto d = dvr_propagate(psi0, model, g, steps * dt);
    EXPECT_LT(phase_aligned_diff(psi, d), 1e-3);
    const auto prof = coupling_profile(model, g);
    EXPECT_NEAR(population_difference(psi, prof), population_difference(d, prof), 0.0026);
}
