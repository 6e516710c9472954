/// @file test_constmodel.cpp
/// @brief Constant-coupling model: closed forms against independent numerical oracles.

#include <qcle_lab/constmodel.hpp>
#include <qcle_lab/observables.hpp>
#include <qcle_lab/qcle.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

using namespace qlab;

namespace {

ConstParams large_set()
{
    ConstParams p;
    p.d_coupling = 500.0;
    p.gap = 100.0;
    p.mass = 200.0;
    p.p0 = 20.0;
    p.sigma_p = 2.0;
    return p;
}

ConstParams small_set()
{
    ConstParams p;
    p.d_coupling = 1.0;
    p.gap = 0.05;
    p.mass = 2000.0;
    p.p0 = 20.0;
    p.sigma_p = 1.0;
    return p;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

using Field4 = std::array<std::vector<double>, 4>;
using Op4 = std::function<void(const Field4&, Field4&)>;

/// Eighth-order central difference on a uniform axis (zero outside).
std::vector<double> fd8(const std::vector<double>& f, double h)
{
    static const double c[4] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
    const auto n = static_cast<std::ptrdiff_t>(f.size());
    std::vector<double> d(f.size(), 0.0);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = 1; k <= 4; ++k) {
            const double fp = i + k < n ? f[static_cast<std::size_t>(i + k)] : 0.0;
            const double fm = i - k >= 0 ? f[static_cast<std::size_t>(i - k)] : 0.0;
            s += c[k - 1] * (fp - fm);
        }
        d[static_cast<std::size_t>(i)] = s / h;
    }
    return d;
}

/// RK4 for the perturbation hierarchy d eta(m)/dt = Ld eta(m) + Lp eta(m-1), m <= levels-1.
std::vector<Field4> hierarchy(const Field4& init, const Op4& ld, const Op4& lp, int levels, double t, int steps)
{
    const std::size_t n = init[0].size();
    auto zero = [&] {
        Field4 z;
        for (auto& v : z) v.assign(n, 0.0);
        return z;
    };
    std::vector<Field4> y(static_cast<std::size_t>(levels), zero());
    y[0] = init;
    auto rhs = [&](const std::vector<Field4>& s) {
        std::vector<Field4> out(s.size(), zero());
        Field4 tmp = zero();
        for (std::size_t m = 0; m < s.size(); ++m) {
            ld(s[m], out[m]);
            if (m > 0) {
                lp(s[m - 1], tmp);
                for (int c = 0; c < 4; ++c)
                    for (std::size_t k = 0; k < n; ++k) out[m][c][k] += tmp[c][k];
            }
        }
        return out;
    };
    auto axpy = [&](const std::vector<Field4>& a, double h, const std::vector<Field4>& b) {
        auto r = a;
        for (std::size_t m = 0; m < a.size(); ++m)
            for (int c = 0; c < 4; ++c)
                for (std::size_t k = 0; k < n; ++k) r[m][c][k] += h * b[m][c][k];
        return r;
    };
    const double h = t / steps;
    for (int s = 0; s < steps; ++s) {
        const auto k1 = rhs(y), k2 = rhs(axpy(y, h / 2, k1)), k3 = rhs(axpy(y, h / 2, k2)), k4 = rhs(axpy(y, h, k3));
        for (std::size_t m = 0; m < y.size(); ++m)
            for (int c = 0; c < 4; ++c)
                for (std::size_t k = 0; k < n; ++k)
                    y[m][c][k] += h / 6 * (k1[m][c][k] + 2 * k2[m][c][k] + 2 * k3[m][c][k] + k4[m][c][k]);
    }
    return y;
}

/// Dimensionless marginal operators on the P~ axis.
struct Operators {
    double c1, kap, h;
    std::vector<double> pt;

    void diff(const Field4& y, Field4& f) const
    {
        const auto dr = fd8(y[1], h);
        std::vector<double> tot(y[0].size());
        for (std::size_t k = 0; k < tot.size(); ++k) tot[k] = y[0][k] + y[3][k];
        const auto dt = fd8(tot, h);
        for (std::size_t k = 0; k < tot.size(); ++k) {
            f[0][k] = c1 * dr[k];
            f[1][k] = 0.5 * c1 * dt[k];
            f[2][k] = 0.0;
            f[3][k] = c1 * dr[k];
        }
    }
    void rot(const Field4& y, Field4& f) const
    {
        for (std::size_t k = 0; k < y[0].size(); ++k) {
            f[0][k] = 0.0;
            f[1][k] = y[2][k];
            f[2][k] = -y[1][k];
            f[3][k] = 0.0;
        }
    }
    void mul(const Field4& y, Field4& f) const
    {
        for (std::size_t k = 0; k < y[0].size(); ++k) {
            const double q = kap * pt[k];
            f[0][k] = -q * y[1][k];
            f[1][k] = 0.5 * q * (y[0][k] - y[3][k]);
            f[2][k] = 0.0;
            f[3][k] = q * y[1][k];
        }
    }
};

Field4 to_field(const MarginalVector& v) { return v.eta; }

} // namespace

TEST(ConstParams, DimensionlessConstants)
{
    const auto p = large_set();
    EXPECT_DOUBLE_EQ(p.c1(), 250.0);
    EXPECT_DOUBLE_EQ(p.c2(), 4.0 / 20000.0);
    EXPECT_DOUBLE_EQ(p.c1(), 2.0 * p.d_coupling * p.sigma_r());
    EXPECT_DOUBLE_EQ(p.t_tilde(1e-3), 0.1);
    EXPECT_TRUE(large_coupling_regime(p));
    EXPECT_FALSE(large_coupling_regime(small_set()));
}

TEST(ConstInitialState, EqualMixtureMarginals)
{
    const auto p = small_set();
    const auto axis = uniform_axis(10.0, 30.0, 401);
    const auto eta = const_initial_marginals(p, pi / 4.0, axis);
    for (std::size_t k = 0; k < axis.size(); ++k) {
        const double np = normal_pdf(axis[k], 21.0, 1.0), nm = normal_pdf(axis[k], 19.0, 1.0);
        EXPECT_NEAR(eta.eta[0][k], 0.25 * (np + nm), 1e-15);
        EXPECT_NEAR(eta.eta[3][k], 0.25 * (np + nm), 1e-15);
        EXPECT_NEAR(eta.eta[1][k], 0.5 * normal_pdf(axis[k], 20.0, 1.0), 1e-15);
    }
    EXPECT_NEAR(eta.population(), 1.0, 1e-10);
}

TEST(ConstInitialState, ExcitedMarginalNegativeForGroundState)
{
    auto p = small_set();
    p.sigma_p = 0.3;
    const auto eta = const_initial_marginals(p, 0.0, {p.p0});
    EXPECT_LT(eta.eta[3][0], 0.0);
    EXPECT_GT(eta.eta[0][0] + eta.eta[3][0], 0.0);
}

TEST(ConstInitialState, MatchesWignerTransformOfPacket)
{
    auto p = small_set();
    p.r0 = -1.0;
    const auto grid = make_grid(201, 0.1, p.p0);
    for (double theta : {0.0, pi / 4.0, 0.3}) {
        const auto st = const_initial_state(p, theta, grid);
        const auto model = p.model();
        const auto prof = coupling_profile(model, grid);
        const auto ad = gaussian_packet(p.packet(theta), grid, Basis::adiabatic);
        const auto oracle = rotate_basis(partial_wigner_transform(change_basis(ad, prof, Basis::diabatic)), prof, Basis::adiabatic);
        double err = 0.0;
        for (std::size_t i = 0; i < st.rho.r00.size(); ++i) {
            err = std::max(err, std::abs(st.rho.r00[i] - oracle.r00[i]));
            err = std::max(err, std::abs(st.rho.r11[i] - oracle.r11[i]));
            err = std::max(err, std::abs(st.rho.r01[i] - oracle.r01[i]));
        }
        EXPECT_LT(err, 1e-9) << "theta=" << theta;
        // closed-form marginals against numerical R integration
        const auto m0 = marginal(st.rho, Axis::P, "surface-0");
        const auto mi = marginal(st.rho, Axis::P, "coherence-imag");
        for (std::size_t k = 0; k < grid.n_points; ++k) {
            EXPECT_NEAR(m0.values[k], st.eta.eta[0][k], 1e-8);
            EXPECT_NEAR(-mi.values[k], st.eta.eta[2][k], 1e-8);
        }
    }
}

TEST(ConstInitialState, RejectsNarrowMomentumGrid)
{
    auto p = small_set();
    p.d_coupling = 12.0;
    const auto grid = make_grid(201, 0.1, p.p0);
    EXPECT_THROW(const_initial_state(p, 0.0, grid), BoundaryViolation);
}

TEST(ConstExactSolution, IdentityAtZeroTime)
{
    const auto p = large_set();
    const auto xi = uniform_axis(-600.0, 600.0, 301);
    const auto phi0 = const_initial_fourier(xi, p, pi / 4.0);
    const auto phi = const_exact_momentum_solution(xi, 0.0, p, phi0);
    for (std::size_t k = 0; k < xi.size(); ++k) {
        EXPECT_LT(std::abs(phi[k][0] - phi0[k][0]), 1e-15);
        EXPECT_LT(std::abs(phi[k][1] - phi0[k][1]), 1e-15);
    }
}

TEST(ConstExactSolution, DecoupledLimit)
{
    auto p = small_set();
    p.d_coupling = 0.0;
    const auto xi = uniform_axis(15.0, 25.0, 101);
    const auto phi0 = const_initial_fourier(xi, p, pi / 4.0);
    const double t = 37.0;
    const auto phi = const_exact_momentum_solution(xi, t, p, phi0);
    const auto ode = const_ode_oracle(xi, t, p, phi0);
    for (std::size_t k = 0; k < xi.size(); ++k) {
        EXPECT_NEAR(std::abs(phi[k][0]), std::abs(phi0[k][0]), 1e-14);
        EXPECT_NEAR(std::abs(phi[k][1]), std::abs(phi0[k][1]), 1e-14);
        // relative phase exp(-i E t / hbar) between the surfaces
        const cplx rel = phi[k][1] / phi[k][0] / (phi0[k][1] / phi0[k][0]);
        EXPECT_LT(std::abs(rel - std::polar(1.0, -p.gap * t)), 1e-12);
        const double free_phase = -t * xi[k] * xi[k] / (2.0 * p.mass);
        EXPECT_LT(std::abs(ode[k][0] - phi0[k][0] * std::polar(1.0, free_phase)), 1e-10);
        EXPECT_LT(std::abs(ode[k][1] - phi0[k][1] * std::polar(1.0, free_phase - p.gap * t)), 1e-10);
    }
}

TEST(ConstExactSolution, Unitarity)
{
    const auto p = large_set();
    const auto xi = uniform_axis(-600.0, 600.0, 401);
    const auto phi0 = const_initial_fourier(xi, p, 0.4);
    for (double t : {1e-4, 5e-4, 1e-3, 1e-2}) {
        const auto phi = const_exact_momentum_solution(xi, t, p, phi0);
        for (std::size_t k = 0; k < xi.size(); ++k)
            EXPECT_NEAR(std::norm(phi[k][0]) + std::norm(phi[k][1]), std::norm(phi0[k][0]) + std::norm(phi0[k][1]), 1e-12);
    }
}

TEST(ConstExactSolution, MatchesAdaptiveOdeOracle)
{
    for (const auto& [p, t] : {std::pair{large_set(), 1e-3}, std::pair{small_set(), 500.0}}) {
        const auto xi = uniform_axis(p.p0 - p.kick() - 8 * p.sigma_p, p.p0 + p.kick() + 8 * p.sigma_p, 201);
        const auto phi0 = const_initial_fourier(xi, p, pi / 4.0);
        const auto exact = const_exact_momentum_solution(xi, t, p, phi0);
        const auto ode = const_ode_oracle(xi, t, p, phi0);
        double mod_err = 0.0, rel_err = 0.0;
        for (std::size_t k = 0; k < xi.size(); ++k) {
            for (int s = 0; s < 2; ++s) mod_err = std::max(mod_err, std::abs(std::abs(exact[k][s]) - std::abs(ode[k][s])));
            // relative phase between the surfaces is free of the global factor
            rel_err = std::max(rel_err, std::abs(exact[k][1] * std::conj(exact[k][0]) - ode[k][1] * std::conj(ode[k][0])));
        }
        EXPECT_LT(mod_err, 1e-8);
        EXPECT_LT(rel_err, 1e-8);
    }
}

TEST(ConstExactSolution, PwtdmAtZeroTimeEqualsClosedForm)
{
    auto p = small_set();
    const auto grid = make_grid(201, 0.1, p.p0);
    const auto st = const_initial_state(p, pi / 4.0, grid);
    const auto ex = const_exact_pwtdm(p, pi / 4.0, grid, 0.0);
    double err = 0.0;
    for (std::size_t i = 0; i < ex.r00.size(); ++i)
        err = std::max({err, std::abs(ex.r00[i] - st.rho.r00[i]), std::abs(ex.r11[i] - st.rho.r11[i]),
                        std::abs(ex.r01[i] - st.rho.r01[i])});
    EXPECT_LT(err, 1e-9);
}

TEST(ConstExactSolution, TotalMarginalMatchesWignerMarginalAndStaysPositive)
{
    auto p = small_set();
    const auto grid = make_grid(301, 0.1, p.p0);
    const double t = 50.0;
    const auto rho = const_exact_pwtdm(p, pi / 4.0, grid, t);
    const auto num = marginal(rho, Axis::P, "total");
    const auto closed = const_exact_total_marginal(grid.p_values, t, p, pi / 4.0);
    EXPECT_LT(max_abs_diff(num.values, closed), 1e-8);
    const auto lp = large_set();
    const auto axis = uniform_axis(-700.0, 700.0, 2801);
    for (double tt : {0.0, 2.5e-4, 5e-4, 1e-3}) {
        const auto eta = const_exact_total_marginal(axis, tt, lp, pi / 4.0);
        for (double v : eta) EXPECT_GE(v, -1e-6);
    }
}

TEST(ConstMarginalSolver, DecoupledLimitRotatesCoherence)
{
    auto p = small_set();
    p.d_coupling = 0.0;
    const auto axis = uniform_axis(10.0, 30.0, 201);
    auto eta0 = const_initial_marginals(p, 0.4, axis);
    for (std::size_t k = 0; k < axis.size(); ++k) eta0.eta[2][k] = 0.3 * normal_pdf(axis[k], 20.0, 1.0);
    const double t = 40.0;
    const auto run = const_marginal_qcle_solve(eta0, p, t, 0.25);
    const auto& e = run.snapshots.back();
    const double c = std::cos(p.gap * t), s = std::sin(p.gap * t);
    for (std::size_t k = 0; k < axis.size(); ++k) {
        EXPECT_NEAR(e.eta[0][k], eta0.eta[0][k], 1e-14);
        EXPECT_NEAR(e.eta[3][k], eta0.eta[3][k], 1e-14);
        EXPECT_NEAR(e.eta[1][k], c * eta0.eta[1][k] + s * eta0.eta[2][k], 1e-9);
        EXPECT_NEAR(e.eta[2][k], -s * eta0.eta[1][k] + c * eta0.eta[2][k], 1e-9);
    }
}

TEST(ConstMarginalSolver, ConservesPopulationAndHitsSnapshots)
{
    const auto p = large_set();
    const auto axis = uniform_axis(-580.0, 620.0, 4801);
    const auto eta0 = const_initial_marginals(p, pi / 4.0, axis);
    const auto run = const_marginal_qcle_solve(eta0, p, 1e-3, 0.0, {2.5e-4, 5e-4});
    ASSERT_EQ(run.times.size(), 3u);
    EXPECT_DOUBLE_EQ(run.times[1], 5e-4);
    for (const auto& s : run.snapshots) EXPECT_NEAR(s.population(), eta0.population(), 1e-8);
}

TEST(ConstMarginalSolver, RejectsUnstableStepAndCoarseAxis)
{
    const auto p = large_set();
    const auto axis = uniform_axis(-580.0, 620.0, 4801);
    const auto eta0 = const_initial_marginals(p, pi / 4.0, axis);
    EXPECT_THROW(const_marginal_qcle_solve(eta0, p, 1e-3, 1e-4), NumericalFailure);
    const auto coarse = const_initial_marginals(p, pi / 4.0, uniform_axis(-580.0, 620.0, 301));
    EXPECT_THROW(const_marginal_qcle_solve(coarse, p, 1e-3, 0.0), InvalidInput);
}

TEST(ConstMarginalSolver, MatchesHierarchyOracleSum)
{
    // the full marginal equations integrated independently (FD8 + RK4)
    const auto p = small_set();
    const auto axis = uniform_axis(-10.0, 50.0, 1201);
    const auto eta0 = const_initial_marginals(p, 0.0, axis);
    const double t = 100.0;
    const auto run = const_marginal_qcle_solve(eta0, p, t, 0.5);
    Operators ops{p.c1(), 2 * p.c1() * p.c2(), (axis[1] - axis[0]) / p.sigma_p, {}};
    for (double v : axis) ops.pt.push_back(p.p_tilde(v));
    const Op4 full = [&](const Field4& y, Field4& f) {
        Field4 a = f, b = f;
        ops.diff(y, f);
        ops.rot(y, a);
        ops.mul(y, b);
        for (int c = 0; c < 4; ++c)
            for (std::size_t k = 0; k < f[c].size(); ++k) f[c][k] += a[c][k] + b[c][k];
    };
    const Op4 none = [](const Field4&, Field4&) {};
    const auto ref = hierarchy(to_field(eta0), full, none, 1, p.t_tilde(t), 400);
    for (int c = 0; c < 4; ++c) EXPECT_LT(max_abs_diff(run.snapshots.back().eta[c], ref[0][c]), 1e-7) << c;
}

TEST(ConstNonlocal, GridConstructionAndRejection)
{
    auto p = small_set();
    p.d_coupling = 0.25;
    const auto g = nonlocal_grid(p, 8, 201);
    EXPECT_NEAR(g.dp * 8, 0.25, 1e-14);
    EXPECT_EQ(nonlocal_shift(p, g), 8u);
    const auto bad = make_grid(201, 0.1, p.p0);
    EXPECT_THROW(nonlocal_shift(p, bad), InvalidInput);
}

TEST(ConstNonlocal, ZeroGapConservesTrace)
{
    ConstParams p;
    p.d_coupling = 0.25;
    p.gap = 0.0;
    p.mass = 2000.0;
    p.p0 = 2.0;
    p.sigma_p = 0.5;
    const auto g = nonlocal_grid(p, 8, 201);
    auto rho = const_initial_state(p, pi / 4.0, g).rho;
    const double tr0 = trace_integral(rho);
    for (int s = 0; s < 5; ++s) rho = const_nonlocal_step(rho, p, 2.0);
    EXPECT_NEAR(trace_integral(rho), tr0, 1e-13);
}

TEST(ConstNonlocal, ApproachesQcleStepQuadraticallyInCoupling)
{
    std::vector<double> errs;
    const double d_max = 0.125;
    for (int ell : {8, 4, 2}) {
        ConstParams p;
        p.d_coupling = d_max * ell / 8.0;
        p.gap = 0.05;
        p.mass = 2000.0;
        p.p0 = 2.0;
        p.sigma_p = 0.5;
        const auto g = nonlocal_grid(p, ell, 401);
        const auto rho = const_initial_state(p, pi / 4.0, g).rho;
        const double dt = 0.1;
        const auto exact = const_nonlocal_step(rho, p, dt);
        QclePropagator prop(p.model(), g, dt);
        PWTDM local = rho;
        prop.step(local);
        double e = 0.0;
        for (std::size_t i = 0; i < rho.r00.size(); ++i)
            e = std::max({e, std::abs(exact.r00[i] - local.r00[i]), std::abs(exact.r11[i] - local.r11[i]),
                          std::abs(exact.r01[i] - local.r01[i])});
        errs.push_back(e);
    }
    EXPECT_NEAR(errs[0] / errs[1], 4.0, 0.4);
    EXPECT_NEAR(errs[1] / errs[2], 4.0, 0.4);
}

TEST(ConstPerturbative, ClosedFormAtZeroTime)
{
    const auto p = large_set();
    const auto axis = uniform_axis(-600.0, 640.0, 1241);
    const auto eta = pert_marginal_closed_form(axis, 0.0, p);
    for (std::size_t k = 0; k < axis.size(); ++k)
        EXPECT_NEAR(eta[k], 0.5 * (normal_pdf(axis[k], 520.0, 2.0) + normal_pdf(axis[k], -480.0, 2.0)), 1e-15);
}

TEST(ConstPerturbative, ClosedFormSixGaussians)
{
    const auto p = large_set();
    const double t = 5e-4, s = p.d_coupling * p.gap * t, hd = p.kick(), p0 = p.p0;
    const auto axis = uniform_axis(-600.0, 640.0, 2481);
    const auto eta = pert_marginal_closed_form(axis, t, p);
    for (std::size_t k = 0; k < axis.size(); ++k) {
        const double x = axis[k];
        auto n = [&](double c) { return normal_pdf(x, c, p.sigma_p); };
        const double six =
            0.25 * (2 * n(p0 - s) - 2 * n(p0 + s) + n(p0 + hd + s) + n(p0 - hd + s) + n(p0 + hd - s) + n(p0 - hd - s));
        EXPECT_NEAR(eta[k], six, 1e-15);
    }
    EXPECT_LT(pert_marginal_closed_form({p0 + s}, t, p)[0], 0.0);
}

TEST(ConstPerturbative, WellSeparatedNegativityIsQuarter)
{
    const auto p = large_set();
    const double t = 5e-4;
    // separation of the closest pair (2 D E t = 50) is 25 sigma_p
    const auto axis = uniform_axis(-600.0, 640.0, 124001);
    const auto eta = pert_marginal_closed_form(axis, t, p);
    EXPECT_NEAR(negativity_index(eta), 0.25, 1e-6);
}

TEST(ConstPerturbative, LargeCouplingOrderZero)
{
    const auto p = large_set();
    const auto mix = const_initial_mixture(p, pi / 4.0);
    const auto axis = uniform_axis(-600.0, 640.0, 2481);
    const auto init = const_initial_marginals(p, pi / 4.0, axis);
    const auto z = pert_marginal_large_coupling(0, axis, 0.0, p, mix);
    for (int c = 0; c < 4; ++c) EXPECT_LT(max_abs_diff(z.eta[c], init.eta[c]), 1e-15);
    const double t = 7e-4;
    const auto o0 = pert_marginal_large_coupling(0, axis, t, p, mix);
    EXPECT_LT(max_abs_diff(o0.total(), pert_marginal_closed_form(axis, t, p)), 1e-15);
}

TEST(ConstPerturbative, LargeCouplingCorrectionsMatchHierarchyOracle)
{
    const auto p = large_set();
    const auto mix = const_initial_mixture(p, pi / 4.0);
    const auto axis = uniform_axis(-600.0, 640.0, 6201);
    Operators ops{p.c1(), 2 * p.c1() * p.c2(), (axis[1] - axis[0]) / p.sigma_p, {}};
    for (double v : axis) ops.pt.push_back(p.p_tilde(v));
    const Op4 ld = [&](const Field4& y, Field4& f) { ops.diff(y, f); };
    const Op4 lp = [&](const Field4& y, Field4& f) {
        Field4 b = f;
        ops.rot(y, f);
        ops.mul(y, b);
        for (int c = 0; c < 4; ++c)
            for (std::size_t k = 0; k < f[c].size(); ++k) f[c][k] += b[c][k];
    };
    const double t = 5e-4;
    const auto ref = hierarchy(const_initial_marginals(p, pi / 4.0, axis).eta, ld, lp, 3, p.t_tilde(t), 400);
    const auto o0 = pert_marginal_large_coupling(0, axis, t, p, mix);
    const auto o1 = pert_marginal_large_coupling(1, axis, t, p, mix);
    const auto o2 = pert_marginal_large_coupling(2, axis, t, p, mix);
    for (int c = 0; c < 4; ++c) {
        std::vector<double> d1(axis.size()), d2(axis.size());
        for (std::size_t k = 0; k < axis.size(); ++k) {
            d1[k] = o1.eta[c][k] - o0.eta[c][k];
            d2[k] = o2.eta[c][k] - o1.eta[c][k];
        }
        EXPECT_LT(max_abs_diff(o0.eta[c], ref[0][c]), 1e-7) << c;
        EXPECT_LT(max_abs_diff(d1, ref[1][c]), 1e-7) << c;
        EXPECT_LT(max_abs_diff(d2, ref[2][c]), 1e-7) << c;
    }
}

TEST(ConstPerturbative, FourierBranchIdentityAndRotationLimit)
{
    const auto p = small_set();
    const auto axis = uniform_axis(-20.0, 60.0, 801);
    const auto init = const_initial_marginals(p, 0.0, axis);
    for (int order : {0, 1}) {
        const auto z = pert_marginal_fourier(order, axis, 0.0, p, 0.0);
        for (int c = 0; c < 4; ++c) EXPECT_LT(max_abs_diff(z.eta[c], init.eta[c]), 1e-13);
    }
    auto q = p;
    q.d_coupling = 1e-9;
    const auto eta0 = const_initial_marginals(q, pi / 4.0, axis);
    const double t = 30.0, w = q.t_tilde(t);
    const auto z = pert_marginal_fourier(0, axis, t, q, pi / 4.0);
    for (std::size_t k = 0; k < axis.size(); ++k) {
        EXPECT_NEAR(z.eta[1][k], std::cos(w) * eta0.eta[1][k] + std::sin(w) * eta0.eta[2][k], 1e-9);
        EXPECT_NEAR(z.eta[2][k], -std::sin(w) * eta0.eta[1][k] + std::cos(w) * eta0.eta[2][k], 1e-9);
    }
}

TEST(ConstPerturbative, FourierBranchMatchesHierarchyOracle)
{
    const auto p = small_set();
    const auto axis = uniform_axis(-20.0, 60.0, 801);
    Operators ops{p.c1(), 2 * p.c1() * p.c2(), (axis[1] - axis[0]) / p.sigma_p, {}};
    for (double v : axis) ops.pt.push_back(p.p_tilde(v));
    const Op4 ld = [&](const Field4& y, Field4& f) {
        Field4 a = f;
        ops.diff(y, f);
        ops.rot(y, a);
        for (int c = 0; c < 4; ++c)
            for (std::size_t k = 0; k < f[c].size(); ++k) f[c][k] += a[c][k];
    };
    const Op4 lp = [&](const Field4& y, Field4& f) { ops.mul(y, f); };
    const double t = 500.0;
    const auto ref = hierarchy(const_initial_marginals(p, 0.0, axis).eta, ld, lp, 2, p.t_tilde(t), 1000);
    const auto o0 = pert_marginal_fourier(0, axis, t, p, 0.0);
    const auto o1 = pert_marginal_fourier(1, axis, t, p, 0.0);
    for (int c = 0; c < 4; ++c) {
        std::vector<double> d1(axis.size());
        for (std::size_t k = 0; k < axis.size(); ++k) d1[k] = o1.eta[c][k] - o0.eta[c][k];
        EXPECT_LT(max_abs_diff(o0.eta[c], ref[0][c]), 1e-7) << c;
        EXPECT_LT(max_abs_diff(d1, ref[1][c]), 1e-7) << c;
    }
}

TEST(ConstPerturbative, FourierBranchRejectsAliasedAxis)
{
    const auto p = small_set();
    EXPECT_THROW(pert_marginal_fourier(0, uniform_axis(-20.0, 60.0, 41), 10.0, p, 0.0), NumericalFailure);
    EXPECT_THROW(pert_marginal_fourier(0, uniform_axis(15.0, 25.0, 201), 500.0, p, 0.0), NumericalFailure);
}
