/// @file test_models.cpp
/// @brief Diabatic potentials, adiabatization, gauge continuity and force identities.

#include <qcle_lab/models.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace qlab;

namespace {

/// Eigenvalues of a real symmetric 2x2 matrix, ascending.
std::pair<double, double> eig2(const Mat2& v)
{
    const double m = 0.5 * (v[0][0] + v[1][1]), h = std::sqrt(0.25 * sqr(v[0][0] - v[1][1]) + sqr(v[0][1]));
    return {m - h, m + h};
}

} // namespace

TEST(Models, DacPotentialValues)
{
    const auto m = ModelSpec::dac_model();
    const Mat2 v = diabatic_potential(m, 0.0);
    EXPECT_DOUBLE_EQ(v[0][0], 0.0);
    EXPECT_DOUBLE_EQ(v[0][1], 0.015);
    EXPECT_DOUBLE_EQ(v[1][0], 0.015);
    EXPECT_NEAR(v[1][1], -0.05, 1e-16);
    const Mat2 w = diabatic_potential(m, 60.0);
    EXPECT_NEAR(w[0][1], 0.0, 1e-30);
    EXPECT_NEAR(w[1][1], 0.05, 1e-16);
}

TEST(Models, ConstantPotentialValues)
{
    const auto m = ModelSpec::constant_model(1.0, 0.05, 2000.0);
    const Mat2 v = diabatic_potential(m, 0.0);
    EXPECT_DOUBLE_EQ(v[0][0], 0.0);
    EXPECT_DOUBLE_EQ(v[0][1], 0.0);
    EXPECT_DOUBLE_EQ(v[1][1], 0.05);
}

TEST(Models, DerivativesMatchFiniteDifferences)
{
    for (const auto& m : {ModelSpec::dac_model(), ModelSpec::constant_model(1.3, 0.05, 2000.0)})
        for (double r : {-3.1, -0.4, 0.0, 0.9, 2.5}) {
            const double h = 1e-4;
            const auto j = diabatic_jet(m, r), jp = diabatic_jet(m, r + h), jm = diabatic_jet(m, r - h);
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    EXPECT_NEAR(j.dv[a][b], (jp.v[a][b] - jm.v[a][b]) / (2 * h), 1e-8);
                    EXPECT_NEAR(j.d2v[a][b], (jp.dv[a][b] - jm.dv[a][b]) / (2 * h), 1e-7);
                }
        }
}

TEST(Models, ConstantModelAdiabaticData)
{
    const auto m = ModelSpec::constant_model(1.7, 0.05, 2000.0);
    for (double r : {-4.0, -1.0, 0.0, 0.3, 2.0, 7.0}) {
        const auto a = adiabatize(m, r);
        EXPECT_DOUBLE_EQ(a.e0, 0.0);
        EXPECT_DOUBLE_EQ(a.e1, 0.05);
        EXPECT_DOUBLE_EQ(a.d01, 1.7);
        EXPECT_DOUBLE_EQ(a.g[0][0], -1.7 * 1.7);
        EXPECT_DOUBLE_EQ(a.g[1][1], -1.7 * 1.7);
        EXPECT_DOUBLE_EQ(a.f[0][1], -1.7 * 0.05);
        EXPECT_DOUBLE_EQ(a.f[0][0], 0.0);
        // U diagonalizes V
        const Mat2 v = diabatic_potential(m, r);
        for (int col = 0; col < 2; ++col) {
            const double e = col == 0 ? a.e0 : a.e1;
            for (int row = 0; row < 2; ++row)
                EXPECT_NEAR(v[row][0] * a.u[0][col] + v[row][1] * a.u[1][col], e * a.u[row][col], 1e-14);
        }
    }
    const auto a0 = adiabatize(m, 0.0);
    EXPECT_NEAR(a0.u[0][0], 1.0, 1e-15);
    EXPECT_NEAR(a0.u[1][1], 1.0, 1e-15);
    EXPECT_NEAR(a0.u[0][1], 0.0, 1e-15);
}

TEST(Models, DacAtOrigin)
{
    const auto a = adiabatize(ModelSpec::dac_model(), 0.0);
    EXPECT_NEAR(a.theta, std::atan2(0.03, 0.05), 1e-14);
    EXPECT_NEAR(a.theta, 0.54042, 1e-5);
    const double s = std::sqrt(0.0025 + 0.0009);
    EXPECT_NEAR(a.e0, (-0.05 - s) / 2.0, 1e-15);
    EXPECT_NEAR(a.e1, (-0.05 + s) / 2.0, 1e-15);
    EXPECT_NEAR(a.e0, -0.054155, 1e-6);
    EXPECT_NEAR(a.e1, 0.0041548, 1e-7);
}

TEST(Models, DacAsymptote)
{
    const auto a = adiabatize(ModelSpec::dac_model(), 40.0);
    EXPECT_NEAR(a.theta, pi, 1e-12);
    EXPECT_NEAR(std::abs(a.u[0][0]), 1.0, 1e-12);
    EXPECT_NEAR(a.e0, 0.0, 1e-15);
    EXPECT_NEAR(a.e1, 0.05, 1e-15);
}

TEST(Models, EigenResidualOrthogonalityAndOrdering)
{
    const auto m = ModelSpec::dac_model();
    for (double r = -10.0; r <= 10.0; r += 0.37) {
        const auto a = adiabatize(m, r);
        const Mat2 v = diabatic_potential(m, r);
        const auto [l0, l1] = eig2(v);
        EXPECT_NEAR(a.e0, l0, 1e-15);
        EXPECT_NEAR(a.e1, l1, 1e-15);
        EXPECT_LE(a.e0, a.e1);
        for (int col = 0; col < 2; ++col) {
            const double e = col == 0 ? a.e0 : a.e1;
            for (int row = 0; row < 2; ++row)
                EXPECT_LE(std::abs(v[row][0] * a.u[0][col] + v[row][1] * a.u[1][col] - e * a.u[row][col]), 1e-12);
        }
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q)
                EXPECT_NEAR(a.u[0][p] * a.u[0][q] + a.u[1][p] * a.u[1][q], p == q ? 1.0 : 0.0, 1e-12);
        EXPECT_DOUBLE_EQ(a.f[0][1], a.f[1][0]);
        EXPECT_DOUBLE_EQ(a.g[0][1], -a.g[1][0]);
    }
}

TEST(Models, HellmannFeynmanForces)
{
    const auto m = ModelSpec::dac_model();
    const double h = 1e-4;
    for (double r = -6.0; r <= 6.0; r += 0.25) {
        const auto a = adiabatize(m, r), ap = adiabatize(m, r + h), am = adiabatize(m, r - h);
        EXPECT_NEAR(a.f[0][0], -(ap.e0 - am.e0) / (2 * h), 1e-6);
        EXPECT_NEAR(a.f[1][1], -(ap.e1 - am.e1) / (2 * h), 1e-6);
    }
}

TEST(Models, CouplingIsHalfAngleDerivative)
{
    // proper-rotation gauge: d01 = -(1/2) dtheta/dR
    const auto m = ModelSpec::dac_model();
    const double h = 1e-5;
    for (double r = -6.0; r <= 6.0; r += 0.25) {
        const auto a = adiabatize(m, r);
        const double tp = adiabatize(m, r + h).theta, tm = adiabatize(m, r - h).theta;
        EXPECT_NEAR(a.d01, -0.5 * (tp - tm) / (2 * h), 1e-8);
        // d01 equals the overlap <0|d/dR|1> of the eigenvector columns
        const auto ap = adiabatize(m, r + h), am = adiabatize(m, r - h);
        const double ov = a.u[0][0] * (ap.u[0][1] - am.u[0][1]) / (2 * h) + a.u[1][0] * (ap.u[1][1] - am.u[1][1]) / (2 * h);
        EXPECT_NEAR(a.d01, ov, 1e-7);
        // second-order coupling g = <alpha| d2/dR2 |beta>
        const double g00 = a.u[0][0] * (ap.u[0][0] - 2 * a.u[0][0] + am.u[0][0]) / (h * h) +
                           a.u[1][0] * (ap.u[1][0] - 2 * a.u[1][0] + am.u[1][0]) / (h * h);
        EXPECT_NEAR(a.g[0][0], g00, 1e-4);
    }
}

TEST(Models, ProfileGaugeContinuityAndSymmetry)
{
    const auto m = ModelSpec::dac_model();
    std::vector<double> rs;
    for (int k = -400; k <= 400; ++k) rs.push_back(0.05 * k);
    const auto p = coupling_profile(m, rs);
    EXPECT_GE(p.u[0][0][0], 0.0);
    for (std::size_t k = 1; k < rs.size(); ++k) {
        for (int col = 0; col < 2; ++col)
            EXPECT_GT(p.u[k - 1][0][col] * p.u[k][0][col] + p.u[k - 1][1][col] * p.u[k][1][col], 0.0);
        EXPECT_LT(std::abs(p.theta[k] - p.theta[k - 1]), 0.5);
    }
    const std::size_t n = rs.size();
    // theta is even in R, so d01 is odd and |d01| is even
    for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(p.d01[k], -p.d01[n - 1 - k], 1e-14);
    // F00 against finite differences of the ground energy on the grid
    for (std::size_t k = 1; k + 1 < n; ++k) EXPECT_NEAR(p.f00[k], -(p.e0[k + 1] - p.e0[k - 1]) / 0.1, 2e-4);
}

TEST(Models, GaugeFlipInvariance)
{
    const auto m = ModelSpec::dac_model();
    for (double r : {-2.0, 0.5, 3.0}) {
        const auto a = adiabatize(m, r);
        Mat2 u = a.u;
        u[0][1] = -u[0][1];
        u[1][1] = -u[1][1];
        // |d01| and |F01| from the flipped basis
        const Mat2 dv = diabatic_jet(m, r).dv;
        double f01 = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 2; ++k) f01 -= u[i][0] * dv[i][k] * u[k][1];
        EXPECT_NEAR(std::abs(f01), std::abs(a.f[0][1]), 1e-15);
    }
}

TEST(Models, ProfileOfConstantModelIsUniform)
{
    const auto m = ModelSpec::constant_model(1.0, 0.05, 2000.0);
    std::vector<double> rs;
    for (int k = -100; k <= 100; ++k) rs.push_back(0.1 * k);
    const auto p = coupling_profile(m, rs);
    for (std::size_t k = 0; k < rs.size(); ++k) {
        EXPECT_DOUBLE_EQ(p.e0[k], 0.0);
        EXPECT_DOUBLE_EQ(p.e1[k], 0.05);
        EXPECT_DOUBLE_EQ(p.d01[k], 1.0);
        EXPECT_DOUBLE_EQ(p.f01[k], -0.05);
        EXPECT_DOUBLE_EQ(p.f00[k], 0.0);
    }
}

TEST(Models, ValidationRejectsBadParameters)
{
    auto m = ModelSpec::dac_model();
    m.mass = -1.0;
    EXPECT_THROW(m.validate(), InvalidInput);
    auto c = ModelSpec::constant_model(-1.0, 0.05, 2000.0);
    EXPECT_THROW(c.validate(), InvalidInput);
    DacParams p;
    p.C = 0.0;
    EXPECT_THROW(adiabatize(ModelSpec::dac_model(p), 0.0 + std::sqrt(std::log(2.0) / 0.28)), NumericalFailure);
}
