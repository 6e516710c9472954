/// @file test_observables.cpp
/// @brief Marginals, negativity index, populations, energy, purity and phase-space means.

#include <qcle_lab/models.hpp>
#include <qcle_lab/observables.hpp>
#include <qcle_lab/tdse.hpp>
#include <qcle_lab/wigner.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace qlab;

namespace {

PWTDM adiabatic_gaussian(const PhaseSpaceGrid& g, const ModelSpec& model, double r0, double p0, double sp, double theta)
{
    const auto prof = coupling_profile(model, g);
    const auto ad = gaussian_packet(GaussianSpec::from_sigma_p(r0, p0, sp, theta), g, Basis::adiabatic);
    return rotate_basis(partial_wigner_transform(change_basis(ad, prof, Basis::diabatic)), prof, Basis::adiabatic);
}

} // namespace

TEST(Negativity, NonNegativeIsZero)
{
    std::vector<double> f;
    for (int k = -50; k <= 50; ++k) f.push_back(normal_pdf(0.1 * k, 0.0, 1.0));
    EXPECT_EQ(negativity_index(f), 0.0);
    EXPECT_EQ(negativity_index(std::vector<double>(10, 0.0)), 0.0);
    EXPECT_EQ(negativity_index(std::vector<double>{1e-15, -1e-15}), 0.0);
}

TEST(Negativity, AntisymmetricPairIsHalf)
{
    std::vector<double> f;
    for (int k = -2000; k <= 2000; ++k) {
        const double x = 0.01 * k;
        f.push_back(normal_pdf(x, 6.0, 0.5) - normal_pdf(x, -6.0, 0.5));
    }
    EXPECT_NEAR(negativity_index(f), 0.5, 1e-12);
}

TEST(Negativity, RangeAndZeroCriterion)
{
    const std::vector<double> all_neg{-1.0, -2.0, -0.5};
    EXPECT_DOUBLE_EQ(negativity_index(all_neg), 1.0);
    const std::vector<double> f{0.3, -0.1, 0.5, 0.0};
    const double n = negativity_index(f);
    EXPECT_GT(n, 0.0);
    EXPECT_LT(n, 1.0);
    EXPECT_NEAR(n, 0.1 / 0.9, 1e-15);
}

TEST(Observables, GaussianMarginalsAndBasisIndependence)
{
    const auto g = make_grid(161, 0.1, 3.0);
    const auto model = ModelSpec::dac_model();
    const auto rho = adiabatic_gaussian(g, model, -1.0, 3.0, 1.0, 0.6);
    const auto n = marginal(rho, Axis::R);
    for (std::size_t m = 0; m < g.n_points; ++m) EXPECT_NEAR(n.values[m], normal_pdf(g.r_values[m], -1.0, 0.5), 1e-9);
    EXPECT_NEAR(n.integral(), 1.0, 1e-6);
    const auto dia = rotate_basis(rho, coupling_profile(model, g), Basis::diabatic);
    const auto a = marginal(rho, Axis::P), b = marginal(dia, Axis::P);
    for (std::size_t k = 0; k < g.n_points; ++k) EXPECT_NEAR(a.values[k], b.values[k], 1e-10);
    EXPECT_THROW(marginal(rho, Axis::P, "bogus"), InvalidInput);
}

TEST(Observables, PopulationDifference)
{
    const auto g = make_grid(101, 0.1, 2.0);
    const auto model = ModelSpec::dac_model();
    EXPECT_NEAR(population_difference(adiabatic_gaussian(g, model, 0.0, 2.0, 1.0, 0.0)), 1.0, 1e-10);
    EXPECT_NEAR(population_difference(adiabatic_gaussian(g, model, 0.0, 2.0, 1.0, pi / 2)), -1.0, 1e-10);
    EXPECT_NEAR(population_difference(adiabatic_gaussian(g, model, 0.0, 2.0, 1.0, 0.3)), std::cos(0.6), 1e-10);
}

TEST(Observables, EnergyOfFreeGaussian)
{
    const auto g = make_grid(201, 0.1, 4.0);
    const auto flat = ModelSpec::constant_model(0.0, 0.0, 2000.0);
    const double p0 = 4.0, sp = 1.0;
    const auto rho = adiabatic_gaussian(g, flat, 0.0, p0, sp, 0.0);
    EXPECT_NEAR(energy(rho, flat), (p0 * p0 + sp * sp) / 4000.0, 1e-6);
    // an adiabatic packet of the constant model also carries the hbar^2 D^2 / 2M
    // kinetic energy of its rotating diabatic components
    const double d = 1.0;
    const auto cm = ModelSpec::constant_model(d, 0.05, 2000.0);
    const double kin = (p0 * p0 + sp * sp + d * d) / 4000.0;
    EXPECT_NEAR(energy(adiabatic_gaussian(g, cm, 0.0, p0, sp, 0.0), cm), kin, 1e-6);
    EXPECT_NEAR(energy(adiabatic_gaussian(g, cm, 0.0, p0, sp, pi / 2), cm), kin + 0.05, 1e-6);
    const auto prof = coupling_profile(cm, g);
    const auto psi = change_basis(gaussian_packet(GaussianSpec::from_sigma_p(0.0, p0, sp, 0.0), g, Basis::adiabatic), prof, Basis::diabatic);
    EXPECT_NEAR(wavefunction_energy(psi, cm), kin, 1e-6);
}

TEST(Observables, PurityPureAndMixed)
{
    const auto g = make_grid(201, 0.1, 0.0);
    const auto model = ModelSpec::dac_model();
    const auto a = adiabatic_gaussian(g, model, -4.0, 0.0, 1.0, 0.4);
    EXPECT_NEAR(purity(a), 1.0, 1e-4);
    const auto b = adiabatic_gaussian(g, model, 4.0, 0.0, 1.0, 0.0);
    PWTDM mix = a;
    for (std::size_t i = 0; i < mix.r00.size(); ++i) {
        mix.r00[i] = 0.5 * (a.r00[i] + b.r00[i]);
        mix.r11[i] = 0.5 * (a.r11[i] + b.r11[i]);
        mix.r01[i] = 0.5 * (a.r01[i] + b.r01[i]);
    }
    EXPECT_NEAR(purity(mix), 0.5, 1e-3);
}

TEST(Observables, MeanPhasePoint)
{
    const auto g = build_grid(-15.0, 20.0, 0.5, 2, 0.1);
    const auto model = ModelSpec::dac_model();
    const auto rho = adiabatic_gaussian(g, model, -15.0, 20.0, 1.0, 0.0);
    const auto pp = mean_phase_point(rho);
    EXPECT_NEAR(pp.r, -15.0, 3 * g.dr);
    EXPECT_NEAR(pp.p, 20.0, 3 * g.dp);
    const auto dia = rotate_basis(rho, model, Basis::diabatic);
    const auto pq = mean_phase_point(dia);
    EXPECT_NEAR(pq.r, pp.r, 1e-10);
    EXPECT_NEAR(pq.p, pp.p, 1e-10);
}

TEST(Observables, WavefunctionObservablesMatchWignerOnes)
{
    const auto g = make_grid(161, 0.1, 3.0);
    const auto model = ModelSpec::dac_model();
    const auto prof = coupling_profile(model, g);
    const auto psi = change_basis(gaussian_packet(GaussianSpec::from_sigma_p(-1.0, 3.0, 1.0, 0.5), g, Basis::adiabatic), prof, Basis::diabatic);
    const auto rho = rotate_basis(partial_wigner_transform(psi), prof, Basis::adiabatic);
    EXPECT_NEAR(population_difference(psi, prof), population_difference(rho), 1e-10);
    EXPECT_NEAR(mean_position(psi), mean_phase_point(rho).r, 1e-10);
    EXPECT_NEAR(mean_momentum(psi), mean_phase_point(rho).p, 1e-8);
    EXPECT_NEAR(excited_population(psi, prof), 0.5 * (1.0 - population_difference(rho)), 1e-10);
    EXPECT_NEAR(wavefunction_energy(psi, model), energy(rho, prof, model.mass), 1e-6);
}

TEST(Observables, ObservableCsvSchema)
{
    std::ostringstream os;
    write_observable_header(os, "unit");
    ObservableRecord r;
    r.t = 1.5;
    write_observable_row(os, r);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "# unit");
    std::getline(in, line);
    EXPECT_EQ(line, "t,trace,pop_diff,mean_r,mean_p,energy,purity,neg_r,neg_p");
    std::getline(in, line);
    EXPECT_EQ(line.rfind("1.5,1,0,", 0), 0u);
}
