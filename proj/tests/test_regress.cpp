#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ahp/regress.hpp"
#include "oracles.hpp"

using namespace ahp;
using std::numbers::pi;

TEST(Regress, FourierFrequencies) {
    const auto f8 = fourier_frequencies(8);
    ASSERT_EQ(f8.size(), 3u);
    EXPECT_DOUBLE_EQ(f8[0], pi / 4);
    EXPECT_DOUBLE_EQ(f8[1], pi / 2);
    EXPECT_DOUBLE_EQ(f8[2], 3 * pi / 4);
    const auto f9 = fourier_frequencies(9);
    ASSERT_EQ(f9.size(), 4u);
    for (int k = 1; k <= 4; ++k) EXPECT_DOUBLE_EQ(f9[k - 1], 2 * pi * k / 9);
    for (std::size_t n : {4u, 5u, 100u, 101u, 256u}) {
        const auto f = fourier_frequencies(n);
        EXPECT_EQ(f.size(), fourier_count(n));
        for (std::size_t i = 0; i < f.size(); ++i) {
            EXPECT_GT(f[i], 0.0);
            EXPECT_LT(f[i], pi);
            if (i) { EXPECT_GT(f[i], f[i - 1]); }
        }
    }
    EXPECT_THROW(fourier_frequencies(3), std::domain_error);
}

TEST(Regress, FourierIndexRejectsOffGrid) {
    EXPECT_EQ(fourier_index(2 * pi * 5 / 64, 64), 5u);
    EXPECT_THROW(fourier_index(0.123, 64), std::domain_error);
    EXPECT_THROW(fourier_index(pi, 64), std::domain_error);
}

TEST(Regress, LargePsiRecoversCosineAmplitude) {
    const std::size_t n = 64;
    const double w = 2 * pi * 5 / n;
    std::vector<double> y(n);
    for (std::size_t t = 1; t <= n; ++t) y[t - 1] = 2 * std::cos(w * t);
    const auto fit = fit_ahr(y, w, AHParams(0.5, 1e6));
    // closed-form least squares (2/n) sum y cos, (2/n) sum y sin
    double c = 0, s = 0;
    for (std::size_t t = 1; t <= n; ++t) c += y[t - 1] * std::cos(w * t), s += y[t - 1] * std::sin(w * t);
    EXPECT_NEAR(fit.beta1, 2.0 * c / n, 1e-6);
    EXPECT_NEAR(fit.beta1, 2.0, 1e-6);
    EXPECT_NEAR(fit.beta2, 0.0, 1e-6);
    EXPECT_TRUE(fit.converged);
}

TEST(Regress, OlsLimitOnRandomSeries) {
    const auto y = oracle::normals(101, 8);
    double mean = 0;
    for (double v : y) mean += v;
    mean /= y.size();
    const double sd = sample_std(y);
    const AhrProblem prob(y, AHParams(0.5, 1e6 * sd));
    EXPECT_NEAR(prob.mu(), mean, 1e-10);
    for (std::size_t k = 1; k <= fourier_count(y.size()); k += 7) {
        const auto fit = prob.fit_index(k);
        const auto z = oracle::dft(std::vector<double>([&] {
                                       std::vector<double> c(y);
                                       for (double& v : c) v -= mean;
                                       return c;
                                   }()),
                                   k);
        EXPECT_NEAR(fit.beta1, 2.0 * z.real() / y.size(), 1e-6 * (1 + std::abs(fit.beta1)));
        EXPECT_NEAR(fit.beta2, -2.0 * z.imag() / y.size(), 1e-6 * (1 + std::abs(fit.beta2)));
    }
}

TEST(Regress, MinimizerBeatsZero) {
    for (unsigned s = 0; s < 10; ++s) {
        const auto y = oracle::normals(50, 70 + s);
        const AhrProblem prob(y, AHParams::std_multiple(0.3, 0.674));
        for (std::size_t k = 1; k <= fourier_count(50); ++k) {
            const auto fit = prob.fit_index(k);
            EXPECT_LE(fit.objective, prob.objective(k, 0.0, 0.0) + 1e-12);
        }
    }
}

TEST(Regress, MatchesNestedGridOracle) {
    for (unsigned s = 0; s < 10; ++s) {
        const std::size_t n = 32;
        auto y = oracle::normals(n, 300 + s);
        y[s % n] += 6.0;  // one gross outlier
        const double alpha = 0.2 + 0.06 * s;
        const double psi = (0.5 + 0.1 * s) * sample_std(y);
        const AhrProblem prob(y, AHParams(alpha, psi));
        const std::size_t k = 1 + s % fourier_count(n);
        const double w = 2 * pi * k / n;
        const auto fit = prob.fit_index(k);
        auto f = [&](double b1, double b2) { return oracle::regression_objective(y, prob.mu(), w, b1, b2, alpha, psi); };
        const auto [g1, g2] = oracle::nested_grid(f, 0.0, 0.0, 3.0, 1e-2, 1e-6);
        EXPECT_NEAR(fit.beta1, g1, 1e-4);
        EXPECT_NEAR(fit.beta2, g2, 1e-4);
        EXPECT_TRUE(fit.converged);
    }
}

TEST(Regress, ObjectiveNonincreasingAcrossIterations) {
    SolverConfig cfg;
    cfg.record_trace = true;
    for (unsigned s = 0; s < 30; ++s) {
        auto y = oracle::normals(40, 500 + s);
        for (double& v : y) v = v * v * v;  // heavy tails
        const AhrProblem prob(y, AHParams::std_multiple(0.1 + 0.027 * s, 0.3));
        for (std::size_t k = 1; k <= fourier_count(40); k += 3) {
            const auto fit = prob.fit_index(k, cfg);
            ASSERT_FALSE(fit.objective_trace.empty());
            for (std::size_t i = 1; i < fit.objective_trace.size(); ++i)
                EXPECT_LE(fit.objective_trace[i], fit.objective_trace[i - 1]);
        }
    }
}

TEST(Regress, ConvergedImpliesToleranceAndGradient) {
    SolverConfig cfg;
    for (unsigned s = 0; s < 10; ++s) {
        const auto y = oracle::normals(64, 40 + s);
        const AhrProblem prob(y, AHParams::std_multiple(0.7, 1.0));
        const double gtol = 1e-6 * 64 * std::min(prob.psi(), prob.scale());
        for (std::size_t k = 1; k <= fourier_count(64); ++k) {
            const auto fit = prob.fit_index(k, cfg);
            if (!fit.converged) continue;
            EXPECT_LE(fit.final_step, cfg.tolerance);
            EXPECT_LE(fit.grad_norm, gtol);
            EXPECT_NEAR(prob.gradient_norm(k, fit.beta1, fit.beta2), fit.grad_norm, 1e-9 * (1 + fit.grad_norm));
        }
    }
}

TEST(Regress, ScaleCovarianceInQuadraticBand) {
    const auto y = oracle::normals(60, 9);
    const double psi = 1e6 * sample_std(y);
    for (double c : {0.01, 3.0, 250.0}) {
        std::vector<double> z(y);
        for (double& v : z) v *= c;
        const AhrProblem py(y, AHParams(0.65, psi)), pz(z, AHParams(0.65, c * psi));
        EXPECT_NEAR(pz.mu(), c * py.mu(), 1e-9 * c);
        for (std::size_t k : {1u, 7u, 29u}) {
            const auto fy = py.fit_index(k), fz = pz.fit_index(k);
            EXPECT_NEAR(fz.beta1, c * fy.beta1, 1e-8 * c);
            EXPECT_NEAR(fz.beta2, c * fy.beta2, 1e-8 * c);
        }
    }
}

TEST(Regress, DeterministicRepeatedFits) {
    const auto y = oracle::normals(90, 1);
    const AhrProblem p(y, AHParams::std_multiple(0.4, 0.674));
    for (std::size_t k = 1; k <= fourier_count(90); ++k) {
        const auto a = p.fit_index(k), b = AhrProblem(y, AHParams::std_multiple(0.4, 0.674)).fit_index(k);
        EXPECT_EQ(a.beta1, b.beta1);
        EXPECT_EQ(a.beta2, b.beta2);
    }
}

TEST(Regress, TinyPsiUsesWeightFloorWithoutFailing) {
    const auto y = oracle::normals(48, 2);
    const AhrProblem prob(y, AHParams::std_multiple(0.5, 1e-9));
    for (std::size_t k = 1; k <= fourier_count(48); ++k) {
        const auto fit = prob.fit_index(k);
        EXPECT_TRUE(std::isfinite(fit.beta1));
        EXPECT_TRUE(std::isfinite(fit.beta2));
        EXPECT_LE(fit.objective, prob.objective(k, 0.0, 0.0) + 1e-15);
    }
}

TEST(Regress, InterceptOptionFitsOffset) {
    const std::size_t n = 64;
    const double w = 2 * pi * 3 / n;
    std::vector<double> y(n);
    for (std::size_t t = 1; t <= n; ++t) y[t - 1] = 5.0 + std::sin(w * t);
    SolverConfig cfg;
    cfg.include_intercept = true;
    const AhrProblem prob(y, AHParams(0.5, 100.0), 0.0);
    const auto fit = prob.fit_index(3, cfg);
    EXPECT_NEAR(fit.intercept, 5.0, 1e-8);
    EXPECT_NEAR(fit.beta1, 0.0, 1e-8);
    EXPECT_NEAR(fit.beta2, 1.0, 1e-8);
}

TEST(Regress, ConfigValidation) {
    SolverConfig c;
    c.tolerance = 0;
    EXPECT_THROW(c.validate(), std::domain_error);
    c = {};
    c.max_iter = 0;
    EXPECT_THROW(c.validate(), std::domain_error);
    c = {};
    c.weight_floor = -1;
    EXPECT_THROW(c.validate(), std::domain_error);
    c = {};
    c.grad_tolerance = 0.0;
    EXPECT_THROW(c.validate(), std::domain_error);
}
