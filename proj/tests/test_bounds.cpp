#include <genbound/bounds.hpp>
#include <genbound/constructor.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

namespace {

using namespace genbound;
using genbound::testing::gaussian;
using genbound::testing::uniform_int;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST(RadiusAndDiameter, Examples) {
    const Datasetd origin{MatrixXd::Zero(1, 1), MatrixXd::Zero(1, 1)};
    const Datasetd none{MatrixXd(1, 0), MatrixXd(1, 0)};
    auto e = radius_and_diameter(origin, none);
    EXPECT_EQ(e.radius, 0.0);
    EXPECT_EQ(e.diameter, 0.0);

    const Datasetd far{MatrixXd::Constant(1, 1, 3.0), MatrixXd::Constant(1, 1, 4.0)};
    e = radius_and_diameter(origin, far);
    EXPECT_EQ(e.radius, 5.0);
    EXPECT_EQ(e.diameter, 5.0);
    EXPECT_THROW(radius_and_diameter(none, none), EmptyCloud);
}

TEST(RadiusAndDiameter, MatchesPairScan) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const Datasetd a = genbound::testing::random_dataset(rng, 2, 1, 2);
        const Datasetd b = genbound::testing::random_dataset(rng, 2, 1, 1);
        std::vector<VectorXd> pts;
        for (const Datasetd* d : {&a, &b}) {
            for (Index k = 0; k < d->size(); ++k) {
                VectorXd z(3);
                z << d->inputs.col(k), d->labels.col(k);
                pts.push_back(z);
            }
        }
        double r = 0, diam = 0;
        for (const auto& p : pts) {
            r = std::max(r, p.norm());
            for (const auto& o : pts) diam = std::max(diam, (p - o).norm());
        }
        const auto e = radius_and_diameter(a, b);
        EXPECT_DOUBLE_EQ(e.radius, r);
        EXPECT_DOUBLE_EQ(e.diameter, diam);
    }
}

TEST(JungRadiusBound, Examples) {
    EXPECT_DOUBLE_EQ(jung_radius_bound(2.0, 1), 1.0);
    EXPECT_EQ(jung_radius_bound(0.0, 5), 0.0);
    EXPECT_NEAR(jung_radius_bound(1.0, 1000000), 1.0 / std::sqrt(2.0), 1e-6);
    EXPECT_THROW(jung_radius_bound(1.0, 0), InvalidConfig);
}

TEST(JungRadiusBound, AttainedByRegularSimplex) {
    // Regular simplex on the unit vectors of R^(d+1): diameter sqrt(2),
    // circumradius sqrt(d / (d + 1)), which Jung's bound attains.
    for (Index d = 1; d <= 6; ++d) {
        const double circumradius = std::sqrt(double(d) / double(d + 1));
        EXPECT_NEAR(jung_radius_bound(std::sqrt(2.0), d), circumradius, 1e-14);
    }
}

TEST(AprioriBound, DegenerateCaseIsZero) {
    const NetworkParamsd zero = NetworkParamsd::zeros(Architecture({2, 2, 1}));
    const Datasetd origin{MatrixXd::Zero(2, 1), MatrixXd::Zero(1, 1)};
    EXPECT_EQ(apriori_bound(zero, origin, origin), 0.0);
    EXPECT_EQ(loss_discrepancy(zero, origin, origin), 0.0);
}

TEST(AprioriBound, DominatesDiscrepancy) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const Index depth = uniform_int(rng, 1, 3);
        std::vector<Index> dims{uniform_int(rng, 1, 6)};
        for (Index l = 0; l < depth; ++l) dims.push_back(uniform_int(rng, 1, 6));
        dims.push_back(uniform_int(rng, 1, 3));
        const Architecture arch(dims);
        const NetworkParamsd p = genbound::testing::random_params(rng, arch, 1.5, 0.5);
        const Datasetd train = genbound::testing::random_dataset(rng, arch.input_dim(), arch.output_dim(),
                                                                  uniform_int(rng, 1, 10));
        const Datasetd test = genbound::testing::random_dataset(rng, arch.input_dim(), arch.output_dim(),
                                                                 uniform_int(rng, 1, 10));
        const double gap = loss_discrepancy(p, train, test);
        const double exact = apriori_bound(p, train, test);
        EXPECT_LE(gap, exact);
        EXPECT_LE(exact, apriori_bound_recursive(p, train, test) * (1 + 1e-12));
    }
}

TEST(ZeroLossBound, SelfCaseIsZero) {
    std::mt19937_64 rng(3);
    const Datasetd train = genbound::testing::random_dataset(rng, 6, 2, 4);
    const auto rep = construct_zero_loss(train, Architecture({6, 5, 2}));
    EXPECT_EQ(zero_loss_bound(rep.params, train, train), 0.0);
    EXPECT_LE(mse_error(rep.params, train), 1e-20);
}

TEST(ZeroLossBound, EqualsChamferSquaredForConstructedNetworks) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const Index depth = uniform_int(rng, 1, 4);
        const Architecture arch = genbound::testing::random_non_increasing(rng, depth, 12);
        const Index n = uniform_int(rng, 1, arch.input_dim());
        const Datasetd train = genbound::testing::random_dataset(rng, arch.input_dim(), arch.output_dim(), n);
        const Datasetd test = genbound::testing::random_dataset(rng, arch.input_dim(), arch.output_dim(),
                                                                 uniform_int(rng, 1, 10));
        const auto rep = construct_zero_loss(train, arch);
        const double d_sq = chamfer_unidirectional(test, train, rep.params.weights[0]).squared_distance;
        const double bound = zero_loss_bound(rep.params, train, test);
        EXPECT_NEAR(bound, d_sq, 1e-9 * d_sq);
        EXPECT_DOUBLE_EQ(experimental_bound(rep.params, train, test), bound);
        EXPECT_LE(mse_error(rep.params, test), bound + 1e-9);
    }
}

TEST(ZeroLossBound, RejectsNonzeroTrainLoss) {
    std::mt19937_64 rng(5);
    const NetworkParamsd p = genbound::testing::random_params(rng, Architecture({3, 3, 1}));
    const Datasetd data = genbound::testing::random_dataset(rng, 3, 1, 4);
    EXPECT_THROW(zero_loss_bound(p, data, data), TrainLossNotZero);
}

TEST(GeneralBound, ArithmeticExample) {
    EXPECT_DOUBLE_EQ(general_bound_terms(4.0, 0.5, 1.0), 9.0);
    EXPECT_THROW(general_bound_terms(4.0, 0.5, 0.0), NonPositiveDelta);
    EXPECT_THROW(general_bound_terms(4.0, 0.5, -1.0), NonPositiveDelta);
}

TEST(GeneralBound, SmallDeltaRecoversZeroLossForm) {
    std::mt19937_64 rng(6);
    const Datasetd train = genbound::testing::random_dataset(rng, 8, 2, 5);
    const Datasetd test = genbound::testing::random_dataset(rng, 8, 2, 6);
    const auto rep = construct_zero_loss(train, Architecture({8, 8, 2}));
    const double zl = zero_loss_bound(rep.params, train, test);
    EXPECT_NEAR(general_bound(rep.params, train, test, 1e-9), zl, 1e-6 * zl);
}

TEST(GeneralBound, HoldsForArbitraryNetworks) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const Index depth = uniform_int(rng, 1, 3);
        std::vector<Index> dims{uniform_int(rng, 1, 6)};
        for (Index l = 0; l < depth; ++l) dims.push_back(uniform_int(rng, 1, 6));
        dims.push_back(uniform_int(rng, 1, 3));
        const Architecture arch(dims);
        const NetworkParamsd p = genbound::testing::random_params(rng, arch, 2.0, 0.5);
        const Datasetd train = genbound::testing::random_dataset(rng, arch.input_dim(), arch.output_dim(),
                                                                  uniform_int(rng, 1, 8));
        const Datasetd test = genbound::testing::random_dataset(rng, arch.input_dim(), arch.output_dim(),
                                                                 uniform_int(rng, 1, 8));
        const double e_test = mse_error(p, test);
        for (double delta : {0.25, 1.0, 4.0}) {
            EXPECT_LE(e_test, general_bound(p, train, test, delta) + 1e-9);
        }
    }
}

TEST(GeneralBound, OptimalDeltaMinimizes) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const double a = std::exp(gaussian(rng, 1, 1)(0, 0));
        const double b = std::exp(gaussian(rng, 1, 1)(0, 0));
        const auto best = optimal_delta(a, b);
        ASSERT_TRUE(best.has_value());
        const double at_best = general_bound_terms(a, b, *best);
        // Closed form of the minimum: (sqrt(a) + sqrt(b))^2.
        EXPECT_NEAR(at_best, std::pow(std::sqrt(a) + std::sqrt(b), 2), 1e-12 * at_best);
        for (double d : {0.01, 0.5, 1.0, 2.0, 100.0}) {
            EXPECT_LE(at_best, general_bound_terms(a, b, d) * (1 + 1e-14));
        }
    }
    EXPECT_FALSE(optimal_delta(0.0, 1.0).has_value());
    EXPECT_FALSE(optimal_delta(1.0, 0.0).has_value());
}

TEST(ExperimentalBound, ShallowArithmeticExample) {
    // ||W2|| = 3 and a single test point at combined distance sqrt(2).
    NetworkParamsd p = NetworkParamsd::zeros(Architecture({1, 1, 1}));
    p.weights[0](0, 0) = 1;
    p.weights[1](0, 0) = 3;
    const Datasetd train{MatrixXd::Zero(1, 1), MatrixXd::Zero(1, 1)};
    const Datasetd test{MatrixXd::Constant(1, 1, std::sqrt(2.0)), MatrixXd::Zero(1, 1)};
    EXPECT_NEAR(experimental_bound(p, train, test), 18.0, 1e-12);
}

TEST(GammaRatio, Examples) {
    EXPECT_EQ(gamma_ratio(4.0, 2.0), 2.0);
    EXPECT_THROW(gamma_ratio(4.0, 0.0), ZeroTestError);
}

TEST(BoundReport, InvariantUnderTrainingOrder) {
    std::mt19937_64 rng(9);
    const NetworkParamsd p = genbound::testing::random_params(rng, Architecture({5, 4, 2}));
    const Datasetd train = genbound::testing::random_dataset(rng, 5, 2, 9);
    const Datasetd test = genbound::testing::random_dataset(rng, 5, 2, 7);
    std::vector<Index> perm(9);
    std::iota(perm.begin(), perm.end(), Index(0));
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto a = compute_bound_report(p, train, test);
    const auto b = compute_bound_report(p, train.select(perm), test);
    EXPECT_NEAR(a.chamfer_sq, b.chamfer_sq, 1e-12 * a.chamfer_sq);
    EXPECT_NEAR(a.test_nn_error, b.test_nn_error, 1e-12 * a.test_nn_error);
    EXPECT_NEAR(a.general_bound, b.general_bound, 1e-12 * a.general_bound);
    EXPECT_NEAR(a.train_error, b.train_error, 1e-12 * a.train_error);
}

TEST(BoundReport, AgreesWithIndividualCalculators) {
    std::mt19937_64 rng(10);
    const Datasetd train = genbound::testing::random_dataset(rng, 9, 3, 6);
    const Datasetd test = genbound::testing::random_dataset(rng, 9, 3, 5);
    const auto zl = construct_zero_loss(train, Architecture({9, 7, 3}));
    const auto r = compute_bound_report(zl.params, train, test, 1.0, true);
    ASSERT_TRUE(r.zero_loss_bound.has_value());
    EXPECT_DOUBLE_EQ(*r.zero_loss_bound, zero_loss_bound(zl.params, train, test));
    EXPECT_DOUBLE_EQ(r.experimental_bound, experimental_bound(zl.params, train, test));
    EXPECT_DOUBLE_EQ(r.apriori_bound, apriori_bound(zl.params, train, test));
    ASSERT_TRUE(r.gamma.has_value());
    EXPECT_DOUBLE_EQ(*r.gamma, r.experimental_bound / r.test_error);
    EXPECT_GE(*r.gamma, 1.0);

    const NetworkParamsd p = genbound::testing::random_params(rng, Architecture({9, 7, 3}));
    const auto g = compute_bound_report(p, train, test, 1.0, true);
    EXPECT_FALSE(g.zero_loss_bound.has_value());
    EXPECT_LE(g.general_bound, general_bound(p, train, test, 1.0) * (1 + 1e-14));
    EXPECT_LE(g.test_error, g.general_bound + 1e-9);
    EXPECT_THROW(compute_bound_report(p, train, test, 0.0), NonPositiveDelta);
}

}  // namespace
