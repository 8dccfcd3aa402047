#include "ddenet/dde_sim.hpp"
#include "ddenet/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ddenet;

namespace {

GeneralRHS decay_plus_drive()
{
    return {"decay_plus_drive", [](double x, double z, std::span<const double>) { return -x + z; }, std::nullopt};
}

}  // namespace

TEST(IntegrateGeneral, ForwardEulerGeometricDecay)
{
    const TimeGrid grid(1.0, 10, 1);  // theta = 0.1
    const DelaySet delays({5});
    const auto out = integrate_general(decay_plus_drive(), DriveSignal::zeros(Mode::FeedForward, 10, 1),
                                       ModulationProfile::zeros(Mode::FeedForward, 1, 10, 1), delays, grid, History{1.0, {}});
    double expected = 1.0;
    for (std::size_t n = 1; n <= 10; ++n) {
        expected *= 0.9;
        EXPECT_NEAR(out(1, n), std::pow(0.9, static_cast<double>(n)), 1e-15);
        EXPECT_NEAR(out(1, n), expected, 1e-15);
    }
}

TEST(IntegrateGeneral, ZeroRightHandSideIsConstant)
{
    const TimeGrid grid(2.0, 5, 3);
    const DelaySet delays({2, 5, 9});
    auto profile = ModulationProfile::zeros(Mode::FeedForward, 3, 5, 3);
    profile.table(1).setZero();
    const auto out = integrate_general(GeneralRHS::zero(), DriveSignal::zeros(Mode::FeedForward, 5, 3), profile, delays, grid,
                                       History{0.42, {}});
    EXPECT_TRUE((out.values.array() == 0.42).all());
}

TEST(IntegrateGeneral, HandUnrolledSingleDelay)
{
    const TimeGrid grid(1.0, 2, 2);
    const double theta = grid.theta();
    const DelaySet delays({2});
    auto profile = ModulationProfile::zeros(Mode::FeedForward, 1, 2, 2);
    profile.table(0).setConstant(1.0);
    const auto out = integrate_general(GeneralRHS::slots_only(), DriveSignal::zeros(Mode::FeedForward, 2, 2), profile,
                                       delays, grid, History{1.0, {}});
    EXPECT_EQ(out(1, 1), 1.0);
    EXPECT_EQ(out(1, 2), 1.0);
    const double x21 = 1.0 + theta * 1.0;
    EXPECT_DOUBLE_EQ(out(2, 1), x21);
    EXPECT_DOUBLE_EQ(out(2, 2), x21 + theta * 1.0);
}

TEST(IntegrateGeneral, BlowupReportsFirstOffendingNode)
{
    const TimeGrid grid(1.0, 4, 2);
    const GeneralRHS explosive{"explosive", [](double x, double, std::span<const double>) { return 1e6 * (x + 1.0); },
                               std::nullopt};
    try {
        integrate_general(explosive, DriveSignal::zeros(Mode::FeedForward, 4, 2),
                          ModulationProfile::zeros(Mode::FeedForward, 1, 4, 2), DelaySet({4}), grid, History{1.0, {}});
        FAIL() << "expected NumericalBlowup";
    }
    catch (const NumericalBlowup& e) {
        EXPECT_EQ(e.segment(), 1u);
        EXPECT_EQ(e.node(), 3u);
    }
}

TEST(IntegrateGeneral, MissingHistoryIsReported)
{
    const TimeGrid grid(1.0, 2, 2);
    auto profile = ModulationProfile::zeros(Mode::FeedForward, 1, 2, 2);
    ModulationTable first = ModulationTable::Zero(1, 2);
    first(0, 0) = 1.0;
    profile.set_first_segment(first);
    EXPECT_THROW(integrate_general(GeneralRHS::slots_only(), DriveSignal::zeros(Mode::FeedForward, 2, 2), profile,
                                   DelaySet({2}), grid, History{1.0, {}}),
                 HistoryRequired);
    const auto out = integrate_general(GeneralRHS::slots_only(), DriveSignal::zeros(Mode::FeedForward, 2, 2), profile,
                                       DelaySet({2}), grid, History{1.0, {0.5, 0.25}});
    // x^1_1 = x0 + theta * x(-theta)
    EXPECT_DOUBLE_EQ(out(1, 1), 1.0 + 0.5 * 0.5);
}

TEST(IntegrateGeneral, ArityMismatch)
{
    GeneralRHS rhs = GeneralRHS::slots_only();
    rhs.arity = 2;
    EXPECT_THROW(integrate_general(rhs, DriveSignal::zeros(Mode::FeedForward, 2, 2),
                                   ModulationProfile::zeros(Mode::FeedForward, 1, 2, 2), DelaySet({2}), TimeGrid(1.0, 2, 2),
                                   History{}),
                 DimensionError);
}

TEST(IntegrateSemilinear, PureExponentialDecay)
{
    const SemilinearParams params{1.7, Activation::identity()};
    const TimeGrid grid(1.0, 8, 1);
    const auto out = integrate_semilinear(params, DriveSignal::zeros(Mode::FeedForward, 8, 1),
                                          ModulationProfile::zeros(Mode::FeedForward, 1, 8, 1), DelaySet({8}), grid,
                                          History{0.9, {}});
    for (std::size_t n = 1; n <= 8; ++n)
        EXPECT_NEAR(out(1, n), std::exp(-1.7 * static_cast<double>(n) * grid.theta()) * 0.9, 1e-15);
}

TEST(IntegrateSemilinear, ConstantDriveApproachesFixedPoint)
{
    const SemilinearParams params{2.0, Activation::identity()};
    const std::size_t N = 20, L = 40;
    const TimeGrid grid(1.0, N, L);
    const double c = 0.6;
    Eigen::MatrixXd biases = Eigen::MatrixXd::Constant(L - 1, N, c);
    const auto drive = DriveSignal::feed_forward(Eigen::VectorXd::Constant(N, c), biases);
    const auto out = integrate_semilinear(params, drive, ModulationProfile::zeros(Mode::FeedForward, 1, N, L), DelaySet({N}),
                                          grid, History{-3.0, {}});
    EXPECT_NEAR(out(L, N), c / 2.0, 1e-12);
    EXPECT_GT(std::abs(out(1, 1) - c / 2.0), 0.1);
}

TEST(IntegrateSemilinear, HandUnrolledSineTwoNodes)
{
    const SemilinearParams params{1.0, Activation::sine()};
    const TimeGrid grid(1.0, 1, 2);
    const double w = 1.3;
    auto profile = ModulationProfile::zeros(Mode::FeedForward, 1, 1, 2);
    profile.table(0)(0, 0) = w;
    const auto out = integrate_semilinear(params, DriveSignal::zeros(Mode::FeedForward, 1, 2), profile, DelaySet({1}), grid,
                                          History{0.3, {}});
    const double e = std::exp(-1.0);
    const double x11 = e * 0.3;
    EXPECT_NEAR(out(1, 1), x11, 1e-16);
    EXPECT_NEAR(out(2, 1), e * x11 + (1.0 - e) * std::sin(w * x11), 1e-16);
}

TEST(IntegrateSemilinear, BoundedForSaturatingNonlinearities)
{
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        SeededRandom rng(seed);
        const SemilinearParams params{rng.uniform(0.2, 3.0), seed % 2 ? Activation::tanh() : Activation::sine()};
        FeedForwardCase c = random_feed_forward_case(seed, RandomCaseLimits{}, params);
        for (auto& w : c.spec.hidden_weights) w *= 20.0;  // large weights: boundedness must not depend on scale
        c.spec.x0 = rng.uniform(-5.0, 5.0);
        const CompiledNetwork compiled = compile_feed_forward(c.spec.hidden_weights, c.delays, c.spec.grid);
        Eigen::MatrixXd input = rng.matrix(1, static_cast<Eigen::Index>(c.spec.nodes()), 50.0);
        const auto drive = DriveSignal::feed_forward(input.row(0).transpose(), compiled.biases * 10.0);
        const auto out = integrate_semilinear(params, drive, compiled.profile, c.delays, c.spec.grid, History{c.spec.x0, {}});
        const double bound = std::max(std::abs(c.spec.x0), 1.0 / params.alpha) + 1.0 / params.alpha;
        EXPECT_LE(out.values.cwiseAbs().maxCoeff(), bound * (1.0 + 1e-12)) << "seed " << seed;
    }
}

TEST(IntegrateSemilinear, GainUsesStableFormForTinyTheta)
{
    const SemilinearParams params{1.0, Activation::identity()};
    EXPECT_NEAR(params.gain(1e-12) / 1e-12, 1.0, 1e-12);
    EXPECT_NEAR(params.gain(2.0), 1.0 - std::exp(-2.0), 1e-16);
}

TEST(IntegrateSemilinear, RejectsNonPositiveAlpha)
{
    EXPECT_THROW(integrate_semilinear(SemilinearParams{0.0, Activation::sine()}, DriveSignal::zeros(Mode::FeedForward, 1, 1),
                                      ModulationProfile::zeros(Mode::FeedForward, 1, 1, 1), DelaySet({1}),
                                      TimeGrid(1.0, 1, 1), History{}),
                 DomainError);
}

TEST(IntegrateSemilinear, AgreesWithGeneralFormAsTheta)
{
    // The semilinear map is exact while Euler is first order: compare at a scale where both agree loosely.
    const SemilinearParams params{1.0, Activation::sine()};
    const TimeGrid grid(1.0, 400, 2);
    const auto drive = DriveSignal::zeros(Mode::FeedForward, 400, 2);
    const auto profile = ModulationProfile::zeros(Mode::FeedForward, 1, 400, 2);
    const auto a = integrate_semilinear(params, drive, profile, DelaySet({400}), grid, History{0.5, {}});
    const auto b = integrate_general(params.as_rhs(), drive, profile, DelaySet({400}), grid, History{0.5, {}});
    EXPECT_NEAR(a(2, 400), b(2, 400), 2e-3);
}

TEST(IntegrateReference, SingleSubstepMatchesExactStepScheme)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SeededRandom rng(seed);
        const std::size_t N = rng.index(1, 10), L = rng.index(1, 4);
        const SemilinearParams params{rng.uniform(0.3, 3.0), Activation::sine()};
        const TimeGrid grid(rng.uniform(0.5, 2.0), N, L);
        const DelaySet delays({N});
        const Eigen::MatrixXd z = rng.matrix(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(N), 2.0);
        const auto drive = DriveSignal::feed_forward(z.row(0).transpose(), z.bottomRows(L - 1));
        const auto profile = ModulationProfile::zeros(Mode::FeedForward, 1, N, L);
        const History hist{rng.uniform(-1.0, 1.0), {}};
        const auto semi = integrate_semilinear(params, drive, profile, delays, grid, hist);
        const auto ref = integrate_reference(params, drive, profile, delays, grid, hist, 1);
        EXPECT_LE((semi.values - ref.values).cwiseAbs().maxCoeff(), 1e-12) << "seed " << seed;
    }
}

TEST(IntegrateReference, LinearDecayClosedForm)
{
    const SemilinearParams params{0.8, Activation::identity()};
    const TimeGrid grid(1.5, 6, 3);
    for (std::size_t m : {1u, 3u, 16u}) {
        const auto out = integrate_reference(params, DriveSignal::zeros(Mode::FeedForward, 6, 3),
                                             ModulationProfile::zeros(Mode::FeedForward, 1, 6, 3), DelaySet({6}), grid,
                                             History{1.25, {}}, m);
        for (std::size_t l = 1; l <= 3; ++l)
            for (std::size_t n = 1; n <= 6; ++n)
                EXPECT_NEAR(out(l, n), 1.25 * std::exp(-0.8 * node_time(grid, {l, n})), 1e-14);
    }
}

TEST(IntegrateReference, SelfDifferenceShrinksAsSubstepsDouble)
{
    const std::size_t N = 4, L = 3;
    const SemilinearParams params{1.0, Activation::sine()};
    const TimeGrid grid(1.0, N, L);
    const DelaySet delays({2, 4, 6});
    SeededRandom rng(11);
    auto profile = ModulationProfile::zeros(Mode::FeedForward, 3, N, L);
    for (std::size_t i = 0; i < L - 1; ++i)
        for (std::size_t d = 0; d < 3; ++d)
            for (std::size_t n = 1; n <= N; ++n)
                if (legal_position(n, delays[d], N)) profile.table(i)(d, n - 1) = rng.uniform(-1.5, 1.5);
    const Eigen::MatrixXd z = rng.matrix(L, N, 1.0);
    const auto drive = DriveSignal::feed_forward(z.row(0).transpose(), z.bottomRows(L - 1));
    const History hist{0.2, {}};
    double previous = HUGE_VAL;
    NodeGrid coarse = integrate_reference(params, drive, profile, delays, grid, hist, 2);
    for (std::size_t m = 4; m <= 256; m *= 2) {
        NodeGrid fine = integrate_reference(params, drive, profile, delays, grid, hist, m);
        const double diff = (fine.values - coarse.values).cwiseAbs().maxCoeff();
        EXPECT_LE(diff, 0.5 * previous) << "m = " << m;
        previous = diff;
        coarse = std::move(fine);
    }
    EXPECT_LT(previous, 1e-6);
}

TEST(IntegrateReference, ContinuousProblemRejectsSubstepShorterDelay)
{
    ContinuousProblem p;
    p.delays = {1e-6};
    p.drive = [](double) { return 0.0; };
    p.modulation = {[](double) { return 1.0; }};
    EXPECT_THROW(integrate_reference(p, TimeGrid(1.0, 4, 2), 2), DomainError);
}

TEST(History, OffsetsResolveAgainstTable)
{
    const History h{0.5, {1.0, 2.0}};
    EXPECT_EQ(h.at(0), 0.5);
    EXPECT_EQ(h.at(-1), 1.0);
    EXPECT_EQ(h.at(-2), 2.0);
    EXPECT_THROW(h.at(-3), HistoryRequired);
    EXPECT_THROW(h.at(1), HistoryRequired);
}
