#include "ddenet/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ddenet;

namespace {

ConvergenceProblem one_delay_problem(Activation f)
{
    ConvergenceProblem p;
    p.clock_cycle = 1.0;
    p.segments = 3;
    p.params = SemilinearParams{1.0, f};
    p.x0 = 0.2;
    p.delays_in_cycles = {1.0};
    p.drive = [](double t) { return 0.5 * std::sin(2.0 * M_PI * t) + 0.3; };
    p.modulation = {[](double t) { return 0.8 + 0.4 * std::cos(2.0 * M_PI * t); }};
    return p;
}

}  // namespace

TEST(CompareGrids, RelativeWithAbsoluteFallback)
{
    NodeGrid a(1, 3, 0.0), b(1, 3, 0.0);
    a.values << 1.0, 1e-10, 100.0;
    b.values << 1.0, 1e-10 + 1e-13, 100.0 + 1e-9;
    // Node 2 sits below the relative floor and contributes its absolute error 1e-13.
    const auto r = compare_grids(a, b, 1e-12);
    EXPECT_NEAR(r.max_abs_error, 1e-9, 1e-14);
    EXPECT_NEAR(r.max_rel_error, 1e-11, 1e-16);
    EXPECT_EQ(r.argmax, (NodeIndex{1, 3}));
    EXPECT_FALSE(r.pass);
    EXPECT_TRUE(compare_grids(a, b, 1e-10).pass);
}

TEST(CompareBitwise, SignedZeroDiffers)
{
    NodeGrid a(1, 1, 0.0), b(1, 1, 0.0);
    b.values(0, 0) = -0.0;
    EXPECT_TRUE(compare_grids(a, b, 0.0).pass);
    EXPECT_FALSE(compare_bitwise(a, b).pass);
}

TEST(FitLine, RecoversExactLine)
{
    const auto fit = fit_line({1, 2, 3, 4, 5}, {3, 1, -1, -3, -5});
    EXPECT_NEAR(fit.slope, -2.0, 1e-14);
    EXPECT_NEAR(fit.intercept, 5.0, 1e-14);
    EXPECT_NEAR(fit.max_residual, 0.0, 1e-14);
    EXPECT_EQ(fit.range, 8.0);
    EXPECT_THROW(fit_line({1, 2, 3}, {1, 2, 3}), DomainError);
}

TEST(SeededRandom, ReproducibleStreams)
{
    SeededRandom a(77), b(77), c(78);
    for (int i = 0; i < 100; ++i) {
        const double x = a.uniform(-1.0, 1.0);
        EXPECT_EQ(x, b.uniform(-1.0, 1.0));
        EXPECT_GE(x, -1.0);
        EXPECT_LT(x, 1.0);
    }
    EXPECT_NE(a.uniform(0, 1), c.uniform(0, 1));
}

TEST(RandomCases, StayWithinLimits)
{
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const FeedForwardCase c = random_feed_forward_case(seed);
        EXPECT_LE(c.spec.nodes(), 16u);
        EXPECT_LE(c.spec.layers(), 5u);
        EXPECT_LE(c.delays.size(), 2 * c.spec.nodes() - 1);
        EXPECT_TRUE(c.delays.well_formed(c.spec.nodes()));
        const double bound = 1.0 / std::sqrt(static_cast<double>(c.spec.nodes()));
        for (const auto& w : c.spec.hidden_weights) EXPECT_LE(w.cwiseAbs().maxCoeff(), bound);
        EXPECT_NO_THROW(compile_feed_forward(c.spec.hidden_weights, c.delays, c.spec.grid));
    }
}

TEST(CheckDdeVsNetwork, ZeroWeightsMatchExactly)
{
    FeedForwardCase c = random_feed_forward_case(4, 6, 3, 4, SemilinearParams{1.0, Activation::sine()});
    for (auto& w : c.spec.hidden_weights) w.setZero();
    c.spec.input_weights.setZero();
    for (Scheme s : {Scheme::General, Scheme::Semilinear}) {
        const auto r = check_dde_vs_network(c, s, GeneralRHS::linear_decay());
        EXPECT_EQ(r.max_abs_error, 0.0);
        EXPECT_TRUE(r.pass);
    }
}

TEST(CheckDdeVsNetwork, FeedForwardSemilinearFixedShape)
{
    const FeedForwardCase c = random_feed_forward_case(8, 8, 4, 5, SemilinearParams{1.0, Activation::sine()});
    EXPECT_EQ(c.delays.size(), 5u);
    const auto r = check_dde_vs_network(c, Scheme::Semilinear);
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.seed, 8u);
}

TEST(CheckDdeVsNetwork, RecurrentFullDelaySet)
{
    const RecurrentCase c = random_recurrent_case(12, 6, 10, true);
    EXPECT_TRUE(check_dde_vs_network(c, Scheme::Semilinear, SemilinearParams{1.0, Activation::sine()}).pass);
}

TEST(CheckDdeVsNetwork, CorruptedWeightIsDetected)
{
    FeedForwardCase c = random_feed_forward_case(31, 6, 3, 11, SemilinearParams{1.0, Activation::sine()});
    c.corruption = Corruption{2, 3, 2, 1e-6};
    EXPECT_FALSE(check_dde_vs_network(c, Scheme::Semilinear).pass);
    EXPECT_FALSE(check_dde_vs_network(c, Scheme::General, GeneralRHS::linear_decay()).pass);

    RecurrentCase r = random_recurrent_case(31, 6, 6, true);
    r.corruption = Corruption{2, 4, 1, 1e-6};
    EXPECT_FALSE(check_dde_vs_network(r, Scheme::Semilinear, SemilinearParams{}).pass);
}

TEST(CheckDdeVsNetwork, MapLimitHasNoDdeSide)
{
    EXPECT_THROW(check_dde_vs_network(random_feed_forward_case(1), Scheme::MapLimit), ConfigError);
}

TEST(MapLimitSweep, SlopeNearMinusAlpha)
{
    for (double alpha : {1.0, 2.0}) {
        FeedForwardCase c = random_feed_forward_case(101, 8, 4, 9, SemilinearParams{alpha, Activation::tanh()});
        c.spec.first_layer_activation = Activation::tanh();
        std::vector<double> thetas;
        for (double k : {2.0, 4.0, 6.0, 8.0}) thetas.push_back(k / alpha);
        const auto r = map_limit_sweep(c.spec, c.input, thetas);
        ASSERT_TRUE(r.fit.has_value());
        EXPECT_NEAR(r.fit->slope, -alpha, 0.1 * alpha) << "alpha " << alpha;
        EXPECT_LT(r.residual_fraction(), 0.2);
        EXPECT_TRUE(r.pass);
    }
}

TEST(MapLimitSweep, ZeroWeightsDecayAtExactRate)
{
    FeedForwardCase c = random_feed_forward_case(5, 5, 3, 3, SemilinearParams{1.5, Activation::sine()});
    for (auto& w : c.spec.hidden_weights) w.setZero();
    c.spec.x0 = 0.0;
    const auto r = map_limit_sweep(c.spec, c.input, {2.0, 3.0, 4.0, 5.0, 6.0});
    ASSERT_TRUE(r.fit.has_value());
    // The error is c e^{-alpha theta} (1 + O(e^{-alpha theta})).
    EXPECT_NEAR(r.fit->slope, -1.5, 0.03);
    EXPECT_TRUE(r.pass);
}

TEST(MapLimitSweep, Preconditions)
{
    const FeedForwardCase c = random_feed_forward_case(5, 5, 3, 3, SemilinearParams{1.0, Activation::sine()});
    EXPECT_THROW(map_limit_sweep(c.spec, c.input, {2.0, 4.0, 6.0}), DomainError);
    EXPECT_THROW(map_limit_sweep(c.spec, c.input, {0.5, 2.0, 4.0, 6.0}), DomainError);
}

TEST(ConvergenceSweep, ZeroModulationStepDriveIsExact)
{
    ConvergenceProblem p = one_delay_problem(Activation::sine());
    p.drive = [](double t) { return t <= 1.0 ? 0.4 : (t <= 2.0 ? -0.7 : 1.1); };
    p.modulation = {[](double) { return 0.0; }};
    const auto r = theta_convergence_sweep(p, {8, 16, 32, 64});
    EXPECT_TRUE(r.all_exact);
    EXPECT_TRUE(r.pass);
    for (const auto& pt : r.points) EXPECT_LE(pt.error, kExactErrorFloor);
}

TEST(ConvergenceSweep, IkedaTypeOneDelayIsFirstOrder)
{
    const auto r = theta_convergence_sweep(one_delay_problem(Activation::sine()), {8, 16, 32, 64});
    ASSERT_TRUE(r.fit.has_value());
    EXPECT_GE(r.fit->slope, 0.9);
    EXPECT_LE(r.reference_self_difference, 1e-10);
    EXPECT_TRUE(r.pass);
}

TEST(ConvergenceSweep, LinearOneDelayIsFirstOrder)
{
    const auto r = theta_convergence_sweep(one_delay_problem(Activation::identity()), {8, 16, 32, 64});
    ASSERT_TRUE(r.fit.has_value());
    EXPECT_GE(r.fit->slope, 0.9);
    EXPECT_TRUE(r.pass);
}

TEST(ConvergenceSweep, RejectsNonNestedGrids)
{
    EXPECT_THROW(theta_convergence_sweep(one_delay_problem(Activation::sine()), {8, 12, 16, 32}), DomainError);
}

TEST(CertifyReference, FailsWhenBudgetTooSmall)
{
    const ConvergenceProblem p = one_delay_problem(Activation::sine());
    EXPECT_THROW(certify_reference(continuous_form(p), TimeGrid(1.0, 8, 3), 1, 4, 1e-14), OracleFailure);
}

TEST(HistoryIndependence, ZeroVersusRandomHistory)
{
    const FeedForwardCase c = random_feed_forward_case(17, 6, 4, 11, SemilinearParams{1.0, Activation::sine()});
    const CompiledNetwork compiled = compile_feed_forward(c.spec.hidden_weights, c.delays, c.spec.grid);
    const auto drive = semilinear_drive(c.spec, c.input);
    const std::size_t depth = c.delays.units().back();
    const History h1{c.spec.x0, std::vector<double>(depth, 0.0)};
    const History h2 = random_history(99, c.spec.x0, depth);
    const auto r = history_independence_check(*c.spec.semilinear, drive, compiled.profile, c.delays, c.spec.grid, h1, h2);
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.max_abs_error, 0.0);
}

TEST(HistoryIndependence, RecurrentProfile)
{
    const RecurrentCase c = random_recurrent_case(23, 5, 6, true);
    const ModulationProfile profile = compile_recurrent(c.net.weights, c.net.delays, c.net.grid);
    const std::size_t depth = c.net.delays.units().back();
    const auto r = history_independence_check(SemilinearParams{}, recurrent_drive(c.net, c.inputs), profile, c.net.delays,
                                              c.net.grid, History{c.net.x0, std::vector<double>(depth, 0.0)},
                                              random_history(5, c.net.x0, depth));
    EXPECT_TRUE(r.pass);
}

TEST(HistoryIndependence, FirstSegmentModulationBreaksIt)
{
    const FeedForwardCase c = random_feed_forward_case(17, 6, 4, 11, SemilinearParams{1.0, Activation::sine()});
    CompiledNetwork compiled = compile_feed_forward(c.spec.hidden_weights, c.delays, c.spec.grid);
    ModulationTable first = ModulationTable::Constant(static_cast<Eigen::Index>(c.delays.size()), 6, 0.5);
    compiled.profile.set_first_segment(first);
    EXPECT_TRUE(validate(compiled.profile, c.delays, c.spec.grid).violates("IV"));
    const std::size_t depth = c.delays.units().back();
    const auto r = history_independence_check(*c.spec.semilinear, semilinear_drive(c.spec, c.input), compiled.profile, c.delays,
                                              c.spec.grid, History{c.spec.x0, std::vector<double>(depth, 0.0)},
                                              random_history(99, c.spec.x0, depth));
    EXPECT_FALSE(r.pass);
    EXPECT_GT(r.max_abs_error, 0.0);
}

TEST(TopologyCheck, SingleDelaysAndSuperposition)
{
    for (std::size_t N = 1; N <= 8; ++N) {
        const auto r = topology_check(full_delay_set(N), TimeGrid(1.0, N, 2));
        EXPECT_TRUE(r.pass);
        EXPECT_EQ(r.combined_nonzeros, N * N);
        for (const auto& e : r.entries) {
            if (e.delay_units < N) { EXPECT_EQ(e.predicted.direction, Direction::Up); }
            if (e.delay_units == N) { EXPECT_EQ(e.predicted.count, N); }
            if (e.delay_units > N) { EXPECT_EQ(e.predicted.count, 2 * N - e.delay_units); }
        }
    }
}

TEST(Summaries, KeyValueLines)
{
    const auto s = summarize(compare_grids(NodeGrid(1, 1, 0.0), NodeGrid(1, 1, 0.0), 1e-12, 42));
    ASSERT_FALSE(s.empty());
    EXPECT_EQ(s.back(), (std::pair<std::string, std::string>{"pass", "true"}));
    bool seed_found = false;
    for (const auto& [k, v] : s) seed_found = seed_found || (k == "seed" && v == "42");
    EXPECT_TRUE(seed_found);
}
