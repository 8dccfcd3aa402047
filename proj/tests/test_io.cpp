#include "ddenet/io.hpp"
#include "ddenet/verify.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace ddenet;

TEST(Config, SectionsKeysAndComments)
{
    const auto cfg = io::Config::parse("# leading comment\n[grid]\nnodes = 4 ; trailing\nclock_cycle=2.5\n\n[delays]\nunits = 1, 2 ,3\n");
    EXPECT_EQ(cfg.integer("grid", "nodes"), 4u);
    EXPECT_EQ(cfg.real("grid", "clock_cycle"), 2.5);
    EXPECT_EQ(cfg.integers("delays", "units"), (std::vector<std::uint64_t>{1, 2, 3}));
    EXPECT_FALSE(cfg.has("grid", "segments"));
    EXPECT_EQ(cfg.real_or("grid", "segments", 7.0), 7.0);
    EXPECT_THROW(cfg.require("grid", "segments"), ConfigError);
}

TEST(Config, MalformedInput)
{
    EXPECT_THROW(io::Config::parse("nodes = 4\n"), ConfigError);
    EXPECT_THROW(io::Config::parse("[grid\nnodes = 4\n"), ConfigError);
    EXPECT_THROW(io::Config::parse("[grid]\nnodes 4\n"), ConfigError);
    EXPECT_THROW(io::Config::parse("[grid]\nnodes = 4\nnodes = 5\n"), ConfigError);
    const auto cfg = io::Config::parse("[grid]\nnodes = four\nalpha = 1.0x\n");
    EXPECT_THROW(cfg.integer("grid", "nodes"), ConfigError);
    EXPECT_THROW(cfg.real("grid", "alpha"), ConfigError);
}

TEST(Config, PathsResolveAgainstConfigDirectory)
{
    const auto cfg = io::Config::parse("[m]\nfile = w.csv\nabs = /tmp/x.csv\n", "/data/run");
    EXPECT_EQ(cfg.path("m", "file"), std::filesystem::path("/data/run/w.csv"));
    EXPECT_EQ(cfg.path("m", "abs"), std::filesystem::path("/tmp/x.csv"));
}

TEST(MatrixCsv, RoundTripIsExact)
{
    SeededRandom rng(3);
    Eigen::MatrixXd m = rng.matrix(4, 5, 1e3);
    m(0, 0) = 1.0 / 3.0;
    m(1, 1) = -0.0;
    m(2, 2) = 5e-300;
    const Eigen::MatrixXd back = io::parse_matrix_csv(io::matrix_csv(m));
    ASSERT_EQ(back.rows(), 4);
    for (Eigen::Index i = 0; i < m.size(); ++i) EXPECT_EQ(back.data()[i], m.data()[i]);
}

TEST(MatrixCsv, RejectsRaggedRows)
{
    EXPECT_THROW(io::parse_matrix_csv("1,2\n3\n"), ConfigError);
    EXPECT_THROW(io::parse_matrix_csv("1,abc\n"), ConfigError);
    EXPECT_EQ(io::parse_matrix_csv("# header comment\n1, 2\n\n3,4\n").rows(), 2);
}

TEST(NodeGridCsv, HeaderAndRowCount)
{
    const TimeGrid grid(1.0, 4, 2);
    NodeGrid g(2, 4, 0.0);
    g(2, 3) = 0.1;
    const std::string csv = io::node_grid_csv(grid, g);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "segment,node,time,value");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
    EXPECT_NE(csv.find("2,3,1.75,0.10000000000000001\n"), std::string::npos);
}

TEST(ProfileCsv, RoundTripBothModes)
{
    const TimeGrid grid(1.0, 3, 3);
    const DelaySet delays({1, 3, 5});
    auto ff = ModulationProfile::zeros(Mode::FeedForward, 3, 3, 3);
    ff.table(0)(0, 0) = 0.25;
    ff.table(1)(2, 2) = -1.0 / 3.0;
    const auto ff_back = io::parse_profile_csv(io::profile_csv(ff, delays), Mode::FeedForward, delays, grid);
    EXPECT_EQ(ff_back.table(0), ff.table(0));
    EXPECT_EQ(ff_back.table(1), ff.table(1));

    ModulationTable t = ModulationTable::Zero(3, 3);
    t(1, 2) = 0.5;
    auto rec = ModulationProfile::recurrent(t);
    ModulationTable first = ModulationTable::Zero(3, 3);
    first(0, 0) = 2.0;
    rec.set_first_segment(first);
    const std::string csv = io::profile_csv(rec, delays);
    EXPECT_NE(csv.find("1,1,1,2\n"), std::string::npos);
    EXPECT_NE(csv.find("0,3,3,0.5\n"), std::string::npos);
    const auto rec_back = io::parse_profile_csv(csv, Mode::Recurrent, delays, grid);
    EXPECT_EQ(rec_back.table(0), t);
    ASSERT_TRUE(rec_back.first_segment().has_value());
    EXPECT_EQ(*rec_back.first_segment(), first);
}

TEST(ProfileCsv, RejectsUnknownDelayAndSegment)
{
    const TimeGrid grid(1.0, 3, 3);
    const DelaySet delays({1, 3});
    EXPECT_THROW(io::parse_profile_csv("segment,delay,node,value\n2,2,1,1\n", Mode::FeedForward, delays, grid), ConfigError);
    EXPECT_THROW(io::parse_profile_csv("2,1,1,1\n4,1,1,1\n", Mode::FeedForward, delays, grid), ConfigError);
    EXPECT_THROW(io::parse_profile_csv("2,1,1,1\n", Mode::Recurrent, delays, grid), ConfigError);
    EXPECT_THROW(io::parse_profile_csv("2,1,4,1\n", Mode::FeedForward, delays, grid), ConfigError);
}

TEST(AtomicWrite, ReplacesContentWithoutLeavingTemporaries)
{
    const auto dir = std::filesystem::temp_directory_path() / "ddenet_io_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    io::write_file_atomic(dir / "a.txt", "one");
    io::write_file_atomic(dir / "a.txt", "two");
    EXPECT_EQ(io::read_text(dir / "a.txt"), "two");
    std::size_t count = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++count;
    EXPECT_EQ(count, 1u);
    std::filesystem::remove_all(dir);
}
