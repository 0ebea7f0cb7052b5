#include <gtest/gtest.h>

#include <atomic>
#include <stdexcept>

#include "deturb/errors.hpp"
#include "deturb/manifest.hpp"
#include "deturb/parallel.hpp"
#include "support.hpp"

using namespace deturb;

TEST(RunManifest, WriteAndReadBack)
{
    deturb::testing::TempDir dir("manifest");
    RunManifest m;
    m.set("input", "frames/");
    m.set("alpha", 0.005);
    m.set("frames", 12);
    m.set("low_memory", true);
    m.set("alpha", 0.01);
    m.write(dir / "m.txt");
    const RunManifest back = RunManifest::read(dir / "m.txt");
    EXPECT_EQ(back.entries(), m.entries());
    ASSERT_EQ(back.entries().size(), 4u);
    EXPECT_EQ(back.entries()[1].first, "alpha");
    EXPECT_EQ(std::stod(*back.get("alpha")), 0.01);
    EXPECT_EQ(*back.get("low_memory"), "true");
    EXPECT_FALSE(back.get("missing").has_value());
}

TEST(RunManifest, DoublesRoundTripExactly)
{
    RunManifest m;
    m.set("x", 0.1 + 0.2);
    EXPECT_EQ(std::stod(*RunManifest::parse(m.to_string()).get("x")), 0.1 + 0.2);
}

TEST(RunManifest, ParseSkipsCommentsAndTrims)
{
    const RunManifest m = RunManifest::parse("# run\n\n  alpha = 0.5 \nout=a=b.png\r\n");
    ASSERT_EQ(m.entries().size(), 2u);
    EXPECT_EQ(*m.get("alpha"), "0.5");
    EXPECT_EQ(*m.get("out"), "a=b.png");
}

TEST(RunManifest, Errors)
{
    EXPECT_THROW(RunManifest::parse("alpha 0.5\n"), FormatError);
    RunManifest m;
    EXPECT_THROW(m.set("a=b", "x"), InvalidInput);
    EXPECT_THROW(m.set("k", "two\nlines"), InvalidInput);
    EXPECT_THROW(RunManifest::read("/nonexistent/manifest.txt"), IoError);
}

TEST(ParallelFor, VisitsEveryIndexOnce)
{
    for (int threads : {1, 3, 8}) {
        std::vector<std::atomic<int>> hits(257);
        parallel_for(hits.size(), threads, [&](std::size_t i) { ++hits[i]; });
        for (const auto& h : hits)
            EXPECT_EQ(h.load(), 1);
    }
    parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(ParallelFor, PropagatesExceptions)
{
    EXPECT_THROW(parallel_for(100, 4,
                              [](std::size_t i) {
                                  if (i == 37)
                                      throw std::runtime_error("boom");
                              }),
                 std::runtime_error);
}
