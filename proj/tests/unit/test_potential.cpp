#include "levybridge/potential.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace levy;

TEST(Potential, ParsesEveryPreset) {
    EXPECT_DOUBLE_EQ(Potential::parse("const:0.7")(12.0), 0.7);
    auto box = Potential::parse("box:-1,2,3.5");
    EXPECT_DOUBLE_EQ(box(0.0), 3.5);
    EXPECT_DOUBLE_EQ(box(2.0), 3.5);
    EXPECT_DOUBLE_EQ(box(2.01), 0.0);
    auto h = Potential::parse("harmonic:9");
    EXPECT_DOUBLE_EQ(h(2.0), 4.0);
    EXPECT_DOUBLE_EQ(h(-5.0), 9.0);
    auto t = Potential::parse("table:-1,0,1,2,3,2");
    EXPECT_DOUBLE_EQ(t(0.0), 1.0);
    EXPECT_DOUBLE_EQ(t(2.0), 2.0);
    EXPECT_DOUBLE_EQ(t(-9.0), 0.0);
    EXPECT_DOUBLE_EQ(t(9.0), 2.0);
}

TEST(Potential, SpecRoundTrips) {
    for (std::string s : {"const:0.5", "box:-1,2,3", "harmonic:4", "table:0,1,2,3"}) {
        auto v = Potential::parse(s);
        auto w = Potential::parse(v.spec());
        for (double x : {-3.0, -0.5, 0.0, 0.7, 1.9, 5.0}) EXPECT_DOUBLE_EQ(v(x), w(x)) << s;
    }
}

TEST(Potential, RejectsMalformedSpecs) {
    for (const char* s : {"", "const", "const:", "const:abc", "const:-1", "box:1,0,1", "box:0,1", "harmonic:-2",
                          "table:1", "table:0,1,0,2", "table:0,-1,1,1", "wells:1", "const:1,2", "const:nan"}) {
        EXPECT_THROW(Potential::parse(s), Error) << s;
    }
}

TEST(Potential, CompactAndGlobalBounds) {
    auto h = Potential::truncated_harmonic(10.0);
    EXPECT_DOUBLE_EQ(h.compact_bound(2.0), 4.0);
    EXPECT_DOUBLE_EQ(h.compact_bound(20.0), 10.0);
    EXPECT_DOUBLE_EQ(*h.global_bound(), 10.0);
    auto b = Potential::box(3.0, 5.0, 2.0);
    EXPECT_DOUBLE_EQ(b.compact_bound(2.0), 0.0);
    EXPECT_DOUBLE_EQ(b.compact_bound(3.0), 2.0);
    auto t = Potential::table({-1.0, 0.0, 4.0}, {0.0, 3.0, 1.0});
    EXPECT_DOUBLE_EQ(t.compact_bound(0.5), 3.0);
    EXPECT_NEAR(t.compact_bound(0.5), 3.0, 0.0);
    EXPECT_TRUE(Potential::constant(0.0).is_zero());
    EXPECT_FALSE(b.is_zero());
}

TEST(Potential, CellAveragesMatchQuadrature) {
    std::vector<Potential> vs{Potential::constant(0.3), Potential::box(-0.3, 0.8, 1.7),
                              Potential::truncated_harmonic(2.0), Potential::table({-1, 0, 2}, {0.5, 2.0, 1.0})};
    for (const auto& v : vs) {
        for (auto [lo, hi] : {std::pair{-2.0, -1.2}, std::pair{-0.5, 0.1}, std::pair{0.6, 1.9}, std::pair{1.0, 3.0}}) {
            // split at every kink so Simpson sees smooth pieces
            std::vector<double> cuts{lo, hi};
            for (double k : {-1.0, -0.3, 0.0, 0.8, 2.0, -std::sqrt(2.0), std::sqrt(2.0)})
                if (k > lo && k < hi) cuts.push_back(k);
            std::sort(cuts.begin(), cuts.end());
            double s = 0.0;
            for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
                s += oracle::integrate([&](double x) { return v(x); }, cuts[i], cuts[i + 1], 1e-14);
            EXPECT_NEAR(v.average(lo, hi), s / (hi - lo), 1e-11) << v.spec() << " " << lo << " " << hi;
        }
    }
}
