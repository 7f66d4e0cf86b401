#include "mseregion/counterexample.hpp"
#include "mseregion/region_analysis.hpp"
#include "mseregion/two_user_boundary.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mseregion;
using namespace mseregion::testing;

namespace {

MseTuple triple(const RVector& powers)
{
    return mse_tuple(counterexample::channels(), PowerAllocation(powers), counterexample::config());
}

MseTuple computed_triple_1() { return triple(counterexample::point_1().powers); }
MseTuple computed_triple_2() { return triple(counterexample::point_2().powers); }

} // namespace

TEST(SampleRegion, SingleUserGrid)
{
    const ChannelSet h(CMatrix((CMatrix(2, 1) << 1.0, 0.0).finished()));
    const SystemConfig cfg(1.0, 10.0);
    const RegionSampleSet set = sample_region(h, cfg, 2, SampleMode::Grid, 0);
    ASSERT_EQ(set.points.size(), 3u);
    EXPECT_EQ(set.points[0].powers[0], 0.0);
    EXPECT_EQ(set.points[0].mse[0], 1.0);
    EXPECT_EQ(set.points[1].powers[0], 5.0);
    EXPECT_NEAR(set.points[1].mse[0], 1.0 / 6.0, 1e-15);
    EXPECT_EQ(set.points[2].powers[0], 10.0);
}

TEST(SampleRegion, CounterexampleGridStaysInUnitCube)
{
    const RegionSampleSet set =
        sample_region(counterexample::channels(), counterexample::config(), 50, SampleMode::Grid, 0);
    EXPECT_EQ(set.points.size(), lattice_point_count(3, 50));
    for (const auto& point : set.points) {
        EXPECT_GT(point.mse.values().minCoeff(), 0.0);
        EXPECT_LE(point.mse.values().maxCoeff(), 1.0);
        EXPECT_TRUE(point.powers.is_feasible(counterexample::config()));
    }
}

TEST(SampleRegion, RandomModeIsSeededAndThreadIndependent)
{
    const auto h = counterexample::channels();
    const auto cfg = counterexample::config();
    const auto a = sample_region(h, cfg, 500, SampleMode::Random, 17, 1);
    const auto b = sample_region(h, cfg, 500, SampleMode::Random, 17, 3);
    const auto c = sample_region(h, cfg, 500, SampleMode::Random, 18, 1);
    ASSERT_EQ(a.points.size(), 500u);
    bool differs = false;
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        EXPECT_TRUE(a.points[i].powers.values() == b.points[i].powers.values());
        EXPECT_TRUE(a.points[i].mse.values() == b.points[i].mse.values());
        differs = differs || a.points[i].powers.values() != c.points[i].powers.values();
    }
    EXPECT_TRUE(differs);
}

TEST(SampleRegion, RejectsExcessiveGrid)
{
    std::mt19937_64 rng(51);
    const ChannelSet h = random_channels(2, 8, rng);
    EXPECT_THROW(sample_region(h, SystemConfig(1.0, 1.0), 200, SampleMode::Grid, 0), InputError);
    EXPECT_THROW(sample_region(h, SystemConfig(1.0, 1.0), 1, SampleMode::Grid, 0), InputError);
}

TEST(Membership, AllOnesTargetIsDominatedBySilence)
{
    const auto v = dominated_membership(counterexample::channels(), counterexample::config(), MseTuple(RVector::Ones(3)));
    EXPECT_TRUE(v.dominated);
    EXPECT_LE(v.margin, 0.0);
}

TEST(Membership, ComputedTriplesAreDominated)
{
    for (const MseTuple& t : {computed_triple_1(), computed_triple_2()}) {
        const auto v = dominated_membership(counterexample::channels(), counterexample::config(), t);
        EXPECT_TRUE(v.dominated);
        EXPECT_LE(std::abs(v.margin), 1e-9);
        EXPECT_LE(dominance_excess(counterexample::channels(), counterexample::config(), t, v.witness_powers),
                  v.margin + 1e-15);
    }
}

// The published triples are rounded to four digits, slightly below the exact
// MSEs, so they sit just outside the region.
TEST(Membership, RoundedPublishedTriplesMissByLessThanRounding)
{
    for (const RVector& t : {counterexample::point_1().mse, counterexample::point_2().mse}) {
        const auto v = dominated_membership(counterexample::channels(), counterexample::config(), MseTuple(t));
        EXPECT_GT(v.margin, 1e-6);
        EXPECT_LE(v.margin, 1e-4);
    }
}

TEST(Membership, PublishedMidpointIsOutside)
{
    const MseTuple mid((RVector(3) << 0.60695, 0.1671, 0.61675).finished());
    const auto v = dominated_membership(counterexample::channels(), counterexample::config(), mid);
    EXPECT_FALSE(v.dominated);
    EXPECT_GT(v.margin, 1e-3);
}

TEST(Membership, AgreesWithLatticeOracle)
{
    const auto h = counterexample::channels();
    const auto cfg = counterexample::config();
    const LatticeTable table = lattice_table(h, cfg, 60);
    const MseTuple a = computed_triple_1();
    const MseTuple b = computed_triple_2();
    for (double t : {0.25, 0.5, 0.75}) {
        const MseTuple target(((1.0 - t) * a.values() + t * b.values()).eval());
        const auto v = dominated_membership(h, cfg, target);
        const double oracle = lattice_margin(h, cfg, table, target.values(), 60);
        EXPECT_NEAR(v.margin, oracle, 1e-4) << "t = " << t;
        EXPECT_LE(v.margin, oracle + 1e-9);
    }
}

TEST(Membership, RandomTargetsAgreeWithLatticeOracle)
{
    std::mt19937_64 rng(52);
    const ChannelSet h = random_channels(2, 3, rng);
    const SystemConfig cfg(1.0, 5.0);
    const LatticeTable table = lattice_table(h, cfg, 60);
    for (int trial = 0; trial < 10; ++trial) {
        RVector t(3);
        for (Eigen::Index k = 0; k < 3; ++k) {
            t[k] = uniform(0.2, 1.0, rng);
        }
        const auto v = dominated_membership(h, cfg, MseTuple(t));
        const double oracle = lattice_margin(h, cfg, table, t, 60);
        EXPECT_NEAR(v.margin, oracle, 1e-4) << "trial " << trial;
    }
}

TEST(Membership, RejectsLengthMismatch)
{
    EXPECT_THROW(dominated_membership(counterexample::channels(), counterexample::config(), MseTuple(RVector::Ones(2))),
                 InputError);
}

TEST(Segment, IdenticalEndpointsHaveNoWitness)
{
    const MseTuple a = computed_triple_1();
    const auto report = segment_test(counterexample::channels(), counterexample::config(), a, a, 5);
    EXPECT_FALSE(report.nonconvex_witness);
    for (const auto& p : report.points) {
        EXPECT_TRUE(p.dominated);
    }
}

TEST(Segment, InfeasibleEndpointThrows)
{
    const MseTuple a = computed_triple_1();
    const MseTuple bad((RVector(3) << 0.1, 0.1, 0.1).finished());
    EXPECT_THROW(segment_test(counterexample::channels(), counterexample::config(), a, bad, 3), InputError);
}

TEST(Segment, CounterexampleWitnessAtEveryInteriorPoint)
{
    const auto report =
        segment_test(counterexample::channels(), counterexample::config(), computed_triple_1(), computed_triple_2(), 9);
    ASSERT_EQ(report.points.size(), 9u);
    EXPECT_TRUE(report.nonconvex_witness);
    const double expected[] = {0.003861, 0.007455, 0.010104, 0.011673, 0.012157,
                               0.011576, 0.009962, 0.007366, 0.003916};
    for (std::size_t i = 0; i < report.points.size(); ++i) {
        EXPECT_FALSE(report.points[i].dominated);
        EXPECT_NEAR(report.points[i].t, (i + 1) / 10.0, 1e-15);
        EXPECT_NEAR(report.points[i].margin, expected[i], 2e-6);
    }
}

TEST(Segment, TwoUserBoundaryChordsStayInside)
{
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 20; ++trial) {
        const CVector h1 = random_channel(2 + trial % 3, rng);
        const CVector h2 = random_channel(h1.size(), rng);
        const SystemConfig cfg(uniform(0.1, 10.0, rng), uniform(1.0, 100.0, rng));
        CMatrix hm(h1.size(), 2);
        hm << h1, h2;
        const ChannelSet h(hm);
        auto boundary = [&](double p) {
            const auto [e1, e2] = mse_pair_at_power(h1, h2, cfg, p);
            return MseTuple((RVector(2) << e1, e2).finished());
        };
        const double pa = uniform(0.0, 0.5, rng) * cfg.power_budget();
        const double pb = uniform(0.5, 1.0, rng) * cfg.power_budget();
        const auto report = segment_test(h, cfg, boundary(pa), boundary(pb), 9);
        EXPECT_FALSE(report.nonconvex_witness) << "trial " << trial;
    }
}

TEST(Embedding, PaddingPreservesMsesAndWitness)
{
    const auto h = counterexample::channels();
    const auto cfg = counterexample::config();
    for (Eigen::Index extra = 1; extra <= 2; ++extra) {
        const ChannelSet big = embed_inactive_users(h, extra);
        ASSERT_EQ(big.users(), 3 + extra);
        const MseTuple t1 = computed_triple_1();
        const PowerAllocation p1 = pad_with_silent(PowerAllocation(counterexample::point_1().powers), extra);
        const MseTuple eps = mse_tuple(big, p1, cfg);
        EXPECT_LE((eps.values() - pad_with_inactive(t1, extra).values()).cwiseAbs().maxCoeff(), 1e-15);

        const auto report = segment_test(big, cfg, pad_with_inactive(t1, extra),
                                         pad_with_inactive(computed_triple_2(), extra), 3);
        EXPECT_TRUE(report.nonconvex_witness);
        for (const auto& p : report.points) {
            EXPECT_FALSE(p.dominated);
        }
    }
}
