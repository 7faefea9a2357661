/*
 * Copyright 2026 The optpower Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "optpower/pricing.hpp"
#include "oracles.hpp"

using namespace optpower;

namespace {

OptionContract const reference_call{100, 100, 1, 0.05, 0.2, OptionKind::Call};

OptionContract with_kind(OptionContract c, OptionKind kind)
{
    c.kind = kind;
    return c;
}

} // namespace

TEST(NormalStream, RawOutputMatchesMt19937Reference)
{
    // Reference outputs of MT19937 for its default seed 5489 (mt19937ar.c).
    NormalStream stream(5489u);
    EXPECT_EQ(stream.raw(), 3499211612u);
    EXPECT_EQ(stream.raw(), 581869302u);
    EXPECT_EQ(stream.raw(), 3890346734u);
    EXPECT_EQ(stream.raw(), 3586334585u);

    NormalStream again(5489u);
    std::uint32_t value = 0;
    for (int i = 0; i < 10000; ++i)
        value = again.raw();
    EXPECT_EQ(value, 4123659995u);
}

TEST(NormalStream, MomentsOfAMillionDraws)
{
    NormalStream stream(42u);
    constexpr int n = 1'000'000;
    double sum = 0;
    double sum_sq = 0;
    for (int i = 0; i < n; ++i)
    {
        double const x = stream();
        sum += x;
        sum_sq += x * x;
    }
    double const mean = sum / n;
    double const variance = (sum_sq - n * mean * mean) / (n - 1);
    EXPECT_NEAR(mean, 0.0, 0.005);
    EXPECT_NEAR(variance, 1.0, 0.01);
}

TEST(NormalStream, PairsAreBoxMullerOfConsecutiveUniforms)
{
    NormalStream uniforms(9u);
    double const u1 = uniforms.uniform();
    double const u2 = uniforms.uniform();
    double const r = std::sqrt(-2 * std::log(u1));

    NormalStream normals(9u);
    EXPECT_DOUBLE_EQ(normals(), r * std::cos(2 * M_PI * u2));
    EXPECT_DOUBLE_EQ(normals(), r * std::sin(2 * M_PI * u2));
}

TEST(NormalStream, IdenticalSeedsGiveIdenticalSequences)
{
    NormalStream a(123u);
    NormalStream b(123u);
    for (int i = 0; i < 1000; ++i)
        ASSERT_EQ(a(), b());
}

TEST(NormalStream, UniformsStayInHalfOpenUnitInterval)
{
    // (raw + 1) / 2^32 maps 0 to 2^-32 and 2^32-1 to exactly 1.
    EXPECT_EQ((0.0 + 1.0) * 0x1p-32, 0x1p-32);
    EXPECT_EQ((4294967295.0 + 1.0) * 0x1p-32, 1.0);
    NormalStream s(1u);
    for (int i = 0; i < 100000; ++i)
    {
        double const u = s.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LE(u, 1.0);
    }
}

TEST(BsPrice, ZeroVolatilityIsDiscountedForward)
{
    EXPECT_DOUBLE_EQ(bs_price({110, 100, 1, 0, 0, OptionKind::Call}), 10.0);
    EXPECT_DOUBLE_EQ(bs_price({110, 100, 1, 0, 0, OptionKind::Put}), 0.0);
    EXPECT_DOUBLE_EQ(bs_price({90, 100, 1, 0, 0, OptionKind::Put}), 10.0);
}

TEST(BsPrice, ReferenceContractAgainstQuadrature)
{
    double const oracle = oracle::lognormal_quadrature_price(reference_call);
    EXPECT_NEAR(oracle, 10.4506, 1e-4);
    EXPECT_NEAR(bs_price(reference_call), oracle, 1e-8);

    auto const put = with_kind(reference_call, OptionKind::Put);
    EXPECT_NEAR(bs_price(put), oracle::lognormal_quadrature_price(put), 1e-8);
}

TEST(BsPrice, PutCallParityOnRandomContracts)
{
    std::mt19937 rng(2024);
    for (int i = 0; i < 1000; ++i)
    {
        auto c = oracle::random_contract(rng);
        double const call = bs_price(with_kind(c, OptionKind::Call));
        double const put = bs_price(with_kind(c, OptionKind::Put));
        ASSERT_NEAR(call - put, c.spot - c.strike * std::exp(-c.rate * c.expiry), 1e-12);
    }
}

TEST(BsPrice, RejectsNonFiniteAndInvalidInputs)
{
    auto c = reference_call;
    c.volatility = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(bs_price(c), std::domain_error);
    c = reference_call;
    c.spot = std::numeric_limits<double>::infinity();
    EXPECT_THROW(bs_price(c), std::domain_error);
    c = reference_call;
    c.strike = -1;
    EXPECT_THROW(bs_price(c), std::domain_error);
    c = reference_call;
    c.rate = -0.01;
    EXPECT_NO_THROW(bs_price(c));
}

TEST(McPrice, ZeroVolatilityIsExact)
{
    for (std::uint32_t seed : {0u, 1u, 77u})
        EXPECT_EQ(mc_price({110, 100, 1, 0, 0, OptionKind::Call}, {100, seed}), 10.0);
}

TEST(McPrice, TenMillionPathsMatchBlackScholes)
{
    EXPECT_NEAR(mc_price(reference_call, {10'000'000, 1}), bs_price(reference_call), 0.05);
}

TEST(McPrice, IsBitwiseDeterministic)
{
    auto const a = mc_price(reference_call, {100'000, 99});
    auto const b = mc_price(reference_call, {100'000, 99});
    EXPECT_EQ(a, b);
    EXPECT_NE(a, mc_price(reference_call, {100'000, 100}));
}

TEST(McPrice, QuadruplingPathsHalvesTheStandardError)
{
    struct Battery
    {
        double mean_reported_error;
        double empirical_spread;
    };
    auto const battery = [](std::size_t n) {
        std::vector<double> prices;
        double reported = 0;
        for (std::uint32_t seed = 1; seed <= 30; ++seed)
        {
            auto const est = mc_estimate(reference_call, {n, seed * 7919u});
            prices.push_back(est.price);
            reported += est.std_error;
        }
        return Battery{reported / 30, oracle::sample_stddev(prices)};
    };
    auto const small = battery(100'000);
    auto const large = battery(400'000);
    EXPECT_NEAR(small.mean_reported_error / large.mean_reported_error, 2.0, 0.4);

    // The reported error must describe the observed seed-to-seed spread. With
    // 30 seeds the spread itself carries ~13% sampling noise.
    EXPECT_NEAR(small.empirical_spread / small.mean_reported_error, 1.0, 0.4);
    EXPECT_NEAR(large.empirical_spread / large.mean_reported_error, 1.0, 0.4);
}

TEST(McPrice, ErrorWithinFiveStandardErrorsForMostSeeds)
{
    int passed = 0;
    double const exact = bs_price(reference_call);
    for (std::uint32_t seed = 1; seed <= 30; ++seed)
    {
        auto const est = mc_estimate(reference_call, {200'000, seed});
        if (std::abs(est.price - exact) <= 5 * est.std_error)
            ++passed;
    }
    EXPECT_GE(passed, 28);
}

TEST(McPrice, NonNegativeAndCallBoundedBySpot)
{
    std::mt19937 rng(5);
    for (int i = 0; i < 50; ++i)
    {
        auto const c = oracle::random_contract(rng);
        double const call = mc_price(with_kind(c, OptionKind::Call), {2000, static_cast<std::uint32_t>(i)});
        double const put = mc_price(with_kind(c, OptionKind::Put), {2000, static_cast<std::uint32_t>(i)});
        ASSERT_GE(call, 0.0);
        ASSERT_GE(put, 0.0);
        ASSERT_LE(call, c.spot);
    }
}

TEST(McPrice, SinglePrecisionAccumulationStaysClose)
{
    double const single = mc_price<float>(reference_call, {1'000'000, 3});
    double const dbl = mc_price<double>(reference_call, {1'000'000, 3});
    EXPECT_NEAR(single, dbl, 0.01 * dbl);
}

TEST(McPrice, RejectsZeroIterations)
{
    EXPECT_THROW(mc_price(reference_call, {0, 1}), std::domain_error);
}

TEST(McThreshold, ZeroWhenStrikeEqualsDriftedSpot)
{
    EXPECT_NEAR(mc_threshold({100, 100, 1, 0.02, 0.2, OptionKind::Call}), 0.0, 1e-12);
}

TEST(McThreshold, ReferenceContract)
{
    EXPECT_NEAR(mc_threshold(reference_call), -0.15, 1e-12);

    // Brute force: the fraction of paying draws must be P(x > -0.15) = Phi(0.15).
    NormalStream stream(11u);
    constexpr int n = 1'000'000;
    int paying = 0;
    double const drift = (0.05 - 0.02) * 1.0;
    for (int i = 0; i < n; ++i)
        paying += 100 * std::exp(drift + 0.2 * stream()) > 100 ? 1 : 0;
    EXPECT_NEAR(static_cast<double>(paying) / n, oracle::phi_by_quadrature(0.15), 0.002);
}

TEST(McThreshold, DoublingSpotShiftsByLog2)
{
    auto c = reference_call;
    double const base = mc_threshold(c);
    c.spot *= 2;
    EXPECT_NEAR(mc_threshold(c) - base, -std::log(2.0) / (0.2 * 1.0), 1e-12);
}

TEST(McThreshold, ZeroVolatilityIsADomainError)
{
    EXPECT_THROW(mc_threshold({100, 100, 1, 0.05, 0, OptionKind::Call}), std::domain_error);
}

TEST(McScreened, MatchesNaiveOnSameStream)
{
    double const naive = mc_price(reference_call, {1'000'000, 7});
    double const screened = mc_price_screened(reference_call, {1'000'000, 7});
    EXPECT_LE(std::abs(screened - naive) / naive, 1e-6);

    auto const put = with_kind(reference_call, OptionKind::Put);
    double const naive_put = mc_price(put, {1'000'000, 7});
    EXPECT_LE(std::abs(mc_price_screened(put, {1'000'000, 7}) - naive_put) / naive_put, 1e-6);
}

TEST(McScreened, DeepOutOfTheMoneyHasNoPassingDraws)
{
    auto const est = mc_screened_estimate({10, 1000, 0.1, 0.05, 0.1, OptionKind::Call}, {100'000, 3});
    EXPECT_EQ(est.passing, 0u);
    EXPECT_EQ(est.price, 0.0);
}

TEST(McScreened, HalfTheDrawsPassAtZeroThreshold)
{
    auto const est = mc_screened_estimate({100, 100, 1, 0.02, 0.2, OptionKind::Call}, {1'000'000, 5});
    EXPECT_NEAR(est.pass_fraction(), 0.5, 0.002);
    EXPECT_EQ(est.iterations, 1'000'000u);
}

TEST(McScreened, PassingCountMatchesNaivePayingCount)
{
    auto const c = with_kind(reference_call, OptionKind::Put);
    auto const est = mc_screened_estimate(c, {50'000, 21});
    NormalStream stream(21u);
    std::size_t paying = 0;
    for (int i = 0; i < 50'000; ++i)
        paying += 100 * std::exp(0.03 + 0.2 * stream()) < 100 ? 1 : 0;
    EXPECT_EQ(est.passing, paying);
}

TEST(BtPrice, OneStepLatticeByHand)
{
    OptionContract const c{100, 100, 1, 0, std::log(2.0), OptionKind::Call};
    EXPECT_NEAR(bt_price(c, {1}), 100.0 / 3.0, 1e-12);
    // Put pays 50 in the down state with weight 2/3.
    EXPECT_NEAR(bt_price(with_kind(c, OptionKind::Put), {1}), 100.0 / 3.0, 1e-12);
}

TEST(BtPrice, TwoStepLatticeAgainstDirectExpectation)
{
    OptionContract const c{100, 95, 0.5, 0.03, 0.25, OptionKind::Call};
    EXPECT_NEAR(bt_price(c, {2}), oracle::crr_expectation(c, 2), 1e-12);
    EXPECT_NEAR(bt_price(c, {37}), oracle::crr_expectation(c, 37), 1e-10);
}

TEST(BtPrice, ConvergesToBlackScholes)
{
    double const exact = bs_price(reference_call);
    EXPECT_LE(std::abs(bt_price(reference_call, {5000}) - exact) / exact, 5e-4);

    auto const put = with_kind(reference_call, OptionKind::Put);
    double const call_bt = bt_price(reference_call, {5000});
    double const put_bt = bt_price(put, {5000});
    double const parity = reference_call.spot - reference_call.strike * std::exp(-0.05);
    EXPECT_LE(std::abs((call_bt - put_bt) - parity) / parity, 5e-4);
}

TEST(BtPrice, DegenerateLatticeIsADomainError)
{
    EXPECT_THROW(bt_price({100, 100, 1, 0.05, 0, OptionKind::Call}, {10}), std::domain_error);
    EXPECT_THROW(bt_price(reference_call, {0}), std::domain_error);
}
