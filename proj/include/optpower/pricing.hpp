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

#ifndef OPTPOWER_PRICING_HPP
#define OPTPOWER_PRICING_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace optpower {

enum class OptionKind { Call, Put };

inline std::string_view to_string(OptionKind kind)
{
    return kind == OptionKind::Call ? "call" : "put";
}

/// One European vanilla contract.
struct OptionContract
{
    double spot = 0;        ///< S
    double strike = 0;      ///< P
    double expiry = 0;      ///< years
    double rate = 0;        ///< continuously compounded, per year
    double volatility = 0;  ///< per sqrt-year
    OptionKind kind = OptionKind::Call;
};

struct McParams
{
    std::size_t iterations = 500'000;
    std::uint32_t seed = 5489u;
};

struct BtParams
{
    std::size_t levels = 1000;
};

namespace detail {

inline void require_finite(OptionContract const& c, char const* who)
{
    if (!std::isfinite(c.spot) || !std::isfinite(c.strike) || !std::isfinite(c.expiry)
        || !std::isfinite(c.rate) || !std::isfinite(c.volatility))
    {
        throw std::domain_error(std::string(who) + ": non-finite contract field");
    }
}

inline void validate(OptionContract const& c, char const* who)
{
    require_finite(c, who);
    if (c.spot <= 0 || c.strike <= 0 || c.expiry <= 0 || c.volatility < 0)
    {
        throw std::domain_error(std::string(who)
                                + ": require spot > 0, strike > 0, expiry > 0, volatility >= 0");
    }
}

} // namespace detail

/**
 * Standard-normal draws from a 32-bit Mersenne Twister fed through the basic
 * (trigonometric) Box-Muller transform.
 *
 * Each pair of raw 32-bit outputs (a, b) gives u1 = (a+1)/2^32 and
 * u2 = (b+1)/2^32, both in (0,1], and produces
 * sqrt(-2 ln u1) cos(2 pi u2) followed by sqrt(-2 ln u1) sin(2 pi u2).
 * The sine half is buffered for the next call.
 *
 * Not thread-safe; give each worker its own stream.
 */
class NormalStream
{
public:
    explicit NormalStream(std::uint32_t seed) : engine_(seed) {}

    /// Next raw 32-bit Mersenne Twister output (bypasses the Gaussian buffer).
    std::uint32_t raw() { return static_cast<std::uint32_t>(engine_()); }

    /// Uniform in (0,1].
    double uniform() { return (static_cast<double>(raw()) + 1.0) * 0x1p-32; }

    double operator()()
    {
        if (has_spare_)
        {
            has_spare_ = false;
            return spare_;
        }
        double const u1 = uniform();
        double const u2 = uniform();
        double const radius = std::sqrt(-2.0 * std::log(u1));
        double const angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937 engine_;
    double spare_ = 0;
    bool has_spare_ = false;
};

inline NormalStream normal_stream(std::uint32_t seed) { return NormalStream(seed); }

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/**
 * Black-Scholes closed form. Zero volatility is the deterministic limit:
 * the discounted payoff of the forward, max(0, +-(S e^{rT} - P)) e^{-rT}.
 */
inline double bs_price(OptionContract const& c)
{
    detail::validate(c, "bs_price");
    double const discount = std::exp(-c.rate * c.expiry);
    double const sign = c.kind == OptionKind::Call ? 1.0 : -1.0;

    if (c.volatility == 0)
    {
        double const forward = c.spot * std::exp(c.rate * c.expiry);
        return std::max(0.0, sign * (forward - c.strike)) * discount;
    }

    double const vol_sqrt_t = c.volatility * std::sqrt(c.expiry);
    double const d1 = (std::log(c.spot / c.strike)
                       + (c.rate + 0.5 * c.volatility * c.volatility) * c.expiry)
                      / vol_sqrt_t;
    double const d2 = d1 - vol_sqrt_t;
    return sign * (c.spot * normal_cdf(sign * d1) - c.strike * discount * normal_cdf(sign * d2));
}

/// Price plus the standard error of the Monte Carlo mean.
struct McEstimate
{
    double price = 0;
    double std_error = 0;
};

/**
 * Naive Monte Carlo: S_T = S exp((r - sigma^2/2) T + sigma sqrt(T) x) for
 * each draw x, discounted mean of max(0, S_T - P) (Call) or max(0, P - S_T) (Put).
 *
 * Real selects the accumulation precision.
 */
template <typename Real = double>
McEstimate mc_estimate(OptionContract const& c, McParams const& params)
{
    detail::validate(c, "mc_price");
    if (params.iterations < 1)
        throw std::domain_error("mc_price: iterations must be >= 1");

    Real const drift = static_cast<Real>((c.rate - 0.5 * c.volatility * c.volatility) * c.expiry);
    Real const diffusion = static_cast<Real>(c.volatility * std::sqrt(c.expiry));
    Real const spot = static_cast<Real>(c.spot);
    Real const strike = static_cast<Real>(c.strike);
    bool const call = c.kind == OptionKind::Call;

    NormalStream normals(params.seed);
    Real sum = 0;
    Real sum_sq = 0;
    for (std::size_t i = 0; i < params.iterations; ++i)
    {
        Real const x = static_cast<Real>(normals());
        Real const terminal = spot * std::exp(drift + diffusion * x);
        Real const payoff = call ? std::max(Real(0), terminal - strike)
                                 : std::max(Real(0), strike - terminal);
        sum += payoff;
        sum_sq += payoff * payoff;
    }

    double const n = static_cast<double>(params.iterations);
    double const discount = std::exp(-c.rate * c.expiry);
    double const mean = static_cast<double>(sum) / n;
    double const variance = params.iterations > 1
                                ? std::max(0.0, (static_cast<double>(sum_sq) - n * mean * mean) / (n - 1))
                                : 0.0;
    return {discount * mean, discount * std::sqrt(variance / n)};
}

template <typename Real = double>
double mc_price(OptionContract const& c, McParams const& params)
{
    return mc_estimate<Real>(c, params).price;
}

/**
 * Draw threshold in standard-normal units: [ln(P/S) - (r - sigma^2/2) T] / (sigma sqrt T).
 * A Call payoff is positive iff x > threshold, a Put payoff iff x < threshold.
 */
inline double mc_threshold(OptionContract const& c)
{
    detail::validate(c, "mc_threshold");
    double const vol_sqrt_t = c.volatility * std::sqrt(c.expiry);
    if (vol_sqrt_t == 0)
        throw std::domain_error("mc_threshold: sigma * sqrt(T) is zero");
    return (std::log(c.strike / c.spot) - (c.rate - 0.5 * c.volatility * c.volatility) * c.expiry)
           / vol_sqrt_t;
}

struct ScreenedEstimate
{
    double price = 0;
    double threshold = 0;
    std::size_t passing = 0;     ///< M, draws with a positive payoff
    std::size_t iterations = 0;  ///< N

    double pass_fraction() const
    {
        return iterations == 0 ? 0.0 : static_cast<double>(passing) / static_cast<double>(iterations);
    }
};

/**
 * Threshold-screened Monte Carlo over the same normal stream as mc_price.
 *
 * Only draws on the paying side of mc_threshold enter the loop, and every
 * loop-invariant factor is hoisted out of it:
 *   Call: e^{-rT}/N [S e^{(r - sigma^2/2) T} sum_j e^{sigma sqrt(T) x_j} - M P]
 *   Put:  e^{-rT}/N [M P - S e^{(r - sigma^2/2) T} sum_j e^{sigma sqrt(T) x_j}]
 * The result equals mc_price up to floating-point reassociation.
 */
template <typename Real = double>
ScreenedEstimate mc_screened_estimate(OptionContract const& c, McParams const& params)
{
    double const threshold_d = mc_threshold(c);
    if (params.iterations < 1)
        throw std::domain_error("mc_price_screened: iterations must be >= 1");

    bool const call = c.kind == OptionKind::Call;
    Real const threshold = static_cast<Real>(threshold_d);
    Real const diffusion = static_cast<Real>(c.volatility * std::sqrt(c.expiry));

    // Draws are screened in blocks; each block is compacted to its paying
    // draws first so the exp loop carries no branch.
    constexpr std::size_t block = 4096;
    std::vector<Real> draws(std::min(block, params.iterations));
    NormalStream normals(params.seed);
    std::size_t passing = 0;
    Real sum = 0;
    for (std::size_t done = 0; done < params.iterations; done += draws.size())
    {
        std::size_t const count = std::min(draws.size(), params.iterations - done);
        std::size_t kept = 0;
        for (std::size_t i = 0; i < count; ++i)
        {
            Real const x = static_cast<Real>(normals());
            bool const pays = call ? x > threshold : x < threshold;
            draws[kept] = x;
            kept += pays ? 1 : 0;
        }
        for (std::size_t j = 0; j < kept; ++j)
            sum += std::exp(diffusion * draws[j]);
        passing += kept;
    }

    double const forward_factor =
        c.spot * std::exp((c.rate - 0.5 * c.volatility * c.volatility) * c.expiry);
    double const strike_total = static_cast<double>(passing) * c.strike;
    double const bracket = call ? forward_factor * static_cast<double>(sum) - strike_total
                                : strike_total - forward_factor * static_cast<double>(sum);
    double const price =
        std::exp(-c.rate * c.expiry) * bracket / static_cast<double>(params.iterations);
    return {passing == 0 ? 0.0 : price, threshold_d, passing, params.iterations};
}

template <typename Real = double>
double mc_price_screened(OptionContract const& c, McParams const& params)
{
    return mc_screened_estimate<Real>(c, params).price;
}

/**
 * Cox-Ross-Rubinstein lattice with levels+1 terminal nodes.
 *
 * v[i] holds the node with i up-moves (v[0] is the lowest price). Each
 * backward sweep runs v[i] = a v[i] + b v[i+1] with i ascending, which reads
 * v[i+1] before it is overwritten, so the sweep needs no second buffer.
 */
template <typename Real = double>
double bt_price(OptionContract const& c, BtParams const& params)
{
    detail::validate(c, "bt_price");
    if (params.levels < 1)
        throw std::domain_error("bt_price: levels must be >= 1");

    std::size_t const n = params.levels;
    double const dt = c.expiry / static_cast<double>(n);
    double const log_up = c.volatility * std::sqrt(dt);
    double const up = std::exp(log_up);
    double const down = 1.0 / up;
    if (up == down)
        throw std::domain_error("bt_price: degenerate lattice (sigma * sqrt(T/N) is zero)");

    double const growth = std::exp(c.rate * dt);
    double const p = (growth - down) / (up - down);
    double const step_discount = 1.0 / growth;
    Real const a = static_cast<Real>(step_discount * (1.0 - p));
    Real const b = static_cast<Real>(step_discount * p);

    double const sign = c.kind == OptionKind::Call ? 1.0 : -1.0;
    std::vector<Real> v(n + 1);
    for (std::size_t i = 0; i <= n; ++i)
    {
        double const moves = 2.0 * static_cast<double>(i) - static_cast<double>(n);
        double const terminal = c.spot * std::exp(log_up * moves);
        v[i] = static_cast<Real>(std::max(0.0, sign * (terminal - c.strike)));
    }

    for (std::size_t level = n; level > 0; --level)
    {
        for (std::size_t i = 0; i < level; ++i)
            v[i] = a * v[i] + b * v[i + 1];
    }
    return static_cast<double>(v[0]);
}

} // namespace optpower

#endif // OPTPOWER_PRICING_HPP
