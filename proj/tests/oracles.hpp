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

// Test-only reference computations. None of these call into the library's
// pricing or fitting code.

#ifndef OPTPOWER_TESTS_ORACLES_HPP
#define OPTPOWER_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "optpower/pricing.hpp"

namespace oracle {

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI); }

template <typename F>
double simpson(F const& f, double a, double b, int intervals)
{
    if (b <= a)
        return 0;
    intervals += intervals % 2;
    double const h = (b - a) / intervals;
    double sum = f(a) + f(b);
    for (int i = 1; i < intervals; ++i)
        sum += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return sum * h / 3;
}

/// Phi(z) by integrating the density from -12.
inline double phi_by_quadrature(double z) { return simpson(normal_pdf, -12.0, z, 200000); }

/// Discounted expected payoff under the lognormal terminal law, split at the payoff kink.
inline double lognormal_quadrature_price(optpower::OptionContract const& c)
{
    double const drift = (c.rate - 0.5 * c.volatility * c.volatility) * c.expiry;
    double const diffusion = c.volatility * std::sqrt(c.expiry);
    double const kink = (std::log(c.strike / c.spot) - drift) / diffusion;
    bool const call = c.kind == optpower::OptionKind::Call;
    auto const integrand = [&](double x) {
        double const st = c.spot * std::exp(drift + diffusion * x);
        return std::max(0.0, call ? st - c.strike : c.strike - st) * normal_pdf(x);
    };
    double const value = call ? simpson(integrand, std::max(kink, -14.0), 14.0, 400000)
                              : simpson(integrand, -14.0, std::min(kink, 14.0), 400000);
    return std::exp(-c.rate * c.expiry) * value;
}

/// CRR price as an explicit binomial expectation over terminal nodes.
inline double crr_expectation(optpower::OptionContract const& c, int steps)
{
    double const dt = c.expiry / steps;
    double const u = std::exp(c.volatility * std::sqrt(dt));
    double const d = 1 / u;
    double const p = (std::exp(c.rate * dt) - d) / (u - d);
    double sum = 0;
    for (int k = 0; k <= steps; ++k)
    {
        double const log_weight = std::lgamma(steps + 1.0) - std::lgamma(k + 1.0) - std::lgamma(steps - k + 1.0)
                                  + k * std::log(p) + (steps - k) * std::log1p(-p);
        double const st = c.spot * std::pow(u, k) * std::pow(d, steps - k);
        double const payoff = c.kind == optpower::OptionKind::Call ? st - c.strike : c.strike - st;
        sum += std::exp(log_weight) * std::max(0.0, payoff);
    }
    return std::exp(-c.rate * c.expiry) * sum;
}

/// sigma in [0.05, 0.8], T in [0.1, 5], S/P in [0.5, 2].
template <typename Rng>
optpower::OptionContract random_contract(Rng& rng)
{
    std::uniform_real_distribution<double> vol(0.05, 0.8), expiry(0.1, 5), moneyness(0.5, 2), rate(-0.01, 0.1),
        strike(50, 150);
    std::bernoulli_distribution is_call(0.5);
    optpower::OptionContract c;
    c.strike = strike(rng);
    c.spot = c.strike * moneyness(rng);
    c.expiry = expiry(rng);
    c.rate = rate(rng);
    c.volatility = vol(rng);
    c.kind = is_call(rng) ? optpower::OptionKind::Call : optpower::OptionKind::Put;
    return c;
}

inline double sample_stddev(std::vector<double> const& xs)
{
    double const mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double ss = 0;
    for (double x : xs)
        ss += (x - mean) * (x - mean);
    return std::sqrt(ss / (xs.size() - 1));
}

/// Knuth's multiplication method; adequate for small lambda.
template <typename Rng>
int poisson_draw(Rng& rng, double lambda)
{
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    double const limit = std::exp(-lambda);
    int k = 0;
    double product = uniform(rng);
    while (product > limit)
    {
        ++k;
        product *= uniform(rng);
    }
    return k;
}

} // namespace oracle

#endif // OPTPOWER_TESTS_ORACLES_HPP
