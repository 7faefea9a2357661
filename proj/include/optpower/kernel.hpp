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

#ifndef OPTPOWER_KERNEL_HPP
#define OPTPOWER_KERNEL_HPP

#include <chrono>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "optpower/csv.hpp"
#include "optpower/pricing.hpp"

namespace optpower {

enum class KernelKind { BlackScholes, MonteCarlo, MonteCarloScreened, BinomialTree, Stub };

/// Kernel selector plus the parameters of whichever kernel it names.
struct KernelSpec
{
    KernelKind kind = KernelKind::BlackScholes;
    McParams mc;
    BtParams bt;
    /// Fixed per-option latency of the Stub kernel.
    std::chrono::nanoseconds stub_latency{0};
};

using PricingKernel = std::function<double(OptionContract const&)>;

inline std::string_view to_string(KernelKind kind)
{
    switch (kind)
    {
    case KernelKind::BlackScholes: return "bs";
    case KernelKind::MonteCarlo: return "mc";
    case KernelKind::MonteCarloScreened: return "mc-screened";
    case KernelKind::BinomialTree: return "bt";
    case KernelKind::Stub: return "stub";
    }
    return "?";
}

inline KernelKind parse_kernel_kind(std::string_view name)
{
    for (auto kind : {KernelKind::BlackScholes, KernelKind::MonteCarlo, KernelKind::MonteCarloScreened,
                      KernelKind::BinomialTree, KernelKind::Stub})
    {
        if (to_string(kind) == name)
            return kind;
    }
    throw std::invalid_argument("unknown kernel '" + std::string(name) + "'");
}

/// e.g. "mc N=500000 seed=5489"
inline std::string describe(KernelSpec const& spec)
{
    std::string out(to_string(spec.kind));
    switch (spec.kind)
    {
    case KernelKind::MonteCarlo:
    case KernelKind::MonteCarloScreened:
        out += " N=" + std::to_string(spec.mc.iterations) + " seed=" + std::to_string(spec.mc.seed);
        break;
    case KernelKind::BinomialTree: out += " N=" + std::to_string(spec.bt.levels); break;
    case KernelKind::Stub: out += " latency_ns=" + std::to_string(spec.stub_latency.count()); break;
    case KernelKind::BlackScholes: break;
    }
    return out;
}

/// Blocks for `latency`: sleeps most of it and spins the tail so the total is tight.
inline void hold_for(std::chrono::nanoseconds latency)
{
    using clock = std::chrono::steady_clock;
    auto const deadline = clock::now() + latency;
    constexpr auto spin_tail = std::chrono::microseconds(200);
    if (latency > spin_tail)
        std::this_thread::sleep_for(latency - spin_tail);
    while (clock::now() < deadline)
    {
    }
}

inline PricingKernel make_kernel(KernelSpec const& spec)
{
    switch (spec.kind)
    {
    case KernelKind::BlackScholes: return [](OptionContract const& c) { return bs_price(c); };
    case KernelKind::MonteCarlo: return [mc = spec.mc](OptionContract const& c) { return mc_price(c, mc); };
    case KernelKind::MonteCarloScreened:
        return [mc = spec.mc](OptionContract const& c) { return mc_price_screened(c, mc); };
    case KernelKind::BinomialTree: return [bt = spec.bt](OptionContract const& c) { return bt_price(c, bt); };
    case KernelKind::Stub:
        return [latency = spec.stub_latency](OptionContract const&) {
            hold_for(latency);
            return 0.0;
        };
    }
    throw std::invalid_argument("make_kernel: bad kernel kind");
}

/// Contracts written on one underlying; spot is filled in from the feed.
struct ContractBook
{
    std::string symbol;  ///< empty matches any symbol
    std::vector<OptionContract> contracts;

    std::size_t size() const { return contracts.size(); }

    OptionContract at_spot(std::size_t i, double spot) const
    {
        OptionContract c = contracts.at(i);
        c.spot = spot;
        return c;
    }
};

inline OptionKind parse_option_kind(std::string_view text, std::size_t line)
{
    if (text == "call" || text == "Call" || text == "CALL" || text == "C")
        return OptionKind::Call;
    if (text == "put" || text == "Put" || text == "PUT" || text == "P")
        return OptionKind::Put;
    throw DataError("bad kind '" + std::string(text) + "' (call|put)", line);
}

/// Reads `strike,expiry_years,rate,volatility,kind` rows (header optional).
inline ContractBook load_book(std::string const& path, std::string symbol = {})
{
    ContractBook book;
    book.symbol = std::move(symbol);
    csv::for_each_row(path, [&](auto const& f, std::size_t line) {
        if (f.size() != 5)
            throw DataError("expected strike,expiry_years,rate,volatility,kind", line);
        OptionContract c;
        c.spot = 1.0;
        c.strike = csv::parse_double(f[0], line, "strike");
        c.expiry = csv::parse_double(f[1], line, "expiry_years");
        c.rate = csv::parse_double(f[2], line, "rate");
        c.volatility = csv::parse_double(f[3], line, "volatility");
        c.kind = parse_option_kind(f[4], line);
        if (!(c.strike > 0) || !(c.expiry > 0) || !(c.volatility >= 0) || !std::isfinite(c.rate))
            throw DataError("contract requires strike > 0, expiry > 0, volatility >= 0", line);
        book.contracts.push_back(c);
    });
    if (book.contracts.empty())
        throw DataError("contract book '" + path + "' is empty");
    return book;
}

} // namespace optpower

#endif // OPTPOWER_KERNEL_HPP
