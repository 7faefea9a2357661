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

#ifndef OPTPOWER_TICK_HPP
#define OPTPOWER_TICK_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "optpower/csv.hpp"

namespace optpower {

/// One timestamped price update.
struct Tick
{
    std::int64_t timestamp_ns = 0;  ///< since epoch
    std::string symbol;
    double price = 0;

    friend bool operator==(Tick const&, Tick const&) = default;
};

namespace detail {

inline Tick parse_tick_fields(std::vector<std::string_view> const& fields, std::size_t line)
{
    if (fields.size() != 3)
        throw DataError("expected timestamp_ns,symbol,price", line);
    Tick tick;
    tick.timestamp_ns = csv::parse_int(fields[0], line, "timestamp_ns");
    if (fields[1].empty())
        throw DataError("empty symbol", line);
    tick.symbol = std::string(fields[1]);
    tick.price = csv::parse_double(fields[2], line, "price");
    if (!(tick.price > 0) || !std::isfinite(tick.price))
        throw DataError("price must be positive", line);
    return tick;
}

} // namespace detail

/// Datagram payload: `timestamp_ns,symbol,price\n`, price in shortest round-trip form.
inline std::string encode_tick(Tick const& tick)
{
    std::string out = std::to_string(tick.timestamp_ns);
    out += ',';
    out += tick.symbol;
    out += ',';
    out += csv::format_double(tick.price);
    out += '\n';
    return out;
}

/// Parses a datagram payload; nullopt when malformed.
inline std::optional<Tick> decode_tick(std::string_view payload)
{
    if (payload.empty() || payload.back() != '\n')
        return std::nullopt;
    payload.remove_suffix(1);
    try
    {
        return detail::parse_tick_fields(csv::split(payload), 0);
    }
    catch (DataError const&)
    {
        return std::nullopt;
    }
}

/**
 * Reads a `timestamp_ns,symbol,price` trace (header optional). Throws
 * DataError carrying the offending line on parse errors and on timestamps
 * that go backwards.
 */
inline std::vector<Tick> load_trace(std::string const& path)
{
    std::vector<Tick> ticks;
    csv::for_each_row(path, [&](auto const& fields, std::size_t line) {
        Tick tick = detail::parse_tick_fields(fields, line);
        if (!ticks.empty() && tick.timestamp_ns < ticks.back().timestamp_ns)
            throw DataError("timestamp goes backwards (non-monotone trace)", line);
        ticks.push_back(std::move(tick));
    });
    return ticks;
}

} // namespace optpower

#endif // OPTPOWER_TICK_HPP
