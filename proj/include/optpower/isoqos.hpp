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

#ifndef OPTPOWER_ISOQOS_HPP
#define OPTPOWER_ISOQOS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "optpower/csv.hpp"
#include "optpower/gaps.hpp"

namespace optpower {

/// One measured (platform, configuration) pair.
struct PlatformRecord
{
    std::string name;
    std::string config;    ///< "nodes×cores×threads"
    std::string vec_type;  ///< free-form label, e.g. INTRINSICS
    double s_opt = 0;      ///< seconds per option
    double j_opt = 0;      ///< joules per option

    friend bool operator==(PlatformRecord const&, PlatformRecord const&) = default;

    /// "name(config)", or just the name when config is empty.
    std::string label() const { return config.empty() ? name : name + "(" + config + ")"; }
};

struct RankingEntry
{
    PlatformRecord platform;
    double required_time = 0;  ///< n_opt * s_opt, seconds
    bool feasible = false;
    std::uint64_t n_gaps = 0;
    double gap_energy = 0;      ///< joules
    double session_energy = 0;  ///< joules; 0 when infeasible
};

struct Ranking
{
    double time_budget = 0;  ///< G, seconds
    std::vector<RankingEntry> ranked;    ///< feasible, ascending energy
    std::vector<RankingEntry> excluded;  ///< infeasible, input order
};

inline void validate(PlatformRecord const& p)
{
    if (!(p.s_opt > 0) || !std::isfinite(p.s_opt))
        throw DataError("platform '" + p.name + "': s_opt must be positive");
    if (!(p.j_opt > 0) || !std::isfinite(p.j_opt))
        throw DataError("platform '" + p.name + "': j_opt must be positive");
}

/// All n_opt contracts fit in the budget: n_opt * s_opt <= g.
inline bool feasible(PlatformRecord const& platform, double g, std::uint64_t n_opt)
{
    return static_cast<double>(n_opt) * platform.s_opt <= g;
}

/// floor(y% of total_updates); the tiny relative nudge absorbs y/100 rounding (10% of 10150 is 1015).
inline std::uint64_t gap_count(double y_percent, std::uint64_t total_updates)
{
    if (!(y_percent > 0) || y_percent > 100)
        throw std::invalid_argument("QoS target must be in (0, 100]");
    double const exact = y_percent * static_cast<double>(total_updates) / 100.0;
    return static_cast<std::uint64_t>(std::floor(exact * (1.0 + 1e-12)));
}

inline double gap_energy(PlatformRecord const& platform, std::uint64_t n_opt)
{
    return static_cast<double>(n_opt) * platform.j_opt;
}

/// Energy to price every contract in each of the floor(y% * total) served gaps. Idle power is ignored.
inline double session_energy(PlatformRecord const& platform, double y_percent,
                             std::uint64_t total_updates, std::uint64_t n_opt)
{
    return static_cast<double>(gap_count(y_percent, total_updates)) * gap_energy(platform, n_opt);
}

inline RankingEntry evaluate(PlatformRecord const& platform, double g, double y_percent,
                             std::uint64_t total_updates, std::uint64_t n_opt)
{
    RankingEntry entry;
    entry.platform = platform;
    entry.required_time = static_cast<double>(n_opt) * platform.s_opt;
    entry.feasible = feasible(platform, g, n_opt);
    entry.n_gaps = gap_count(y_percent, total_updates);
    entry.gap_energy = gap_energy(platform, n_opt);
    entry.session_energy = entry.feasible ? static_cast<double>(entry.n_gaps) * entry.gap_energy : 0.0;
    return entry;
}

/// Either a QoS curve (G is read off it at the target) or an explicit G in seconds.
using TimeBudget = std::variant<QosCurve, double>;

/**
 * Ranks platforms at an iso-QoS target. Infeasible platforms are left out of
 * the ranking and listed in Ranking::excluded. Ties on energy go to the
 * lower s_opt, then to the name.
 */
inline Ranking rank(std::vector<PlatformRecord> const& platforms, TimeBudget const& budget,
                    double y_percent, std::uint64_t total_updates, std::uint64_t n_opt)
{
    if (platforms.empty())
        throw std::invalid_argument("rank: no platforms");
    if (n_opt < 1)
        throw std::invalid_argument("rank: n_opt must be >= 1");

    Ranking result;
    if (auto const* curve = std::get_if<QosCurve>(&budget))
        result.time_budget = gap_for_qos(*curve, y_percent);
    else
        result.time_budget = std::get<double>(budget);
    if (!(result.time_budget >= 0))
        throw std::invalid_argument("rank: time budget must be non-negative");

    for (auto const& platform : platforms)
    {
        validate(platform);
        auto entry = evaluate(platform, result.time_budget, y_percent, total_updates, n_opt);
        (entry.feasible ? result.ranked : result.excluded).push_back(std::move(entry));
    }

    std::stable_sort(result.ranked.begin(), result.ranked.end(), [](auto const& a, auto const& b) {
        if (a.session_energy != b.session_energy)
            return a.session_energy < b.session_energy;
        if (a.platform.s_opt != b.platform.s_opt)
            return a.platform.s_opt < b.platform.s_opt;
        return a.platform.name < b.platform.name;
    });
    return result;
}

// Platform records file: name,config,vec_type,s_opt,j_opt

inline std::string platform_csv_header() { return "name,config,vec_type,s_opt,j_opt"; }

inline std::string to_csv_row(PlatformRecord const& p)
{
    return p.name + ',' + p.config + ',' + p.vec_type + ',' + csv::format_double(p.s_opt) + ','
           + csv::format_double(p.j_opt);
}

inline PlatformRecord parse_platform_row(std::vector<std::string_view> const& fields, std::size_t line)
{
    if (fields.size() != 5)
        throw DataError("expected name,config,vec_type,s_opt,j_opt", line);
    PlatformRecord p{std::string(fields[0]), std::string(fields[1]), std::string(fields[2]),
                     csv::parse_double(fields[3], line, "s_opt"),
                     csv::parse_double(fields[4], line, "j_opt")};
    if (p.name.empty())
        throw DataError("empty platform name", line);
    try
    {
        validate(p);
    }
    catch (DataError const& e)
    {
        throw DataError(e.what(), line);
    }
    return p;
}

inline std::vector<PlatformRecord> load_platforms(std::string const& path)
{
    std::vector<PlatformRecord> platforms;
    csv::for_each_row(
        path, [&](auto const& fields, std::size_t line) { platforms.push_back(parse_platform_row(fields, line)); },
        3);
    return platforms;
}

namespace detail {

inline std::string fixed(double value, int digits)
{
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << value;
    return s.str();
}

/// Display width in code points, so "16×4×1" lines up.
inline std::size_t display_width(std::string const& s)
{
    return static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [](char ch) { return (static_cast<unsigned char>(ch) & 0xC0) != 0x80; }));
}

inline std::string pad(std::string const& s, std::size_t width, bool right)
{
    std::size_t const w = display_width(s);
    std::string fill(w < width ? width - w : 0, ' ');
    return right ? fill + s : s + fill;
}

} // namespace detail

/// CSV report: Platform,VEC TYPE,S/Opt,J/Opt,Energy(KJ), energy to two decimals.
inline void write_ranking_csv(Ranking const& ranking, std::ostream& out)
{
    out << "Platform,VEC TYPE,S/Opt,J/Opt,Energy(KJ)\n";
    for (auto const& e : ranking.ranked)
    {
        out << e.platform.label() << ',' << e.platform.vec_type << ',' << csv::format_double(e.platform.s_opt)
            << ',' << csv::format_double(e.platform.j_opt) << ',' << detail::fixed(e.session_energy / 1000.0, 2)
            << '\n';
    }
}

/// Aligned text table with the same columns, followed by the excluded platforms.
inline void write_ranking_table(Ranking const& ranking, std::ostream& out)
{
    std::vector<std::vector<std::string>> rows{{"Platform", "VEC TYPE", "S/Opt", "J/Opt", "Energy(KJ)"}};
    for (auto const& e : ranking.ranked)
    {
        rows.push_back({e.platform.label(), e.platform.vec_type, detail::fixed(e.platform.s_opt, 4),
                        detail::fixed(e.platform.j_opt, 4), detail::fixed(e.session_energy / 1000.0, 2)});
    }

    std::vector<std::size_t> widths(5, 0);
    for (auto const& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c)
            widths[c] = std::max(widths[c], detail::display_width(row[c]));

    out << "G = " << detail::fixed(ranking.time_budget, 3) << " s\n";
    for (std::size_t r = 0; r < rows.size(); ++r)
    {
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            out << (c ? "  " : "") << detail::pad(rows[r][c], widths[c], c > 0);
        out << '\n';
    }
    if (ranking.ranked.empty())
        out << "(no feasible platform)\n";
    for (auto const& e : ranking.excluded)
    {
        out << "excluded: " << e.platform.label() << ' ' << e.platform.vec_type << " needs "
            << detail::fixed(e.required_time, 3) << " s > G\n";
    }
}

} // namespace optpower

#endif // OPTPOWER_ISOQOS_HPP
