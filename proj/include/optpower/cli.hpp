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

#ifndef OPTPOWER_CLI_HPP
#define OPTPOWER_CLI_HPP

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "optpower/feed.hpp"
#include "optpower/gaps.hpp"
#include "optpower/isoqos.hpp"
#include "optpower/kernel.hpp"
#include "optpower/metrics.hpp"

namespace optpower::cli {

enum ExitCode : int { ok = 0, usage_error = 1, data_error = 2 };

/// Bad flag value, reported as a usage error rather than a data error.
class UsageError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Evaluates fn, turning std::invalid_argument into UsageError.
template <typename Fn>
auto from_flags(Fn&& fn)
{
    try
    {
        return fn();
    }
    catch (std::invalid_argument const& e)
    {
        throw UsageError(e.what());
    }
}

inline nlohmann::json to_json(SessionStats const& s)
{
    nlohmann::json j;
    j["total_updates"] = s.total_updates;
    j["priced_batches"] = s.priced_batches;
    j["abandoned_batches"] = s.abandoned_batches;
    j["measured_qos"] = s.measured_qos() ? nlohmann::json(*s.measured_qos()) : nlohmann::json();
    j["options"] = {{"requested", s.options_requested},
                    {"priced", s.options_priced},
                    {"abandoned", s.options_abandoned},
                    {"qos", s.option_qos() ? nlohmann::json(*s.option_qos()) : nlohmann::json()}};
    j["datagrams"] = {{"received", s.datagrams_received},
                      {"malformed", s.malformed_datagrams},
                      {"ignored_ticks", s.ignored_ticks}};
    j["batch_seconds"] = s.batch_seconds;
    if (s.total_updates == 0)
        j["status"] = "no triggering updates";
    return j;
}

/// "const:W", "trace:FILE" or "counter:FILE".
inline PowerModel parse_power(std::string const& text, std::chrono::milliseconds poll_interval)
{
    auto const colon = text.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("--power must be const:W, trace:FILE or counter:FILE");
    std::string const kind = text.substr(0, colon);
    std::string const arg = text.substr(colon + 1);
    if (kind == "const")
    {
        double watts = 0;
        if (!csv::try_parse(arg, watts) || !(watts > 0))
            throw std::invalid_argument("--power const:W needs a positive wattage");
        return ConstantPower{watts};
    }
    if (kind == "trace")
        return load_power_trace(arg);
    if (kind == "counter")
        return EnergyCounter{arg, poll_interval};
    throw std::invalid_argument("--power kind must be const, trace or counter");
}

namespace detail {

struct KernelFlags
{
    std::string kind = "bs";
    std::size_t mc_iters = McParams{}.iterations;
    std::uint32_t seed = McParams{}.seed;
    std::size_t bt_levels = BtParams{}.levels;
    double stub_us = 0;

    void add_to(CLI::App& app)
    {
        app.add_option("--kernel", kind, "Pricing kernel")
            ->check(CLI::IsMember({"bs", "mc", "mc-screened", "bt", "stub"}))
            ->required();
        app.add_option("--mc-iters", mc_iters, "Monte Carlo iterations N")->check(CLI::PositiveNumber);
        app.add_option("--seed", seed, "Monte Carlo seed");
        app.add_option("--bt-levels", bt_levels, "Binomial tree levels N")->check(CLI::PositiveNumber);
        app.add_option("--stub-us", stub_us, "Per-option latency of the stub kernel, microseconds")
            ->check(CLI::NonNegativeNumber);
    }

    KernelSpec spec() const
    {
        KernelSpec s;
        s.kind = parse_kernel_kind(kind);
        s.mc = {mc_iters, seed};
        s.bt = {bt_levels};
        s.stub_latency = std::chrono::nanoseconds(static_cast<std::int64_t>(stub_us * 1000.0));
        return s;
    }
};

inline std::ofstream open_out(std::string const& path)
{
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot write '" + path + "'");
    return out;
}

} // namespace detail

/**
 * Runs one subcommand. Returns 0 on success, 1 on usage errors and 2 on data
 * errors. Tables and summaries go to `out`, diagnostics to `err`; --out files
 * are the only writes.
 */
inline int run(int argc, char const* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Option pricing QoS and energy toolkit"};
    app.set_config("--config-file", "", "key=value settings file; flags take precedence");
    app.require_subcommand(1, 1);

    // replay
    auto* replay_cmd = app.add_subcommand("replay", "Replay a tick trace over UDP multicast");
    std::string trace_path;
    std::string group_text;
    ReplayOptions replay_opts;
    replay_cmd->add_option("--trace", trace_path, "Trace CSV timestamp_ns,symbol,price")->required();
    replay_cmd->add_option("--group", group_text, "Multicast ADDRESS:PORT")->required();
    replay_cmd->add_option("--scale", replay_opts.scale, "Gap scale factor")->check(CLI::PositiveNumber);
    replay_cmd->add_option("--interface", replay_opts.interface, "Outgoing interface address");
    replay_cmd->add_option("--ttl", replay_opts.ttl, "Multicast TTL")->check(CLI::Range(0, 255));

    // consume
    auto* consume_cmd = app.add_subcommand("consume", "Price a contract book on every received price change");
    std::string book_path;
    std::string out_path;
    std::string symbol;
    std::string interface = "0.0.0.0";
    std::size_t workers = 1;
    std::optional<std::uint64_t> max_ticks;
    std::optional<double> duration_s;
    double idle_timeout_s = 5.0;
    detail::KernelFlags consume_kernel;
    consume_cmd->add_option("--group", group_text, "Multicast ADDRESS:PORT")->required();
    consume_cmd->add_option("--book", book_path, "Contract book CSV")->required();
    consume_kernel.add_to(*consume_cmd);
    consume_cmd->add_option("--workers", workers, "Pricing worker threads")->check(CLI::PositiveNumber);
    consume_cmd->add_option("--symbol", symbol, "Only react to this symbol");
    consume_cmd->add_option("--max-ticks", max_ticks, "Stop after this many ticks");
    consume_cmd->add_option("--duration", duration_s, "Stop after this many seconds")->check(CLI::PositiveNumber);
    consume_cmd->add_option("--idle-timeout", idle_timeout_s, "Stop after this many idle seconds")
        ->check(CLI::PositiveNumber);
    consume_cmd->add_option("--interface", interface, "Interface address to join on");
    consume_cmd->add_option("--out", out_path, "Session stats JSON")->required();

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Measure S/Opt and J/Opt for a kernel");
    detail::KernelFlags bench_kernel_flags;
    std::string power_text;
    std::size_t poll_ms = 100;
    BenchOptions bench_opts;
    std::string rec_name;
    std::string rec_config;
    std::string rec_vec;
    bench_kernel_flags.add_to(*bench_cmd);
    bench_cmd->add_option("--book", book_path, "Contract book CSV")->required();
    bench_cmd->add_option("--power", power_text, "const:W | trace:FILE | counter:FILE")->required();
    bench_cmd->add_option("--poll-ms", poll_ms, "Energy counter poll interval")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--reps", bench_opts.repetitions, "Passes over the book")->required()->check(
        CLI::PositiveNumber);
    bench_cmd->add_option("--spot", bench_opts.spot, "Underlying spot price")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--workers", bench_opts.workers, "Worker threads")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--name", rec_name, "Platform name")->required();
    bench_cmd->add_option("--config", rec_config, "nodes×cores×threads")->required();
    bench_cmd->add_option("--vec", rec_vec, "Vectorisation label")->required();
    bench_cmd->add_option("--out", out_path, "Platform record CSV")->required();

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "Build the QoS curve of a trace and fit a Poisson model");
    double bin_width = 1.0;
    std::string method = "mle";
    fit_cmd->add_option("--trace", trace_path, "Trace CSV")->required();
    fit_cmd->add_option("--bin-width", bin_width, "Bin width in seconds")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--method", method, "Fit written to the curve")->check(CLI::IsMember({"mle", "lsq"}));
    fit_cmd->add_option("--out", out_path, "QoS curve CSV")->required();

    // rank
    auto* rank_cmd = app.add_subcommand("rank", "Rank platforms by session energy at a QoS target");
    std::string platforms_path;
    double qos = 0;
    std::uint64_t updates = 0;
    std::uint64_t nopt = 0;
    std::string curve_path;
    std::optional<double> gap;
    rank_cmd->add_option("--platforms", platforms_path, "Platform records CSV")->required();
    rank_cmd->add_option("--qos", qos, "QoS target, percent")->required()->check(CLI::Range(0.0, 100.0));
    rank_cmd->add_option("--updates", updates, "Total price updates in the session")->required();
    rank_cmd->add_option("--nopt", nopt, "Contracts per update")->required()->check(CLI::PositiveNumber);
    auto* curve_opt = rank_cmd->add_option("--curve", curve_path, "QoS curve CSV from `fit`");
    auto* gap_opt = rank_cmd->add_option("--gap", gap, "Explicit time budget G, seconds")->check(CLI::PositiveNumber);
    curve_opt->excludes(gap_opt);
    rank_cmd->add_option("--out", out_path, "Ranking table (.csv or .txt)")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::CallForHelp const&)
    {
        out << app.help();
        return ok;
    }
    catch (CLI::CallForAllHelp const&)
    {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    }
    catch (CLI::ParseError const& e)
    {
        err << "error: " << e.what() << "\n\n" << app.help();
        return usage_error;
    }

    try
    {
        if (*replay_cmd)
        {
            auto const group = from_flags([&] { return parse_group(group_text); });
            auto const ticks = load_trace(trace_path);
            auto const report = replay(ticks, group, replay_opts);
            out << "sent " << report.datagrams_sent << " datagrams to " << group.to_string() << " in "
                << std::chrono::duration<double>(report.duration).count() << " s\n";
        }
        else if (*consume_cmd)
        {
            auto const group = from_flags([&] { return parse_group(group_text); });
            auto book = load_book(book_path, symbol);
            ConsumeOptions options;
            options.workers = workers;
            options.max_ticks = max_ticks;
            if (duration_s)
                options.duration = std::chrono::milliseconds(static_cast<std::int64_t>(*duration_s * 1000));
            options.idle_timeout = std::chrono::milliseconds(static_cast<std::int64_t>(idle_timeout_s * 1000));
            auto const stats =
                consume(group, std::move(book), make_kernel(consume_kernel.spec()), options, interface);
            detail::open_out(out_path) << to_json(stats).dump(2) << '\n';
            if (!stats.measured_qos())
            {
                err << "no triggering updates\n";
                return data_error;
            }
            out << "updates " << stats.total_updates << ", priced " << stats.priced_batches << ", abandoned "
                << stats.abandoned_batches << ", QoS " << std::fixed << std::setprecision(2)
                << 100.0 * *stats.measured_qos() << "%\n";
        }
        else if (*bench_cmd)
        {
            auto const power = from_flags([&] { return parse_power(power_text, std::chrono::milliseconds(poll_ms)); });
            auto const book = load_book(book_path);
            if (bench_opts.repetitions * book.size() < 100)
                throw UsageError("--reps x book size must be at least 100");
            auto const result = bench_kernel(bench_kernel_flags.spec(), book, power, bench_opts);
            auto const record = export_platform_record(result, rec_name, rec_config, rec_vec);
            detail::open_out(out_path) << platform_csv_header() << '\n' << to_csv_row(record) << '\n';
            out << result.kernel << ": " << result.options_priced << " options in " << result.elapsed
                << " s, S/Opt " << result.s_opt << " s, " << result.avg_power << " W, J/Opt " << result.j_opt
                << " J\n";
        }
        else if (*fit_cmd)
        {
            auto const ticks = load_trace(trace_path);
            auto const hist = build_histogram(ticks, bin_width);
            auto const fit_method = method == "lsq" ? FitMethod::LeastSquares : FitMethod::MaximumLikelihood;
            auto const curve = empirical_qos(hist, fit_method);
            auto file = detail::open_out(out_path);
            write_qos_csv(curve, file);
            out << hist.total << " gaps, mean " << mean_gap_seconds(ticks) << " s, " << hist.counts.size()
                << " bins of " << bin_width << " s\n";
            if (!curve.fitted_lambda)
            {
                out << "no Poisson fit (need >= 2 gaps outside bin 0)\n";
            }
            else
            {
                auto const mle = fit_poisson_report(hist, FitMethod::MaximumLikelihood);
                auto const lsq = fit_poisson_report(hist, FitMethod::LeastSquares);
                out << "lambda (mle) " << mle.lambda << " bins, max deviation " << mle.max_deviation << '\n'
                    << "lambda (lsq) " << lsq.lambda << " bins, max deviation " << lsq.max_deviation << '\n';
            }
        }
        else if (*rank_cmd)
        {
            if (!(qos > 0))
                throw UsageError("--qos must be in (0, 100]");
            if (curve_path.empty() && !gap)
                throw UsageError("rank needs --curve or --gap");
            auto const platforms = load_platforms(platforms_path);
            if (platforms.empty())
                throw DataError("no platforms in '" + platforms_path + "'");
            TimeBudget budget = gap ? TimeBudget(*gap) : TimeBudget(read_qos_csv(curve_path));
            auto const ranking = rank(platforms, budget, qos, updates, nopt);
            write_ranking_table(ranking, out);
            auto file = detail::open_out(out_path);
            if (out_path.ends_with(".txt"))
                write_ranking_table(ranking, file);
            else
                write_ranking_csv(ranking, file);
        }
    }
    catch (UsageError const& e)
    {
        err << "error: " << e.what() << '\n';
        return usage_error;
    }
    catch (std::exception const& e)
    {
        err << "error: " << e.what() << '\n';
        return data_error;
    }
    return ok;
}

} // namespace optpower::cli

#endif // OPTPOWER_CLI_HPP
