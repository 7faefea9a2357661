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

#ifndef OPTPOWER_METRICS_HPP
#define OPTPOWER_METRICS_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <exception>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "optpower/csv.hpp"
#include "optpower/isoqos.hpp"
#include "optpower/kernel.hpp"

namespace optpower {

struct ConstantPower
{
    double watts = 0;
};

struct PowerSample
{
    double t_seconds = 0;
    double watts = 0;
};

/// Power samples on the run's timeline (first sample = start of the timed run).
struct PowerTrace
{
    std::vector<PowerSample> samples;
};

/// A file holding one ASCII float, the cumulative joules of some energy counter.
struct EnergyCounter
{
    std::string path;
    std::chrono::milliseconds poll_interval{100};
};

using PowerModel = std::variant<ConstantPower, PowerTrace, EnergyCounter>;

/// Reads `t_seconds,watts` rows; timestamps must strictly increase.
inline PowerTrace load_power_trace(std::string const& path)
{
    PowerTrace trace;
    csv::for_each_row(path, [&](auto const& f, std::size_t line) {
        if (f.size() != 2)
            throw DataError("expected t_seconds,watts", line);
        PowerSample s{csv::parse_double(f[0], line, "t_seconds"), csv::parse_double(f[1], line, "watts")};
        if (!trace.samples.empty() && !(s.t_seconds > trace.samples.back().t_seconds))
            throw DataError("power trace timestamps must strictly increase", line);
        if (s.watts < 0)
            throw DataError("negative power", line);
        trace.samples.push_back(s);
    });
    if (trace.samples.size() < 2)
        throw DataError("power trace '" + path + "' needs at least two samples");
    return trace;
}

/// Mean power over the first `seconds` of the trace, trapezoidal between samples.
inline double average_power(PowerTrace const& trace, double seconds)
{
    auto const& s = trace.samples;
    if (s.size() < 2)
        throw DataError("power trace needs at least two samples");
    double const t0 = s.front().t_seconds;
    double const end = t0 + seconds;
    if (s.back().t_seconds < end)
        throw DataError("power trace (" + csv::format_double(s.back().t_seconds - t0)
                        + " s) is shorter than the run (" + csv::format_double(seconds) + " s)");
    if (seconds <= 0)
        return s.front().watts;

    double energy = 0;
    for (std::size_t i = 1; i < s.size() && s[i - 1].t_seconds < end; ++i)
    {
        double const a = s[i - 1].t_seconds;
        double const b = std::min(s[i].t_seconds, end);
        double const wb = s[i - 1].watts + (s[i].watts - s[i - 1].watts) * (b - a) / (s[i].t_seconds - a);
        energy += 0.5 * (s[i - 1].watts + wb) * (b - a);
    }
    return energy / seconds;
}

inline double read_energy_counter(std::string const& path)
{
    for (int attempt = 0; attempt < 5; ++attempt)
    {
        std::ifstream in(path);
        if (!in)
            throw DataError("cannot open energy counter '" + path + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        double joules = 0;
        if (csv::try_parse(csv::trim(buf.str()), joules))
            return joules;
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    throw DataError("energy counter '" + path + "' does not hold a number");
}

/// Polls an energy counter on a background thread between start() and stop().
class CounterPoller
{
public:
    explicit CounterPoller(EnergyCounter counter) : counter_(std::move(counter)) {}
    CounterPoller(CounterPoller const&) = delete;
    CounterPoller& operator=(CounterPoller const&) = delete;
    ~CounterPoller()
    {
        if (thread_.joinable())
        {
            signal_stop();
            thread_.join();
        }
    }

    void start()
    {
        sample();
        thread_ = std::thread([this] {
            std::unique_lock lock(mutex_);
            while (!cv_.wait_for(lock, counter_.poll_interval, [this] { return stop_; }))
            {
                lock.unlock();
                try
                {
                    sample();
                }
                catch (...)
                {
                    std::lock_guard g(mutex_);
                    if (!error_)
                        error_ = std::current_exception();
                }
                lock.lock();
            }
        });
    }

    /// Average watts between the first and last readings.
    double stop()
    {
        signal_stop();
        thread_.join();
        if (error_)
            std::rethrow_exception(error_);
        sample();
        auto const& first = readings_.front();
        auto const& last = readings_.back();
        double const dt = std::chrono::duration<double>(last.first - first.first).count();
        if (dt <= 0)
            throw DataError("energy counter run too short to measure");
        return (last.second - first.second) / dt;
    }

private:
    void signal_stop()
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
        cv_.notify_all();
    }

    void sample()
    {
        double const joules = read_energy_counter(counter_.path);
        auto const now = std::chrono::steady_clock::now();
        std::lock_guard lock(mutex_);
        if (!readings_.empty() && joules < readings_.back().second)
            throw DataError("energy counter rolled back (" + csv::format_double(joules) + " J after "
                            + csv::format_double(readings_.back().second) + " J)");
        readings_.emplace_back(now, joules);
    }

    EnergyCounter counter_;
    std::mutex mutex_;
    std::condition_variable cv_;
    bool stop_ = false;
    std::exception_ptr error_;
    std::vector<std::pair<std::chrono::steady_clock::time_point, double>> readings_;
    std::thread thread_;
};

struct BenchResult
{
    std::string kernel;  ///< kernel id and parameters
    std::uint64_t options_priced = 0;
    double elapsed = 0;    ///< seconds
    double s_opt = 0;      ///< elapsed / options_priced
    double avg_power = 0;  ///< watts
    double j_opt = 0;      ///< avg_power * s_opt
};

struct BenchOptions
{
    double spot = 100.0;
    std::size_t repetitions = 1;
    std::size_t workers = 1;
    bool warm_up = true;
};

namespace detail {

inline void price_book(PricingKernel const& kernel, ContractBook const& book, double spot, std::size_t reps,
                       std::size_t workers)
{
    std::size_t const total = reps * book.size();
    if (workers <= 1)
    {
        for (std::size_t i = 0; i < total; ++i)
            kernel(book.at_spot(i % book.size(), spot));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
    {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < total; i = next++)
                kernel(book.at_spot(i % book.size(), spot));
        });
    }
    for (auto& t : pool)
        t.join();
}

} // namespace detail

/**
 * Prices the book `repetitions` times back to back on the monotonic clock
 * and converts the run into per-option time and energy. One untimed pass
 * runs first to warm caches.
 */
inline BenchResult bench_kernel(PricingKernel const& kernel, std::string kernel_id, ContractBook const& book,
                                PowerModel const& power, BenchOptions const& options)
{
    if (book.contracts.empty())
        throw std::invalid_argument("bench_kernel: empty contract book");
    if (options.repetitions * book.size() < 100)
        throw std::invalid_argument("bench_kernel: repetitions x book size must be >= 100");
    if (auto const* constant = std::get_if<ConstantPower>(&power); constant && !(constant->watts > 0))
        throw std::invalid_argument("bench_kernel: constant power must be positive");

    if (options.warm_up)
        detail::price_book(kernel, book, options.spot, 1, options.workers);

    std::unique_ptr<CounterPoller> poller;
    if (auto const* counter = std::get_if<EnergyCounter>(&power))
    {
        poller = std::make_unique<CounterPoller>(*counter);
        poller->start();
    }

    auto const start = std::chrono::steady_clock::now();
    detail::price_book(kernel, book, options.spot, options.repetitions, options.workers);
    double const elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    BenchResult result;
    result.kernel = std::move(kernel_id);
    result.options_priced = options.repetitions * book.size();
    result.elapsed = elapsed;
    result.s_opt = elapsed / static_cast<double>(result.options_priced);
    if (auto const* constant = std::get_if<ConstantPower>(&power))
        result.avg_power = constant->watts;
    else if (auto const* trace = std::get_if<PowerTrace>(&power))
        result.avg_power = average_power(*trace, elapsed);
    else
        result.avg_power = poller->stop();
    result.j_opt = result.avg_power * result.s_opt;
    return result;
}

inline BenchResult bench_kernel(KernelSpec const& spec, ContractBook const& book, PowerModel const& power,
                                BenchOptions const& options)
{
    return bench_kernel(make_kernel(spec), describe(spec), book, power, options);
}

inline PlatformRecord export_platform_record(BenchResult const& result, std::string name, std::string config,
                                             std::string vec_type)
{
    PlatformRecord record{std::move(name), std::move(config), std::move(vec_type), result.s_opt, result.j_opt};
    validate(record);
    return record;
}

} // namespace optpower

#endif // OPTPOWER_METRICS_HPP
