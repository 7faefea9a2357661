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

#ifndef OPTPOWER_FEED_HPP
#define OPTPOWER_FEED_HPP

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <system_error>
#include <thread>
#include <utility>
#include <vector>

#include "optpower/kernel.hpp"
#include "optpower/tick.hpp"

namespace optpower {

/// Socket-level failure. tick_index() names the tick being sent, when there was one.
class FeedError : public std::runtime_error
{
public:
    FeedError(std::string const& what, std::optional<std::size_t> tick_index = std::nullopt)
        : std::runtime_error(tick_index ? what + " (tick " + std::to_string(*tick_index) + ")" : what)
        , tick_index_(tick_index)
    {
    }

    std::optional<std::size_t> tick_index() const noexcept { return tick_index_; }

private:
    std::optional<std::size_t> tick_index_;
};

struct MulticastGroup
{
    std::string address;
    std::uint16_t port = 0;

    std::string to_string() const { return address + ":" + std::to_string(port); }
};

/// Parses "A.B.C.D:port"; the address must be IPv4 multicast (224.0.0.0/4).
inline MulticastGroup parse_group(std::string_view text)
{
    auto const colon = text.rfind(':');
    if (colon == std::string_view::npos)
        throw std::invalid_argument("multicast group must be ADDRESS:PORT");
    MulticastGroup group{std::string(text.substr(0, colon)), 0};
    std::int64_t port = 0;
    if (!csv::try_parse(text.substr(colon + 1), port) || port < 1 || port > 65535)
        throw std::invalid_argument("bad port in '" + std::string(text) + "'");
    group.port = static_cast<std::uint16_t>(port);

    in_addr addr{};
    if (inet_pton(AF_INET, group.address.c_str(), &addr) != 1)
        throw std::invalid_argument("bad IPv4 address '" + group.address + "'");
    if ((ntohl(addr.s_addr) >> 28) != 0xE)
        throw std::invalid_argument("'" + group.address + "' is not a multicast address");
    return group;
}

namespace detail {

[[noreturn]] inline void throw_errno(std::string const& what, std::optional<std::size_t> tick = std::nullopt)
{
    throw FeedError(what + ": " + std::strerror(errno), tick);
}

inline in_addr to_in_addr(std::string const& address)
{
    in_addr addr{};
    if (inet_pton(AF_INET, address.c_str(), &addr) != 1)
        throw std::invalid_argument("bad IPv4 address '" + address + "'");
    return addr;
}

/// Owning UDP socket descriptor.
class UdpSocket
{
public:
    UdpSocket() : fd_(::socket(AF_INET, SOCK_DGRAM, IPPROTO_UDP))
    {
        if (fd_ < 0)
            throw_errno("socket");
    }
    UdpSocket(UdpSocket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    UdpSocket& operator=(UdpSocket&& other) noexcept
    {
        if (this != &other)
        {
            reset();
            fd_ = std::exchange(other.fd_, -1);
        }
        return *this;
    }
    UdpSocket(UdpSocket const&) = delete;
    UdpSocket& operator=(UdpSocket const&) = delete;
    ~UdpSocket() { reset(); }

    int fd() const noexcept { return fd_; }

    template <typename T>
    void set_option(int level, int name, T const& value, char const* what)
    {
        if (::setsockopt(fd_, level, name, &value, sizeof value) != 0)
            throw_errno(what);
    }

private:
    void reset() noexcept
    {
        if (fd_ >= 0)
            ::close(fd_);
        fd_ = -1;
    }

    int fd_;
};

} // namespace detail

struct ReplayOptions
{
    double scale = 1.0;                   ///< send gap = scale * original gap
    std::string interface = "0.0.0.0";    ///< outgoing multicast interface
    int ttl = 1;
    bool loopback = true;
};

struct ReplayReport
{
    std::size_t datagrams_sent = 0;
    std::chrono::nanoseconds duration{0};
    /// Send instant of each datagram, relative to the first send.
    std::vector<std::chrono::nanoseconds> send_offsets;
};

/**
 * Sends one datagram per tick to the group. Tick k leaves at
 * start + scale * (t_k - t_0) on the monotonic clock, so scheduling error
 * does not accumulate across the trace.
 */
inline ReplayReport replay(std::span<Tick const> ticks, MulticastGroup const& group,
                           ReplayOptions const& options = {})
{
    if (!(options.scale > 0))
        throw std::invalid_argument("replay: scale must be positive");

    detail::UdpSocket sock;
    sock.set_option(IPPROTO_IP, IP_MULTICAST_TTL, static_cast<unsigned char>(options.ttl), "IP_MULTICAST_TTL");
    sock.set_option(IPPROTO_IP, IP_MULTICAST_LOOP, static_cast<unsigned char>(options.loopback ? 1 : 0),
                    "IP_MULTICAST_LOOP");
    if (options.interface != "0.0.0.0")
        sock.set_option(IPPROTO_IP, IP_MULTICAST_IF, detail::to_in_addr(options.interface), "IP_MULTICAST_IF");

    sockaddr_in dest{};
    dest.sin_family = AF_INET;
    dest.sin_port = htons(group.port);
    dest.sin_addr = detail::to_in_addr(group.address);

    using clock = std::chrono::steady_clock;
    ReplayReport report;
    report.send_offsets.reserve(ticks.size());
    auto const start = clock::now();
    for (std::size_t k = 0; k < ticks.size(); ++k)
    {
        double const offset_ns =
            options.scale * static_cast<double>(ticks[k].timestamp_ns - ticks.front().timestamp_ns);
        auto const due = start + std::chrono::nanoseconds(static_cast<std::int64_t>(offset_ns));
        std::this_thread::sleep_until(due);

        std::string const payload = encode_tick(ticks[k]);
        auto const sent_at = clock::now();
        ssize_t const n = ::sendto(sock.fd(), payload.data(), payload.size(), 0,
                                   reinterpret_cast<sockaddr const*>(&dest), sizeof dest);
        if (n < 0 || static_cast<std::size_t>(n) != payload.size())
            detail::throw_errno("sendto " + group.to_string(), k);
        report.send_offsets.push_back(sent_at - start);
        ++report.datagrams_sent;
    }
    report.duration = clock::now() - start;
    return report;
}

/// Socket joined to a multicast group.
class MulticastReceiver
{
public:
    explicit MulticastReceiver(MulticastGroup const& group, std::string const& interface = "0.0.0.0")
    {
        int const on = 1;
        sock_.set_option(SOL_SOCKET, SO_REUSEADDR, on, "SO_REUSEADDR");

        sockaddr_in local{};
        local.sin_family = AF_INET;
        local.sin_port = htons(group.port);
        local.sin_addr = detail::to_in_addr(group.address);
        if (::bind(sock_.fd(), reinterpret_cast<sockaddr const*>(&local), sizeof local) != 0)
            detail::throw_errno("bind " + group.to_string());

        ip_mreq membership{};
        membership.imr_multiaddr = detail::to_in_addr(group.address);
        membership.imr_interface = detail::to_in_addr(interface);
        sock_.set_option(IPPROTO_IP, IP_ADD_MEMBERSHIP, membership, "IP_ADD_MEMBERSHIP");
    }

    /// Next datagram, or nullopt once `timeout` passes without one.
    std::optional<std::string> receive(std::chrono::milliseconds timeout)
    {
        pollfd pfd{sock_.fd(), POLLIN, 0};
        int const ready = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
        if (ready < 0)
        {
            if (errno == EINTR)
                return std::nullopt;
            detail::throw_errno("poll");
        }
        if (ready == 0)
            return std::nullopt;

        char buf[2048];
        ssize_t const n = ::recv(sock_.fd(), buf, sizeof buf, 0);
        if (n < 0)
            detail::throw_errno("recv");
        return std::string(buf, static_cast<std::size_t>(n));
    }

private:
    detail::UdpSocket sock_;
};

/**
 * Counters for one consumer session.
 *
 * A triggering update is a tick whose price differs from the previous one
 * (the first tick always triggers). Each starts a batch that prices the whole
 * book; the batch is abandoned if the next triggering update arrives first.
 * Batch-level QoS is priced_batches / total_updates. Option-level QoS counts
 * options finished before preemption as successful.
 */
struct SessionStats
{
    std::uint64_t total_updates = 0;
    std::uint64_t priced_batches = 0;
    std::uint64_t abandoned_batches = 0;
    std::uint64_t options_requested = 0;
    std::uint64_t options_priced = 0;
    std::uint64_t options_abandoned = 0;
    std::uint64_t datagrams_received = 0;
    std::uint64_t malformed_datagrams = 0;
    std::uint64_t ignored_ticks = 0;  ///< unchanged price or other symbol
    std::vector<double> batch_seconds;  ///< wall time of each completed batch

    /// nullopt when nothing triggered.
    std::optional<double> measured_qos() const
    {
        if (total_updates == 0)
            return std::nullopt;
        return static_cast<double>(priced_batches) / static_cast<double>(total_updates);
    }

    std::optional<double> option_qos() const
    {
        if (options_requested == 0)
            return std::nullopt;
        return static_cast<double>(options_priced) / static_cast<double>(options_requested);
    }
};

/**
 * Prices the book on every price change using a pool of workers.
 *
 * on_tick() is called from a single receive loop. Preemption is cooperative:
 * workers check the cancellation flag between options, so an option that is
 * already running completes but no longer counts.
 */
class PricingSession
{
public:
    PricingSession(ContractBook book, PricingKernel kernel, std::size_t workers = 1)
        : book_(std::move(book)), kernel_(std::move(kernel))
    {
        if (book_.contracts.empty())
            throw std::invalid_argument("PricingSession: empty contract book");
        if (workers < 1)
            throw std::invalid_argument("PricingSession: need at least one worker");
        for (std::size_t w = 0; w < workers; ++w)
            workers_.emplace_back([this] { work(); });
    }

    PricingSession(PricingSession const&) = delete;
    PricingSession& operator=(PricingSession const&) = delete;

    ~PricingSession() { stop(); }

    void on_tick(Tick const& tick)
    {
        std::lock_guard lock(mutex_);
        if ((!book_.symbol.empty() && tick.symbol != book_.symbol) || (last_price_ && *last_price_ == tick.price))
        {
            ++stats_.ignored_ticks;
            return;
        }
        last_price_ = tick.price;
        ++stats_.total_updates;
        stats_.options_requested += book_.size();
        preempt_locked();

        current_ = std::make_shared<Batch>();
        current_->spot = tick.price;
        current_->started = std::chrono::steady_clock::now();
        work_cv_.notify_all();
    }

    void note_datagram(bool malformed)
    {
        std::lock_guard lock(mutex_);
        ++stats_.datagrams_received;
        if (malformed)
            ++stats_.malformed_datagrams;
    }

    /// Waits for the in-flight batch, stops the workers and returns the totals.
    SessionStats finish()
    {
        {
            std::unique_lock lock(mutex_);
            done_cv_.wait(lock, [this] { return !current_ || current_->complete; });
        }
        stop();
        std::lock_guard lock(mutex_);
        return stats_;
    }

private:
    struct Batch
    {
        double spot = 0;
        std::size_t next = 0;
        std::size_t priced = 0;
        bool cancelled = false;
        bool complete = false;
        std::chrono::steady_clock::time_point started;
    };

    void preempt_locked()
    {
        if (!current_ || current_->complete)
            return;
        current_->cancelled = true;
        ++stats_.abandoned_batches;
        stats_.options_priced += current_->priced;
        stats_.options_abandoned += book_.size() - current_->priced;
    }

    void work()
    {
        std::unique_lock lock(mutex_);
        for (;;)
        {
            work_cv_.wait(lock, [this] {
                return stopping_ || (current_ && !current_->cancelled && current_->next < book_.size());
            });
            if (stopping_)
                return;

            std::shared_ptr<Batch> batch = current_;
            std::size_t const index = batch->next++;
            OptionContract const contract = book_.at_spot(index, batch->spot);
            lock.unlock();
            kernel_(contract);
            lock.lock();

            if (batch->cancelled)
                continue;
            if (++batch->priced == book_.size())
            {
                batch->complete = true;
                ++stats_.priced_batches;
                stats_.options_priced += batch->priced;
                stats_.batch_seconds.push_back(
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - batch->started).count());
                done_cv_.notify_all();
            }
        }
    }

    void stop()
    {
        {
            std::lock_guard lock(mutex_);
            stopping_ = true;
        }
        work_cv_.notify_all();
        for (auto& t : workers_)
        {
            if (t.joinable())
                t.join();
        }
    }

    ContractBook book_;
    PricingKernel kernel_;
    std::mutex mutex_;
    std::condition_variable work_cv_;
    std::condition_variable done_cv_;
    std::shared_ptr<Batch> current_;
    std::optional<double> last_price_;
    bool stopping_ = false;
    SessionStats stats_;
    std::vector<std::thread> workers_;
};

struct ConsumeOptions
{
    std::size_t workers = 1;
    /// Stop after this many well-formed ticks.
    std::optional<std::uint64_t> max_ticks;
    /// Stop once this much time has passed since the receiver started.
    std::optional<std::chrono::milliseconds> duration;
    /// Stop after this long without a datagram.
    std::chrono::milliseconds idle_timeout{5000};
};

/// Receive loop over an already-joined receiver.
inline SessionStats consume(MulticastReceiver& receiver, ContractBook book, PricingKernel kernel,
                            ConsumeOptions const& options = {})
{
    using clock = std::chrono::steady_clock;
    PricingSession session(std::move(book), std::move(kernel), options.workers);
    auto const start = clock::now();
    std::uint64_t ticks = 0;
    for (;;)
    {
        if (options.max_ticks && ticks >= *options.max_ticks)
            break;
        auto wait = options.idle_timeout;
        if (options.duration)
        {
            auto const left = std::chrono::duration_cast<std::chrono::milliseconds>(
                *options.duration - (clock::now() - start));
            if (left.count() <= 0)
                break;
            wait = std::min(wait, left);
        }
        auto const payload = receiver.receive(wait);
        if (!payload)
        {
            if (options.duration && clock::now() - start < *options.duration)
                continue;
            break;
        }
        auto const tick = decode_tick(*payload);
        session.note_datagram(!tick);
        if (tick)
        {
            ++ticks;
            session.on_tick(*tick);
        }
    }
    return session.finish();
}

inline SessionStats consume(MulticastGroup const& group, ContractBook book, PricingKernel kernel,
                            ConsumeOptions const& options = {}, std::string const& interface = "0.0.0.0")
{
    MulticastReceiver receiver(group, interface);
    return consume(receiver, std::move(book), std::move(kernel), options);
}

/**
 * Virtual-time model of a session: every option takes `per_option_seconds`
 * and ticks arrive exactly at their trace timestamps. A batch on W workers
 * needs ceil(N_opt / W) option slots; it completes when the next triggering
 * update is at least that far away.
 */
inline SessionStats simulate_session(std::span<Tick const> ticks, std::size_t n_opt, double per_option_seconds,
                                     std::size_t workers = 1, std::string const& symbol = {})
{
    if (n_opt < 1 || workers < 1)
        throw std::invalid_argument("simulate_session: n_opt and workers must be >= 1");

    std::vector<std::int64_t> triggers;
    SessionStats stats;
    std::optional<double> last_price;
    for (auto const& tick : ticks)
    {
        if ((!symbol.empty() && tick.symbol != symbol) || (last_price && *last_price == tick.price))
        {
            ++stats.ignored_ticks;
            continue;
        }
        last_price = tick.price;
        triggers.push_back(tick.timestamp_ns);
    }

    std::size_t const slots = (n_opt + workers - 1) / workers;
    double const batch_seconds = static_cast<double>(slots) * per_option_seconds;
    for (std::size_t k = 0; k < triggers.size(); ++k)
    {
        ++stats.total_updates;
        stats.options_requested += n_opt;
        bool const last = k + 1 == triggers.size();
        double const window = last ? batch_seconds : static_cast<double>(triggers[k + 1] - triggers[k]) * 1e-9;
        if (window >= batch_seconds)
        {
            ++stats.priced_batches;
            stats.options_priced += n_opt;
            stats.batch_seconds.push_back(batch_seconds);
            continue;
        }
        ++stats.abandoned_batches;
        auto const rounds = per_option_seconds > 0 ? static_cast<std::size_t>(window / per_option_seconds) : slots;
        std::size_t const done = std::min(n_opt, rounds * workers);
        stats.options_priced += done;
        stats.options_abandoned += n_opt - done;
    }
    return stats;
}

} // namespace optpower

#endif // OPTPOWER_FEED_HPP
