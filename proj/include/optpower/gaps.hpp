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

#ifndef OPTPOWER_GAPS_HPP
#define OPTPOWER_GAPS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/minima.hpp>

#include "optpower/csv.hpp"
#include "optpower/tick.hpp"

namespace optpower {

/// Inter-arrival gaps binned by floor(gap / bin_width).
struct GapHistogram
{
    double bin_width = 1.0;  ///< seconds
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;
};

enum class FitMethod { MaximumLikelihood, LeastSquares };

/// Which QoS curve a lookup reads.
enum class QosSource { Empirical, Fitted };

/**
 * QoS as a function of the time budget t: the fraction of gaps that are at
 * least t long, i.e. the cumulative frequency distribution reflected about
 * its midpoint.
 */
struct QosCurve
{
    double bin_width = 1.0;
    /// survival[i] = fraction of gaps >= i * bin_width; one trailing 0 past the largest gap.
    std::vector<double> survival;
    /// Poisson mean in bins; empty when the gaps cannot be fitted (fewer than
    /// two gaps, or every gap in bin 0).
    std::optional<double> fitted_lambda;
    std::uint64_t total_updates = 0;
};

inline std::int64_t bin_width_ns(double bin_width)
{
    if (!(bin_width > 0) || !std::isfinite(bin_width))
        throw std::invalid_argument("bin width must be positive");
    auto const ns = static_cast<std::int64_t>(std::llround(bin_width * 1e9));
    if (ns < 1)
        throw std::invalid_argument("bin width below 1 ns");
    return ns;
}

/// Histogram of raw gaps given in nanoseconds.
inline GapHistogram histogram_from_gaps(std::span<std::int64_t const> gaps_ns, double bin_width)
{
    std::int64_t const width = bin_width_ns(bin_width);
    GapHistogram hist;
    hist.bin_width = bin_width;
    for (std::int64_t const gap : gaps_ns)
    {
        if (gap < 0)
            throw std::invalid_argument("negative gap");
        auto const bin = static_cast<std::size_t>(gap / width);
        if (bin >= hist.counts.size())
            hist.counts.resize(bin + 1, 0);
        ++hist.counts[bin];
    }
    hist.total = gaps_ns.size();
    return hist;
}

inline std::vector<std::int64_t> tick_gaps_ns(std::span<Tick const> ticks)
{
    std::vector<std::int64_t> gaps;
    for (std::size_t k = 1; k < ticks.size(); ++k)
        gaps.push_back(ticks[k].timestamp_ns - ticks[k - 1].timestamp_ns);
    return gaps;
}

inline GapHistogram build_histogram(std::span<Tick const> ticks, double bin_width)
{
    if (ticks.size() < 2)
        throw std::invalid_argument("build_histogram: need at least 2 ticks");
    auto const gaps = tick_gaps_ns(ticks);
    return histogram_from_gaps(gaps, bin_width);
}

inline double mean_gap_seconds(std::span<Tick const> ticks)
{
    if (ticks.size() < 2)
        throw std::invalid_argument("mean_gap_seconds: need at least 2 ticks");
    return static_cast<double>(ticks.back().timestamp_ns - ticks.front().timestamp_ns) * 1e-9
           / static_cast<double>(ticks.size() - 1);
}

/// P(X >= bin) for X ~ Poisson(lambda).
inline double poisson_survival(std::size_t bin, double lambda)
{
    if (bin == 0)
        return 1.0;
    return boost::math::gamma_p(static_cast<double>(bin), lambda);
}

/// Closed-form survival e^{-t/mean} of exponential gaps, for comparison with the binned fit.
inline double exponential_survival(double t, double mean_gap)
{
    return std::exp(-t / mean_gap);
}

namespace detail {

inline std::vector<double> survival_of(GapHistogram const& hist)
{
    std::vector<double> survival(hist.counts.size() + 1, 0.0);
    std::uint64_t at_least = hist.total;
    for (std::size_t i = 0; i < hist.counts.size(); ++i)
    {
        survival[i] = static_cast<double>(at_least) / static_cast<double>(hist.total);
        at_least -= hist.counts[i];
    }
    return survival;
}

} // namespace detail

struct PoissonFit
{
    double lambda = 0;
    /// max_i |model(i) - empirical(i)| over the histogram's bins
    double max_deviation = 0;
};

/**
 * Fits a Poisson law to the binned gaps. The maximum-likelihood estimate is
 * the mean bin index; LeastSquares instead minimises the squared distance
 * between the model and empirical survival curves.
 */
inline PoissonFit fit_poisson_report(GapHistogram const& hist,
                                     FitMethod method = FitMethod::MaximumLikelihood)
{
    if (hist.total < 2)
        throw std::invalid_argument("fit_poisson: need at least 2 gaps");

    double weighted = 0;
    for (std::size_t i = 0; i < hist.counts.size(); ++i)
        weighted += static_cast<double>(i) * static_cast<double>(hist.counts[i]);
    if (weighted == 0)
        throw DataError("fit_poisson: degenerate histogram, every gap is in bin 0");

    auto const empirical = detail::survival_of(hist);
    auto const deviation = [&](double lambda) {
        double worst = 0;
        for (std::size_t i = 0; i < empirical.size(); ++i)
            worst = std::max(worst, std::abs(poisson_survival(i, lambda) - empirical[i]));
        return worst;
    };

    double lambda = weighted / static_cast<double>(hist.total);
    if (method == FitMethod::LeastSquares)
    {
        auto const sse = [&](double candidate) {
            double sum = 0;
            for (std::size_t i = 0; i < empirical.size(); ++i)
            {
                double const d = poisson_survival(i, candidate) - empirical[i];
                sum += d * d;
            }
            return sum;
        };
        double const upper = static_cast<double>(hist.counts.size()) + 1.0;
        lambda = boost::math::tools::brent_find_minima(sse, 1e-9, upper, 40).first;
    }
    return {lambda, deviation(lambda)};
}

inline double fit_poisson(GapHistogram const& hist, FitMethod method = FitMethod::MaximumLikelihood)
{
    return fit_poisson_report(hist, method).lambda;
}

/// Reflected CFD of the histogram, with the maximum-likelihood Poisson fit attached when one exists.
inline QosCurve empirical_qos(GapHistogram const& hist,
                              FitMethod method = FitMethod::MaximumLikelihood)
{
    if (hist.total < 1)
        throw std::invalid_argument("empirical_qos: empty histogram");
    QosCurve curve;
    curve.bin_width = hist.bin_width;
    curve.survival = detail::survival_of(hist);
    curve.total_updates = hist.total + 1;
    if (hist.total >= 2)
    {
        try
        {
            curve.fitted_lambda = fit_poisson(hist, method);
        }
        catch (DataError const&)
        {
        }
    }
    return curve;
}

/// QoS at bin index `bin` (time bin * bin_width).
inline double qos_at_bin(QosCurve const& curve, std::size_t bin, QosSource source = QosSource::Empirical)
{
    if (source == QosSource::Fitted)
    {
        if (!curve.fitted_lambda)
            throw std::logic_error("qos curve has no fitted model");
        return poisson_survival(bin, *curve.fitted_lambda);
    }
    return bin < curve.survival.size() ? curve.survival[bin] : 0.0;
}

/// QoS for a time budget of t seconds, resolved to the bin containing t.
inline double qos_at(QosCurve const& curve, double t, QosSource source = QosSource::Empirical)
{
    if (t < 0)
        return 1.0;
    auto const bin = static_cast<std::size_t>(std::floor(t / curve.bin_width + 1e-9));
    return qos_at_bin(curve, bin, source);
}

/**
 * Largest bin-edge time budget G with QoS(G) >= target_percent / 100.
 * A gap qualifies when it is at least G long.
 */
inline double gap_for_qos(QosCurve const& curve, double target_percent,
                          QosSource source = QosSource::Empirical)
{
    if (!(target_percent > 0) || target_percent > 100)
        throw std::invalid_argument("gap_for_qos: target must be in (0, 100]");
    double const target = target_percent / 100.0 - 1e-12;

    std::size_t bin = 0;
    if (source == QosSource::Empirical)
    {
        while (bin + 1 < curve.survival.size() && curve.survival[bin + 1] >= target)
            ++bin;
    }
    else
    {
        while (qos_at_bin(curve, bin + 1, source) >= target)
            ++bin;
    }
    return static_cast<double>(bin) * curve.bin_width;
}

/// Writes `bin_start_s,empirical_qos,fitted_qos`; fitted_qos is blank without a fit.
inline void write_qos_csv(QosCurve const& curve, std::ostream& out)
{
    out << "bin_start_s,empirical_qos,fitted_qos\n";
    for (std::size_t i = 0; i < curve.survival.size(); ++i)
    {
        out << csv::format_double(static_cast<double>(i) * curve.bin_width) << ','
            << csv::format_double(curve.survival[i]) << ',';
        if (curve.fitted_lambda)
            out << csv::format_double(poisson_survival(i, *curve.fitted_lambda));
        out << '\n';
    }
}

/**
 * Reads a curve written by write_qos_csv. Bin width comes from the spacing of
 * the first two rows; the fitted column is not refitted.
 */
inline QosCurve read_qos_csv(std::string const& path)
{
    QosCurve curve;
    std::vector<double> starts;
    csv::for_each_row(path, [&](auto const& fields, std::size_t line) {
        if (fields.size() < 2)
            throw DataError("expected bin_start_s,empirical_qos[,fitted_qos]", line);
        starts.push_back(csv::parse_double(fields[0], line, "bin_start_s"));
        double const qos = csv::parse_double(fields[1], line, "empirical_qos");
        if (qos < 0 || qos > 1)
            throw DataError("empirical_qos outside [0,1]", line);
        if (!curve.survival.empty() && qos > curve.survival.back())
            throw DataError("empirical_qos increases", line);
        curve.survival.push_back(qos);
    });
    if (curve.survival.empty())
        throw DataError("qos curve '" + path + "' is empty");
    curve.bin_width = starts.size() >= 2 ? starts[1] - starts[0] : 1.0;
    if (!(curve.bin_width > 0))
        throw DataError("qos curve bin starts must increase");
    return curve;
}

} // namespace optpower

#endif // OPTPOWER_GAPS_HPP
