#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fieldforge/error.hpp"
#include "fieldforge/gibbs.hpp"
#include "fieldforge/model.hpp"

namespace fieldforge {

// Largest |alpha| the gain solver reports for candidates whose stationarity
// equation has no finite root.
inline constexpr double kAlphaBound = 50.0;

enum class GainStatus { ClosedForm, NewtonConverged, NoSolutionBoundary, ExcludedZeroSupport };

inline std::string_view to_string(GainStatus s) {
    switch (s) {
    case GainStatus::ClosedForm: return "closed-form";
    case GainStatus::NewtonConverged: return "newton-converged";
    case GainStatus::NoSolutionBoundary: return "no-solution-boundary";
    case GainStatus::ExcludedZeroSupport: return "excluded-zero-support";
    }
    return "unknown";
}

struct GainReport {
    std::optional<FeaturePattern> candidate;
    double empirical = 0.0; // p~[g]
    double alpha_hat = 0.0;
    double gain = 0.0;
    GainStatus status = GainStatus::ClosedForm;
    int iterations = 0;
};

/// G(alpha) = alpha p~[g] - log sum_k g_k e^{alpha k}.
inline double gain_curve(double empirical, const std::vector<double>& hist, double alpha) {
    if (alpha == 0.0)
        return 0.0; // the histogram sums to one
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < hist.size(); ++k)
        if (hist[k] > 0.0)
            m = std::max(m, std::log(hist[k]) + alpha * static_cast<double>(k));
    double s = 0.0;
    for (std::size_t k = 0; k < hist.size(); ++k)
        if (hist[k] > 0.0)
            s += std::exp(std::log(hist[k]) + alpha * static_cast<double>(k) - m);
    return alpha * empirical - (m + std::log(s));
}

inline double gain_curve(double empirical, const OccurrenceHistogram& hist, double alpha) {
    return gain_curve(empirical, hist.probs, alpha);
}

/// Mean and variance of k under the tilted histogram g_k e^{alpha k}.
inline std::pair<double, double> tilted_moments(const std::vector<double>& hist, double alpha) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < hist.size(); ++k)
        if (hist[k] > 0.0)
            m = std::max(m, std::log(hist[k]) + alpha * static_cast<double>(k));
    double z = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t k = 0; k < hist.size(); ++k) {
        if (hist[k] <= 0.0)
            continue;
        double w = std::exp(std::log(hist[k]) + alpha * static_cast<double>(k) - m);
        double kk = static_cast<double>(k);
        z += w;
        s1 += w * kk;
        s2 += w * kk * kk;
    }
    double mean = s1 / z;
    return {mean, std::max(0.0, s2 / z - mean * mean)};
}

inline double bernoulli_divergence(double p, double q) {
    double d = 0.0;
    if (p > 0.0)
        d += p * std::log(p / q);
    if (p < 1.0)
        d += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
    return d;
}

/// Closed-form gain of a binary candidate with p~[g] and model expectation q[g].
inline GainReport binary_gain(double empirical, double model) {
    if (!(model > 0.0 && model < 1.0))
        throw InvariantViolation("model expectation of a binary candidate must lie in (0, 1)");
    if (!(empirical >= 0.0 && empirical <= 1.0))
        throw InvariantViolation("empirical expectation of a binary candidate must lie in [0, 1]");
    GainReport r;
    r.empirical = empirical;
    r.gain = bernoulli_divergence(empirical, model);
    if (empirical == 0.0 || empirical == 1.0) {
        r.alpha_hat = empirical == 0.0 ? -std::numeric_limits<double>::infinity()
                                       : std::numeric_limits<double>::infinity();
        r.status = GainStatus::ExcludedZeroSupport;
        return r;
    }
    r.alpha_hat = std::log(empirical * (1.0 - model) / (model * (1.0 - empirical)));
    r.status = GainStatus::ClosedForm;
    return r;
}

struct GainSolverOptions {
    int max_iterations = 100;
    double residual_tolerance = 1e-10;
};

/// Solves p~[g] = sum k g_k b^k / sum g_k b^k for alpha = log b by safeguarded
/// Newton steps, then evaluates the gain at the root.
inline GainReport integer_gain(double empirical, const OccurrenceHistogram& hist, GainSolverOptions options = {}) {
    if (!(empirical >= 0.0))
        throw InvariantViolation("empirical expectation must be nonnegative");
    const auto& g = hist.probs;
    GainReport r;
    r.empirical = empirical;

    std::optional<std::size_t> k_min, k_max;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (g[k] > 0.0) {
            if (!k_min)
                k_min = k;
            k_max = k;
        }
    }
    if (!k_min)
        throw InvariantViolation("histogram has no mass");

    if (empirical == 0.0) {
        r.status = GainStatus::ExcludedZeroSupport;
        r.alpha_hat = -std::numeric_limits<double>::infinity();
        r.gain = g[0] > 0.0 ? -std::log(g[0]) : 0.0;
        return r;
    }
    if (*k_min == *k_max) {
        // g is constant under the model: no direction to tilt.
        r.status = GainStatus::ExcludedZeroSupport;
        r.alpha_hat = 0.0;
        r.gain = 0.0;
        return r;
    }
    const double lo_value = static_cast<double>(*k_min);
    const double hi_value = static_cast<double>(*k_max);
    if (empirical >= hi_value || empirical <= lo_value) {
        r.status = GainStatus::NoSolutionBoundary;
        r.alpha_hat = empirical >= hi_value ? kAlphaBound : -kAlphaBound;
        r.gain = gain_curve(empirical, g, r.alpha_hat);
        return r;
    }

    auto residual = [&](double a) { return tilted_moments(g, a).first - empirical; };
    double lo = -1.0, hi = 1.0;
    while (residual(lo) > 0.0)
        lo *= 2.0;
    while (residual(hi) < 0.0)
        hi *= 2.0;

    double alpha = 0.0;
    int it = 0;
    for (; it < options.max_iterations; ++it) {
        auto [mean, var] = tilted_moments(g, alpha);
        double res = mean - empirical;
        if (std::abs(res) <= options.residual_tolerance * 1e-2)
            break;
        if (res > 0.0)
            hi = std::min(hi, alpha);
        else
            lo = std::max(lo, alpha);
        double next = var > 0.0 ? alpha - res / var : 0.5 * (lo + hi);
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        if (next == alpha)
            break;
        alpha = next;
    }
    double final_residual = std::abs(residual(alpha));
    if (final_residual > options.residual_tolerance)
        throw ConvergenceError("gain solver residual " + std::to_string(final_residual));
    r.status = GainStatus::NewtonConverged;
    r.alpha_hat = alpha;
    r.iterations = it;
    r.gain = std::max(0.0, gain_curve(empirical, g, alpha));
    return r;
}

/// Sorted by gain, largest first. Gains equal to 1e-12 fall back to pattern
/// text order.
inline void sort_reports(std::vector<GainReport>& reports) {
    std::sort(reports.begin(), reports.end(), [](const GainReport& a, const GainReport& b) {
        return a.candidate->text() < b.candidate->text();
    });
    std::stable_sort(reports.begin(), reports.end(), [](const GainReport& a, const GainReport& b) {
        return std::llround(a.gain * 1e12) > std::llround(b.gain * 1e12);
    });
}

/// Evaluates every candidate against p~ and a histogram source. Candidates with
/// p~[g] = 0 (or constant under the model) are left out.
template <typename HistogramOf>
std::vector<GainReport> rank_candidates_with(const std::vector<FeaturePattern>& candidates,
                                             const EmpiricalDistribution& empirical, HistogramOf&& histogram_of) {
    std::vector<GainReport> reports;
    reports.reserve(candidates.size());
    for (const auto& g : candidates) {
        double e = empirical.expectation(g);
        if (e == 0.0)
            continue;
        GainReport r = integer_gain(e, histogram_of(g));
        if (r.status == GainStatus::ExcludedZeroSupport)
            continue;
        r.candidate = g;
        reports.push_back(std::move(r));
    }
    sort_reports(reports);
    return reports;
}

inline std::vector<GainReport> rank_candidates(const std::vector<FeaturePattern>& candidates,
                                               const SampleBatch& batch, const EmpiricalDistribution& empirical) {
    return rank_candidates_with(candidates, empirical,
                                [&](const FeaturePattern& g) { return estimate_histogram(batch, g); });
}

} // namespace fieldforge
