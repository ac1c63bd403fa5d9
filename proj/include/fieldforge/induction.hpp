#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fieldforge/alphabet.hpp"
#include "fieldforge/error.hpp"
#include "fieldforge/exact.hpp"
#include "fieldforge/gain.hpp"
#include "fieldforge/gibbs.hpp"
#include "fieldforge/iis.hpp"
#include "fieldforge/model.hpp"
#include "fieldforge/rng.hpp"
#include "fieldforge/spelling.hpp"

namespace fieldforge {

inline constexpr double kDefaultGainThreshold = 1e-4;

enum class EstimationMode { Exact, MonteCarlo };

struct InductionConfig {
    std::size_t max_features = 10;
    std::size_t samples = kDefaultSamples;
    std::size_t burn_in = kDefaultBurnIn;
    double gain_threshold = kDefaultGainThreshold;
    EstimationMode mode = EstimationMode::MonteCarlo;
    std::optional<double> tolerance;
    std::size_t max_iterations = kDefaultMaxIterations;
    Alphabet alphabet = Alphabet::printable_ascii();
    std::uint64_t seed = 0;
    std::string tie_break = "lexicographic";

    void validate() const {
        if (max_features < 1)
            throw InvariantViolation("max_features must be at least 1");
        if (samples < 1)
            throw InvariantViolation("samples must be at least 1");
        if (tie_break != "lexicographic")
            throw InvariantViolation("unsupported tie-break policy " + tie_break);
    }
};

struct InductionRecord {
    std::size_t iteration = 0;
    std::string feature;
    double alpha_hat = 0.0;
    double gain = 0.0;
    double divergence = 0.0;     // after retraining
    bool divergence_exact = false; // otherwise previous estimate minus gain
    std::size_t candidates = 0;
    std::size_t iis_iterations = 0;
    double wall_seconds = 0.0;
};

struct InductionLog {
    std::vector<InductionRecord> records;
    bool complete = false; // stopped because no candidate cleared the gain threshold
};

/// Atoms, plus every atom concatenated before or after an active feature.
/// Patterns that break the grammar and patterns already active are dropped.
inline std::vector<FeaturePattern> candidate_set(const std::vector<FeaturePattern>& active,
                                                 const std::vector<FeaturePattern>& atoms) {
    std::set<FeaturePattern> out(atoms.begin(), atoms.end());
    for (const auto& s : active) {
        for (const auto& a : atoms) {
            if (auto left = concatenate(a, s))
                out.insert(*left);
            if (auto right = concatenate(s, a))
                out.insert(*right);
        }
    }
    for (const auto& s : active)
        out.erase(s);
    return {out.begin(), out.end()};
}

inline FieldModel uniform_model(const EmpiricalDistribution& empirical) {
    return FieldModel({}, {}, empirical.length_marginal());
}

struct StepResult {
    FieldModel model;
    std::optional<InductionRecord> record; // empty when induction is complete
    std::vector<GainReport> ranking;
};

/// Candidates for the next feature ranked by estimated gain. Exact mode
/// enumerates strings up to the longest training word.
inline std::vector<GainReport> rank_next(const FieldModel& model, const EmpiricalDistribution& empirical,
                                         const InductionConfig& config, std::size_t iteration = 0) {
    auto candidates = candidate_set(model.features, atomic_features(config.alphabet));
    if (config.mode == EstimationMode::Exact) {
        ExactTable table(EnumerableSpace{config.alphabet, empirical.max_length()}, model.features);
        auto q = table.probabilities(model);
        return rank_candidates_with(candidates, empirical, [&](const FeaturePattern& g) {
            OccurrenceHistogram h;
            h.probs = table.histogram(q, g);
            return h;
        });
    }
    auto batch = sample_batch(model, config.alphabet, config.samples, config.burn_in,
                              derive_seed(config.seed, streams::gain_batch, iteration));
    return rank_candidates(candidates, batch, empirical);
}

/// One round of feature selection followed by retraining. `iteration` selects
/// the random substreams.
inline StepResult induction_step(const FieldModel& model, const EmpiricalDistribution& empirical,
                                 const InductionConfig& config, std::size_t iteration = 0) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();
    StepResult result{model, std::nullopt, rank_next(model, empirical, config, iteration)};
    std::optional<EnumerableSpace> space;
    if (config.mode == EstimationMode::Exact)
        space = EnumerableSpace{config.alphabet, empirical.max_length()};

    if (result.ranking.empty() || result.ranking.front().gain < config.gain_threshold)
        return result;

    const GainReport& best = result.ranking.front();
    // Warm start from the tilted model when the gain equation had a root.
    double alpha = best.status == GainStatus::NoSolutionBoundary ? 0.0 : best.alpha_hat;
    FieldModel start = tilt(model, *best.candidate, alpha);

    TrainOptions options;
    options.tolerance = config.tolerance;
    options.max_iterations = config.max_iterations;
    TrainMode mode = space ? TrainMode{ExactMode{*space}}
                           : TrainMode{MonteCarloMode{config.alphabet, config.samples, config.burn_in,
                                                      derive_seed(config.seed, streams::iis_batch, iteration)}};
    auto trained = train(start, empirical, mode, options);

    InductionRecord record;
    record.iteration = iteration;
    record.feature = best.candidate->text();
    record.alpha_hat = best.alpha_hat;
    record.gain = best.gain;
    record.candidates = candidate_set(model.features, atomic_features(config.alphabet)).size();
    record.iis_iterations = trained.state.iteration;
    if (space) {
        record.divergence = trained.state.divergence_history.back();
        record.divergence_exact = true;
    }
    record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.model = std::move(trained.model);
    result.record = record;
    return result;
}

/// D(p~ || uniform field with p~'s length marginal), exact.
inline double uniform_divergence(const EmpiricalDistribution& empirical, const Alphabet& alphabet) {
    auto lengths = empirical.length_marginal();
    double d = empirical.neg_entropy();
    const double log_a = std::log(static_cast<double>(alphabet.size()));
    for (std::size_t i = 0; i < empirical.size(); ++i) {
        const auto l = empirical.word(i).size();
        d -= empirical.prob(i) * (std::log(lengths(l)) - static_cast<double>(l) * log_a);
    }
    return d;
}

/// Greedy induction from the uniform field until max_features are active or
/// no candidate clears the gain threshold.
inline std::pair<FieldModel, InductionLog> run_induction(
    const EmpiricalDistribution& empirical, const InductionConfig& config,
    const std::function<void(const InductionRecord&)>& on_record = {}) {
    config.validate();
    if (empirical.size() == 0)
        throw DataError("corpus is empty");
    for (std::size_t i = 0; i < empirical.size(); ++i)
        if (!config.alphabet.contains_all(empirical.word(i)))
            throw AbsoluteContinuityError("training word '" + empirical.word(i) + "' uses characters outside the alphabet");

    FieldModel model = uniform_model(empirical);
    InductionLog log;
    double divergence = uniform_divergence(empirical, config.alphabet);
    for (std::size_t n = 0; n < config.max_features; ++n) {
        auto step = induction_step(model, empirical, config, n);
        if (!step.record) {
            log.complete = true;
            break;
        }
        if (!step.record->divergence_exact)
            step.record->divergence = divergence - step.record->gain;
        divergence = step.record->divergence;
        model = std::move(step.model);
        if (on_record)
            on_record(*step.record);
        log.records.push_back(std::move(*step.record));
    }
    return {model, log};
}

} // namespace fieldforge
