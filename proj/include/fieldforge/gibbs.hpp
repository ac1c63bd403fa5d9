#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fieldforge/alphabet.hpp"
#include "fieldforge/error.hpp"
#include "fieldforge/model.hpp"
#include "fieldforge/rng.hpp"

namespace fieldforge {

inline constexpr std::size_t kDefaultSamples = 10000;
inline constexpr std::size_t kDefaultBurnIn = 20;

/// FNV-1a over the serialized content of a model.
inline std::uint64_t fingerprint(const FieldModel& model) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (std::size_t i = 0; i < model.features.size(); ++i) {
        mix(model.features[i].text().data(), model.features[i].text().size());
        auto bits = std::bit_cast<std::uint64_t>(model.weights[i]);
        mix(&bits, sizeof bits);
    }
    for (double p : model.length_dist.probs()) {
        auto bits = std::bit_cast<std::uint64_t>(p);
        mix(&bits, sizeof bits);
    }
    return h;
}

/// The model's features rewritten for fast single-site score differences.
class SiteScorer {
public:
    SiteScorer(const FieldModel& model, const Alphabet& alphabet) : alphabet_size_(alphabet.size()) {
        for (std::size_t i = 0; i < model.features.size(); ++i) {
            const auto& pattern = model.features[i];
            if (pattern.size() == 1 && pattern.has_label())
                continue; // constant within a length
            Compiled c;
            c.weight = model.weights[i];
            c.shape = pattern.starts_with_label() ? Shape::LabelFirst
                      : pattern.ends_with_label() ? Shape::LabelLast
                                                  : Shape::Interior;
            c.symbols = pattern.symbols();
            for (const auto& s : c.symbols) {
                std::vector<std::uint16_t> matched;
                for (std::size_t a = 0; a < alphabet.size(); ++a)
                    if (s.matches_char(alphabet[a]))
                        matched.push_back(static_cast<std::uint16_t>(a));
                c.matched.push_back(std::move(matched));
            }
            c.index = compiled_.size();
            compiled_.push_back(std::move(c));
        }
    }

    std::size_t alphabet_size() const noexcept { return alphabet_size_; }

    // delta[a] = log-score contribution of every window through `site` when
    // the site holds alphabet[a]; the other sites are read from `word`.
    void site_scores(std::string_view word, std::size_t site, std::span<double> delta) const {
        std::fill(delta.begin(), delta.end(), 0.0);
        visit_windows(word, site, [&](const Compiled& c, std::size_t j) {
            for (auto a : c.matched[j])
                delta[a] += c.weight;
        });
    }

    // Sparse form of exp(scale * site_scores): characters no window touches
    // keep factor 1 and are left out of `touched`. On entry `factors` holds 1
    // and `marked` holds 0 for every character; the caller resets both.
    void site_factors(std::string_view word, std::size_t site, std::span<const double> feature_factors,
                      std::span<double> factors, std::span<std::uint8_t> marked,
                      std::vector<std::uint16_t>& touched) const {
        visit_windows(word, site, [&](const Compiled& c, std::size_t j) {
            const double f = feature_factors[c.index];
            for (auto a : c.matched[j]) {
                if (!marked[a]) {
                    marked[a] = 1;
                    touched.push_back(a);
                }
                factors[a] *= f;
            }
        });
    }

    std::vector<double> feature_factors(double scale) const {
        std::vector<double> f(compiled_.size());
        for (std::size_t i = 0; i < compiled_.size(); ++i)
            f[i] = std::exp(scale * compiled_[i].weight);
        return f;
    }

private:
    enum class Shape { Interior, LabelFirst, LabelLast };
    struct Compiled {
        std::vector<ExtendedSymbol> symbols;
        std::vector<std::vector<std::uint16_t>> matched;
        double weight = 0.0;
        Shape shape = Shape::Interior;
        std::size_t index = 0; // position in compiled_
    };

    // Calls fn(feature, j) for every window through `site` whose other
    // symbols all match, where j is the symbol that lands on `site`.
    template <typename Fn>
    void visit_windows(std::string_view word, std::size_t site, Fn&& fn) const {
        const std::size_t l = word.size();
        for (const auto& c : compiled_) {
            const std::size_t k = c.symbols.size();
            switch (c.shape) {
            case Shape::Interior:
                if (k > l)
                    break;
                for (std::size_t j = 0; j < k; ++j) {
                    if (site < j || site - j + k > l)
                        continue;
                    if (others_match(c, word, site - j, 0, j))
                        fn(c, j);
                }
                break;
            case Shape::LabelFirst:
                // symbol t >= 1 sits on word[t - 1]
                if (k - 1 > l || site + 1 >= k || !c.symbols[0].matches_length(l))
                    break;
                if (others_match(c, word, 0, 1, site + 1))
                    fn(c, site + 1);
                break;
            case Shape::LabelLast: {
                // symbol t <= k - 2 sits on word[l - k + 1 + t]
                if (k - 1 > l || !c.symbols[k - 1].matches_length(l))
                    break;
                const std::size_t start = l - (k - 1);
                if (site < start)
                    break;
                if (others_match(c, word, start, 0, site - start))
                    fn(c, site - start);
                break;
            }
            }
        }
    }

    // Character symbols t (t >= first) sit on word[start + t - first]; the
    // symbol at index `skip` and any label are not checked.
    static bool others_match(const Compiled& c, std::string_view word, std::size_t start, std::size_t first,
                             std::size_t skip) {
        for (std::size_t t = first; t < c.symbols.size(); ++t) {
            if (t == skip || c.symbols[t].on_length_vertex())
                continue;
            if (!c.symbols[t].matches_char(word[start + t - first]))
                return false;
        }
        return true;
    }

    std::vector<Compiled> compiled_;
    std::size_t alphabet_size_;
};

/// P(w_site = c | rest) for every c in the alphabet.
inline std::vector<double> conditional_distribution(const FieldModel& model, const Alphabet& alphabet,
                                                    std::string_view config, std::size_t site) {
    if (site >= config.size())
        throw InvariantViolation("site " + std::to_string(site) + " is the length vertex or out of range");
    SiteScorer scorer(model, alphabet);
    std::vector<double> p(alphabet.size());
    scorer.site_scores(config, site, p);
    double m = *std::max_element(p.begin(), p.end());
    double z = 0.0;
    for (double& x : p)
        z += (x = std::exp(x - m));
    for (double& x : p)
        x /= z;
    return p;
}

namespace detail {

inline std::size_t draw_length(const LengthDistribution& lengths, Engine& engine) {
    double u = uniform01(engine);
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t l = 0; l < lengths.probs().size(); ++l) {
        if (lengths(l) <= 0.0)
            continue;
        acc += lengths(l);
        last = l;
        if (u < acc)
            return l;
    }
    return last;
}

// Draws one character for a site. Untouched characters share weight 1.
class SiteSampler {
public:
    explicit SiteSampler(std::size_t alphabet_size)
        : factors_(alphabet_size, 1.0), marked_(alphabet_size, 0), scores_(alphabet_size) {}

    std::size_t draw(const SiteScorer& scorer, std::string_view word, std::size_t site,
                     std::span<const double> feature_factors, double beta, Engine& engine) {
        const std::size_t size = factors_.size();
        touched_.clear();
        scorer.site_factors(word, site, feature_factors, factors_, marked_, touched_);

        bool in_range = true;
        double z = static_cast<double>(size - touched_.size());
        for (auto a : touched_) {
            double f = factors_[a];
            in_range = in_range && f >= 1e-290 && f <= 1e290;
            z += f;
        }
        const double u = uniform01(engine);
        std::size_t choice = size;
        if (in_range) {
            double rest = u * z;
            for (auto a : touched_) {
                rest -= factors_[a];
                if (rest < 0.0) {
                    choice = a;
                    break;
                }
            }
            if (choice == size) {
                // rest-th untouched character
                auto r = static_cast<std::size_t>(std::max(rest, 0.0));
                r = std::min(r, size - touched_.size() - 1);
                for (choice = 0; choice < size; ++choice) {
                    if (marked_[choice])
                        continue;
                    if (r == 0)
                        break;
                    --r;
                }
            }
        } else {
            scorer.site_scores(word, site, scores_);
            double m = *std::max_element(scores_.begin(), scores_.end());
            double total = 0.0;
            for (double& x : scores_)
                total += (x = std::exp(beta * (x - m)));
            double rest = u * total;
            choice = 0;
            for (; choice + 1 < size; ++choice) {
                rest -= scores_[choice];
                if (rest < 0.0)
                    break;
            }
        }
        for (auto a : touched_) {
            factors_[a] = 1.0;
            marked_[a] = 0;
        }
        return choice;
    }

private:
    std::vector<double> factors_;
    std::vector<std::uint8_t> marked_;
    std::vector<double> scores_;
    std::vector<std::uint16_t> touched_;
};

// One chain at a fixed length; `inverse_temperature(sweep)` scales weights.
template <typename InvTemp>
std::string run_chain(const SiteScorer& scorer, const Alphabet& alphabet, std::size_t length, std::size_t sweeps,
                      Engine& engine, InvTemp&& inverse_temperature) {
    std::string word(length, alphabet[0]);
    for (auto& ch : word)
        ch = alphabet[uniform_index(engine, alphabet.size())];
    SiteSampler sampler(alphabet.size());
    std::vector<double> factors;
    double factors_beta = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
        const double beta = inverse_temperature(sweep);
        if (beta != factors_beta) {
            factors = scorer.feature_factors(beta);
            factors_beta = beta;
        }
        for (std::size_t site = 0; site < length; ++site)
            word[site] = alphabet[sampler.draw(scorer, word, site, factors, beta, engine)];
    }
    return word;
}

} // namespace detail

/// Configurations drawn by independent Gibbs chains. Immutable.
class SampleBatch {
public:
    SampleBatch(std::vector<Configuration> configs, std::uint64_t seed, std::size_t sweeps, std::uint64_t model_fingerprint)
        : configs_(std::move(configs)), seed_(seed), sweeps_(sweeps), fingerprint_(model_fingerprint) {}

    const std::vector<Configuration>& configs() const noexcept { return configs_; }
    std::size_t size() const noexcept { return configs_.size(); }
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t sweeps() const noexcept { return sweeps_; }
    std::uint64_t model_fingerprint() const noexcept { return fingerprint_; }

private:
    std::vector<Configuration> configs_;
    std::uint64_t seed_;
    std::size_t sweeps_;
    std::uint64_t fingerprint_;
};

// Chain i uses derive_seed(seed, streams::chains, i), so a batch can be split
// across workers without changing its contents.
inline SampleBatch sample_batch(const FieldModel& model, const Alphabet& alphabet, std::size_t n,
                                std::size_t burn_in, std::uint64_t seed) {
    if (n == 0)
        throw InvariantViolation("sample count must be at least 1");
    SiteScorer scorer(model, alphabet);
    std::vector<Configuration> configs;
    configs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Engine engine(derive_seed(seed, streams::chains, i));
        auto l = detail::draw_length(model.length_dist, engine);
        configs.push_back(detail::run_chain(scorer, alphabet, l, burn_in, engine, [](std::size_t) { return 1.0; }));
    }
    return SampleBatch(std::move(configs), seed, burn_in, fingerprint(model));
}

/// Geometric cooling from `start` to `end` over `sweeps` sweeps.
inline std::vector<double> geometric_schedule(double start, double end, std::size_t sweeps) {
    std::vector<double> t(sweeps);
    for (std::size_t i = 0; i < sweeps; ++i) {
        double frac = sweeps > 1 ? static_cast<double>(i) / static_cast<double>(sweeps - 1) : 1.0;
        t[i] = start * std::pow(end / start, frac);
    }
    return t;
}

// Weights divided by temperature[sweep]. For display only.
inline SampleBatch annealed_samples(const FieldModel& model, const Alphabet& alphabet, std::size_t n,
                                    const std::vector<double>& temperatures, std::uint64_t seed) {
    if (n == 0)
        throw InvariantViolation("sample count must be at least 1");
    for (double t : temperatures)
        if (!(t > 0.0))
            throw InvariantViolation("temperatures must be positive");
    SiteScorer scorer(model, alphabet);
    std::vector<Configuration> configs;
    configs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Engine engine(derive_seed(seed, streams::chains, i));
        auto l = detail::draw_length(model.length_dist, engine);
        configs.push_back(detail::run_chain(scorer, alphabet, l, temperatures.size(), engine,
                                            [&](std::size_t s) { return 1.0 / temperatures[s]; }));
    }
    return SampleBatch(std::move(configs), seed, temperatures.size(), fingerprint(model));
}

// Chains at one fixed length with weights scaled by `scale`.
inline std::vector<Configuration> sample_fixed_length(const FieldModel& model, const Alphabet& alphabet,
                                                      std::size_t length, double scale, std::size_t n,
                                                      std::size_t burn_in, std::uint64_t seed) {
    SiteScorer scorer(model, alphabet);
    std::vector<Configuration> configs;
    configs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Engine engine(derive_seed(seed, streams::chains, i));
        configs.push_back(detail::run_chain(scorer, alphabet, length, burn_in, engine, [scale](std::size_t) { return scale; }));
    }
    return configs;
}

/// Empirical distribution of a pattern's occurrence count; the last entry is
/// the largest observed count.
struct OccurrenceHistogram {
    std::vector<double> probs;
    std::size_t samples = 0;

    std::size_t k_max() const noexcept { return probs.empty() ? 0 : probs.size() - 1; }
    double mean() const {
        double m = 0.0;
        for (std::size_t k = 0; k < probs.size(); ++k)
            m += static_cast<double>(k) * probs[k];
        return m;
    }
};

inline OccurrenceHistogram estimate_histogram(const SampleBatch& batch, const FeaturePattern& g) {
    if (batch.size() == 0)
        throw InvariantViolation("histogram of an empty batch");
    std::vector<std::size_t> counts(1, 0);
    for (const auto& w : batch.configs()) {
        auto k = match_count(g, w);
        if (k >= counts.size())
            counts.resize(k + 1, 0);
        ++counts[k];
    }
    OccurrenceHistogram h;
    h.samples = batch.size();
    h.probs.resize(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k)
        h.probs[k] = static_cast<double>(counts[k]) / static_cast<double>(batch.size());
    return h;
}

/// a[i][m]: for m >= 1 the sample mean of f_i * [f# = m]; a[i][0] = -p~[f_i].
using IISCoefficients = std::vector<std::vector<double>>;

inline IISCoefficients estimate_iis_coefficients(const SampleBatch& batch, const FieldModel& model,
                                                 std::span<const double> empirical) {
    if (empirical.size() != model.features.size())
        throw InvariantViolation("one empirical expectation per feature is required");
    const std::size_t n = model.features.size();
    std::vector<std::vector<std::uint32_t>> values;
    values.reserve(batch.size());
    std::uint32_t max_fsharp = 0;
    std::vector<std::uint32_t> fsharp;
    for (const auto& w : batch.configs()) {
        values.push_back(feature_vector(model, w));
        std::uint32_t s = 0;
        for (auto v : values.back())
            s += v;
        fsharp.push_back(s);
        max_fsharp = std::max(max_fsharp, s);
    }
    IISCoefficients a(n, std::vector<double>(max_fsharp + 1, 0.0));
    for (std::size_t s = 0; s < values.size(); ++s) {
        if (fsharp[s] == 0)
            continue;
        for (std::size_t i = 0; i < n; ++i)
            a[i][fsharp[s]] += values[s][i];
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t m = 1; m <= max_fsharp; ++m)
            a[i][m] *= inv;
        a[i][0] = -empirical[i];
    }
    return a;
}

/// Approximate standard error of each IIS update estimated from `batch`:
/// sd(f_i) / (sqrt(n) * sum_m m a[i][m]), the delta method at gamma = 0.
inline std::vector<double> update_standard_errors(const SampleBatch& batch, const FieldModel& model,
                                                  const IISCoefficients& coeffs) {
    const std::size_t n = model.features.size();
    std::vector<double> sum(n, 0.0), sum_sq(n, 0.0);
    for (const auto& w : batch.configs()) {
        auto v = feature_vector(model, w);
        for (std::size_t i = 0; i < n; ++i) {
            sum[i] += v[i];
            sum_sq[i] += static_cast<double>(v[i]) * v[i];
        }
    }
    const double size = static_cast<double>(batch.size());
    std::vector<double> se(n, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
        double slope = 0.0;
        for (std::size_t m = 1; m < coeffs[i].size(); ++m)
            slope += static_cast<double>(m) * coeffs[i][m];
        const double mean = sum[i] / size;
        const double var = std::max(sum_sq[i] / size - mean * mean, 0.0);
        if (slope > 0.0)
            se[i] = std::sqrt(var / size) / slope;
    }
    return se;
}

inline IISCoefficients estimate_iis_coefficients(const SampleBatch& batch, const FieldModel& model,
                                                 const EmpiricalDistribution& empirical) {
    auto e = empirical.expectations(model.features);
    return estimate_iis_coefficients(batch, model, e);
}

} // namespace fieldforge
