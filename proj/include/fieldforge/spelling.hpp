#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "fieldforge/alphabet.hpp"
#include "fieldforge/error.hpp"
#include "fieldforge/exact.hpp"
#include "fieldforge/gibbs.hpp"
#include "fieldforge/model.hpp"
#include "fieldforge/rng.hpp"

namespace fieldforge {

inline constexpr std::size_t kDefaultMaxWordLength = 32;

/// word -> count, as read from a corpus file.
struct Corpus {
    std::map<std::string, std::uint64_t> entries;
    std::uint64_t total = 0;
    std::vector<std::string> warnings;
};

struct IngestOptions {
    std::size_t max_word_length = kDefaultMaxWordLength;
};

// One record per line: `word<TAB>count` or `word`; `#` starts a comment line.
inline Corpus read_corpus(std::istream& in, IngestOptions options = {}) {
    Corpus corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line.front() == '#')
            continue;
        std::string_view view(line);
        std::string_view word = view;
        std::uint64_t count = 1;
        if (auto tab = view.find('\t'); tab != std::string_view::npos) {
            word = view.substr(0, tab);
            auto field = view.substr(tab + 1);
            std::int64_t parsed = 0;
            auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), parsed);
            if (ec != std::errc{} || ptr != field.data() + field.size())
                throw ParseError("bad count '" + std::string(field) + "'", line_no);
            if (parsed <= 0)
                throw ParseError("count must be positive", line_no);
            count = static_cast<std::uint64_t>(parsed);
        }
        for (char c : word)
            if (!is_printable(c))
                throw ParseError("word contains a non-printable or non-ASCII character", line_no);
        if (word.size() > options.max_word_length) {
            corpus.warnings.push_back("line " + std::to_string(line_no) + ": skipped word longer than " +
                                      std::to_string(options.max_word_length));
            continue;
        }
        corpus.entries[std::string(word)] += count;
        corpus.total += count;
    }
    if (corpus.entries.empty())
        throw DataError("corpus is empty");
    return corpus;
}

inline Corpus read_corpus_file(const std::string& path, IngestOptions options = {}) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open corpus " + path);
    return read_corpus(in, options);
}

inline void write_corpus(std::ostream& out, const EmpiricalDistribution& empirical) {
    for (std::size_t i = 0; i < empirical.size(); ++i)
        out << empirical.word(i) << '\t' << empirical.count(i) << '\n';
}

struct Ingested {
    EmpiricalDistribution empirical;
    LengthDistribution lengths;
    std::vector<std::string> warnings;
};

inline Ingested ingest(std::istream& in, IngestOptions options = {}) {
    Corpus corpus = read_corpus(in, options);
    EmpiricalDistribution empirical(corpus.entries);
    auto lengths = empirical.length_marginal();
    return {std::move(empirical), std::move(lengths), std::move(corpus.warnings)};
}

inline Ingested ingest_file(const std::string& path, IngestOptions options = {}) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open corpus " + path);
    return ingest(in, options);
}

/// Single-symbol patterns: each alphabet character, the four classes, the
/// length labels <1>..<6> and <7+>, and the boundary <*>.
inline std::vector<FeaturePattern> atomic_features(const Alphabet& alphabet) {
    std::vector<FeaturePattern> atoms;
    for (char c : alphabet.chars())
        atoms.emplace_back(std::vector{ExtendedSymbol::literal(c)});
    atoms.emplace_back(std::vector{ExtendedSymbol::lower()});
    atoms.emplace_back(std::vector{ExtendedSymbol::upper()});
    atoms.emplace_back(std::vector{ExtendedSymbol::digit()});
    atoms.emplace_back(std::vector{ExtendedSymbol::punct()});
    for (int l = 1; l <= kMaxExplicitLength; ++l)
        atoms.emplace_back(std::vector{ExtendedSymbol::length(l)});
    atoms.emplace_back(std::vector{ExtendedSymbol::long_length()});
    atoms.emplace_back(std::vector{ExtendedSymbol::boundary()});
    return atoms;
}

struct PartitionEstimateOptions {
    std::size_t intervals = 10; // Simpson panels, even
    std::size_t samples = 1000; // per quadrature node
    std::size_t burn_in = kDefaultBurnIn;
    std::uint64_t seed = 0;
};

/// log Z_l by thermodynamic integration:
/// log Z_l(lambda) = l log A + int_0^1 E_{t lambda}[lambda . f] dt,
/// with Gibbs chains at each Simpson node.
inline double estimate_log_partition(const FieldModel& model, const Alphabet& alphabet, std::size_t l,
                                     const PartitionEstimateOptions& options = {}) {
    const double base = static_cast<double>(l) * std::log(static_cast<double>(alphabet.size()));
    if (model.features.empty())
        return base;
    const std::size_t panels = options.intervals + options.intervals % 2;
    std::vector<double> values(panels + 1);
    for (std::size_t j = 0; j <= panels; ++j) {
        double t = static_cast<double>(j) / static_cast<double>(panels);
        auto configs = sample_fixed_length(model, alphabet, l, t, options.samples, options.burn_in,
                                           derive_seed(options.seed, streams::partition_estimate, l * 1000 + j));
        double mean = 0.0;
        for (const auto& w : configs)
            mean += log_score(model, w);
        values[j] = mean / static_cast<double>(configs.size());
    }
    double integral = values.front() + values.back();
    for (std::size_t j = 1; j < panels; ++j)
        integral += (j % 2 ? 4.0 : 2.0) * values[j];
    integral /= 3.0 * static_cast<double>(panels);
    return base + integral;
}

enum class ScoreStatus { Ok, LengthOutsideSupport, OutsideAlphabet };

struct SpellingScore {
    double log_prob = -std::numeric_limits<double>::infinity();
    bool exact = true;
    ScoreStatus status = ScoreStatus::Ok;
};

/// log p_l(|w|) + lambda . f(w) - log Z_|w|. Z is enumerated when the length
/// fits the enumeration budget and estimated otherwise; estimates are cached
/// per length.
class SpellingScorer {
public:
    SpellingScorer(FieldModel model, Alphabet alphabet, PartitionEstimateOptions estimate = {})
        : model_(std::move(model)), alphabet_(std::move(alphabet)), estimate_(estimate) {}

    SpellingScore score(std::string_view word) {
        SpellingScore s;
        if (!alphabet_.contains_all(word)) {
            s.status = ScoreStatus::OutsideAlphabet;
            return s;
        }
        const double pl = model_.length_dist(word.size());
        if (!(pl > 0.0)) {
            s.status = ScoreStatus::LengthOutsideSupport;
            return s;
        }
        auto [log_z, exact] = log_partition(word.size());
        s.log_prob = std::log(pl) + log_score(model_, word) - log_z;
        s.exact = exact;
        return s;
    }

    std::pair<double, bool> log_partition(std::size_t l) {
        if (auto it = cache_.find(l); it != cache_.end())
            return it->second;
        std::pair<double, bool> v;
        const double size = std::pow(static_cast<double>(alphabet_.size()), static_cast<double>(l));
        if (model_.features.empty()) {
            v = {static_cast<double>(l) * std::log(static_cast<double>(alphabet_.size())), true};
        } else if (size <= kEnumerationBudget) {
            std::vector<double> scores;
            scores.reserve(static_cast<std::size_t>(size));
            for_each_string(alphabet_, l, [&](const std::string& w) { scores.push_back(log_score(model_, w)); });
            v = {log_sum_exp(scores), true};
        } else {
            v = {estimate_log_partition(model_, alphabet_, l, estimate_), false};
        }
        cache_.emplace(l, v);
        return v;
    }

private:
    FieldModel model_;
    Alphabet alphabet_;
    PartitionEstimateOptions estimate_;
    std::map<std::size_t, std::pair<double, bool>> cache_;
};

inline SpellingScore spelling_log_prob(const FieldModel& model, const Alphabet& alphabet, std::string_view word) {
    SpellingScorer scorer(model, alphabet);
    return scorer.score(word);
}

} // namespace fieldforge
