#include <gtest/gtest.h>

#include <algorithm>

#include "fieldforge/induction.hpp"
#include "fieldforge/model_io.hpp"
#include "oracle.hpp"

using namespace fieldforge;

namespace {

bool contains(const std::vector<FeaturePattern>& v, const char* text) {
    return std::find(v.begin(), v.end(), FeaturePattern::parse(text)) != v.end();
}

InductionConfig exact_config(const char* alphabet) {
    InductionConfig c;
    c.mode = EstimationMode::Exact;
    c.alphabet = Alphabet(alphabet);
    return c;
}

} // namespace

TEST(Candidates, EmptyActiveSetGivesAtoms) {
    auto atoms = atomic_features(Alphabet("ab"));
    auto c = candidate_set({}, atoms);
    EXPECT_EQ(c.size(), atoms.size());
}

TEST(Candidates, ConcatenatesOnBothSides) {
    auto c = candidate_set({FeaturePattern::parse("e")}, atomic_features(Alphabet::printable_ascii()));
    EXPECT_TRUE(contains(c, "he"));
    EXPECT_TRUE(contains(c, "eh"));
    EXPECT_TRUE(contains(c, "e<*>"));
    EXPECT_TRUE(contains(c, "[a-z]e"));
    EXPECT_FALSE(contains(c, "e"));
}

TEST(Candidates, BoundaryStaysAtTheEnd) {
    auto c = candidate_set({FeaturePattern::parse("ism<*>")}, atomic_features(Alphabet::printable_ascii()));
    EXPECT_TRUE(contains(c, "iism<*>"));
    for (const auto& p : c)
        EXPECT_TRUE(FeaturePattern::valid(p.symbols()));
    EXPECT_EQ(std::count_if(c.begin(), c.end(), [](const FeaturePattern& p) { return p.text().rfind("ism<*>") == 0; }),
              0);
}

TEST(Induction, CompleteWhenModelAlreadyFits) {
    // Uniform strings of each length: nothing to gain.
    std::map<std::string, std::uint64_t> counts;
    for (const auto& w : oracle::strings_up_to("ab", 2))
        if (!w.empty())
            counts[w] = w.size() == 1 ? 2 : 1;
    EmpiricalDistribution p(counts);
    auto [model, log] = run_induction(p, exact_config("ab"));
    EXPECT_TRUE(log.complete);
    EXPECT_TRUE(log.records.empty());
    EXPECT_EQ(model.size(), 0u);
}

TEST(Induction, PicksOverrepresentedLetter) {
    // Three letters, so that no single-letter feature is the complement of another.
    std::map<std::string, std::uint64_t> counts{{"a", 5}, {"aa", 4}, {"ab", 1}, {"ca", 1}, {"b", 1}, {"c", 1}, {"bc", 1}};
    EmpiricalDistribution p(counts);
    auto config = exact_config("abc");
    config.max_features = 1;
    auto [model, log] = run_induction(p, config);
    ASSERT_EQ(log.records.size(), 1u);

    // exact gains computed independently
    auto lengths = p.length_marginal();
    auto strings = oracle::strings_up_to("abc", 2);
    auto q = oracle::probabilities(strings, {}, {}, lengths.probs());
    std::string best;
    double best_gain = -1;
    for (const auto& g : candidate_set({}, atomic_features(Alphabet("abc")))) {
        double e = p.expectation(g);
        if (e == 0.0)
            continue;
        std::vector<double> h(1, 0.0);
        for (std::size_t s = 0; s < strings.size(); ++s) {
            auto k = match_count(g, strings[s]);
            if (k >= h.size())
                h.resize(k + 1, 0.0);
            h[k] += q[s];
        }
        double a = oracle::maximize([&](double x) { return gain_curve(e, h, x); }, -30, 30);
        double gain = gain_curve(e, h, a);
        if (gain > best_gain + 1e-9) {
            best_gain = gain;
            best = g.text();
        }
    }
    EXPECT_EQ(best, "a");
    EXPECT_EQ(log.records[0].feature, best);
    EXPECT_NEAR(log.records[0].gain, best_gain, 1e-8);
    EXPECT_TRUE(log.records[0].divergence_exact);
}

TEST(Induction, DivergenceDecreasesAcrossSteps) {
    EmpiricalDistribution p({{"aab", 6}, {"ab", 5}, {"ba", 2}, {"bba", 2}, {"b", 3}, {"aa", 1}});
    auto config = exact_config("ab");
    config.max_features = 4;
    auto [model, log] = run_induction(p, config);
    double prev = uniform_divergence(p, config.alphabet);
    for (const auto& r : log.records) {
        EXPECT_LE(r.divergence, prev + 1e-12);
        prev = r.divergence;
    }
    EXPECT_NEAR(prev, kl_divergence(p, model, EnumerableSpace{config.alphabet, 3}), 1e-12);
}

TEST(Induction, RejectsZeroMaxFeatures) {
    InductionConfig c;
    c.max_features = 0;
    EXPECT_THROW(c.validate(), InvariantViolation);
    EmpiricalDistribution p({{"a", 1}});
    EXPECT_THROW(run_induction(p, c), InvariantViolation);
}

TEST(Induction, SameSeedSameLogAndModel) {
    EmpiricalDistribution p({{"the", 20}, {"The", 3}, {"a", 9}, {"of", 11}, {"to", 8}, {"I", 4}});
    InductionConfig c;
    c.max_features = 2;
    c.samples = 1000;
    c.seed = 99;
    auto run = [&] {
        auto [m, log] = run_induction(p, c);
        std::string out = to_model_text(m);
        for (const auto& r : log.records)
            out += r.feature + ' ' + format_double(r.gain) + ' ' + format_double(r.divergence) + '\n';
        return out;
    };
    EXPECT_EQ(run(), run());
}

TEST(Induction, UniformDivergenceMatchesOracle) {
    EmpiricalDistribution p({{"ab", 3}, {"b", 1}, {"aab", 2}});
    auto strings = oracle::strings_up_to("ab", 3);
    auto q = oracle::probabilities(strings, {}, {}, p.length_marginal().probs());
    EXPECT_NEAR(uniform_divergence(p, Alphabet("ab")), oracle::kl(oracle::empirical_on(strings, {{"ab", 3}, {"b", 1}, {"aab", 2}}), q),
                1e-14);
}
