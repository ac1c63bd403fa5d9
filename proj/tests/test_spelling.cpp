#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fieldforge/spelling.hpp"
#include "oracle.hpp"

using namespace fieldforge;

TEST(Corpus, CountsAndLengths) {
    std::istringstream in("a\t3\nbb\t1\n");
    auto data = ingest(in);
    EXPECT_DOUBLE_EQ(data.empirical.prob_of("a"), 0.75);
    EXPECT_DOUBLE_EQ(data.empirical.prob_of("bb"), 0.25);
    EXPECT_DOUBLE_EQ(data.lengths(1), 0.75);
    EXPECT_DOUBLE_EQ(data.lengths(2), 0.25);
}

TEST(Corpus, EmptyInput) {
    std::istringstream in("# only a comment\n\n");
    EXPECT_THROW(ingest(in), DataError);
}

TEST(Corpus, MissingCountMeansOne) {
    std::istringstream in("the\nthe\nof\n");
    auto c = read_corpus(in);
    EXPECT_EQ(c.entries.at("the"), 2u);
    EXPECT_EQ(c.entries.at("of"), 1u);
    EXPECT_EQ(c.total, 3u);
}

TEST(Corpus, BadLinesReportLineNumbers) {
    std::istringstream bad_count("a\t1\nb\tx\n");
    try {
        read_corpus(bad_count);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    std::istringstream zero("a\t0\n");
    EXPECT_THROW(read_corpus(zero), ParseError);
    std::istringstream space("a b\t2\n");
    EXPECT_THROW(read_corpus(space), ParseError);
    std::istringstream high("caf\xc3\xa9\t2\n");
    EXPECT_THROW(read_corpus(high), ParseError);
}

TEST(Corpus, LongWordsSkippedWithWarning) {
    std::istringstream in("short\t2\n" + std::string(40, 'x') + "\t5\n");
    auto c = read_corpus(in);
    EXPECT_EQ(c.entries.size(), 1u);
    EXPECT_EQ(c.warnings.size(), 1u);
}

TEST(Corpus, CarriageReturnsAndComments) {
    std::istringstream in("# header\r\nthe\t4\r\n");
    auto c = read_corpus(in);
    EXPECT_EQ(c.entries.at("the"), 4u);
}

TEST(Atoms, DefaultAlphabet) { EXPECT_EQ(atomic_features(Alphabet::printable_ascii()).size(), 106u); }

TEST(Atoms, TwoLetterAlphabet) { EXPECT_EQ(atomic_features(Alphabet("ab")).size(), 14u); }

TEST(Score, UniformField) {
    FieldModel m(LengthDistribution({0.0, 0.5, 0.3, 0.2}));
    auto s = spelling_log_prob(m, Alphabet::printable_ascii(), "ab");
    EXPECT_TRUE(s.exact);
    EXPECT_NEAR(s.log_prob, std::log(0.3) - 2 * std::log(94.0), 1e-12);
}

TEST(Score, ExactOnSmallSpace) {
    FieldModel m({FeaturePattern::parse("ab"), FeaturePattern::parse("<*>b")}, {0.7, -0.2},
                 LengthDistribution({0.0, 0.2, 0.3, 0.5}));
    auto strings = oracle::strings_up_to("abc", 3);
    auto q = oracle::probabilities(strings, m);
    SpellingScorer scorer(m, Alphabet("abc"));
    for (std::size_t s = 1; s < strings.size(); ++s) {
        auto r = scorer.score(strings[s]);
        EXPECT_TRUE(r.exact);
        EXPECT_NEAR(r.log_prob, std::log(q[s]), 1e-12) << strings[s];
    }
}

TEST(Score, OneFeatureDifference) {
    FieldModel m({FeaturePattern::parse("<7+>[A-Z]"), FeaturePattern::parse("ian"), FeaturePattern::parse("ism<*>")},
                 {0.4, 1.2, 2.0}, LengthDistribution::uniform(1, 14));
    SpellingScorer scorer(m, Alphabet::printable_ascii(), {4, 50, 2, 1});
    auto with = scorer.score("Hamiltonianism");
    auto without = scorer.score("Hamiltonianisx");
    EXPECT_FALSE(with.exact);
    EXPECT_NEAR(with.log_prob - without.log_prob, 2.0, 1e-12);
}

TEST(Score, OutsideSupport) {
    FieldModel m(LengthDistribution({0.0, 1.0}));
    EXPECT_EQ(spelling_log_prob(m, Alphabet("ab"), "c").status, ScoreStatus::OutsideAlphabet);
    EXPECT_EQ(spelling_log_prob(m, Alphabet("ab"), "ab").status, ScoreStatus::LengthOutsideSupport);
}

TEST(PartitionEstimate, CloseToExact) {
    FieldModel m({FeaturePattern::parse("[a-z]"), FeaturePattern::parse("e<*>")}, {std::log(6.99), 1.0},
                 LengthDistribution::uniform(1, 3));
    auto alphabet = Alphabet::printable_ascii();
    SpellingScorer exact(m, alphabet);
    for (std::size_t l = 1; l <= 3; ++l) {
        double est = estimate_log_partition(m, alphabet, l, {10, 2000, 10, 5});
        EXPECT_NEAR(est, exact.log_partition(l).first, 0.02) << l;
    }
}
