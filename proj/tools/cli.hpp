#pragma once

// Command-line front end. cli_dispatch is kept in a header so the test suite
// can drive it with in-memory streams.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fieldforge/fieldforge.hpp"

namespace fieldforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Lengths used by `sample` when no model is given.
inline constexpr std::size_t kDefaultSampleMinLength = 1;
inline constexpr std::size_t kDefaultSampleMaxLength = 8;

struct Streams {
    std::istream& in;
    std::ostream& out;
    std::ostream& err;
};

inline Alphabet read_alphabet(const std::string& source) {
    if (source.empty() || source == "builtin")
        return Alphabet::printable_ascii();
    std::ifstream in(source);
    if (!in)
        throw DataError("cannot open alphabet file " + source);
    std::string chars;
    char c = 0;
    while (in.get(c))
        if (c != ' ' && c != '\n' && c != '\r' && c != '\t')
            chars.push_back(c);
    return Alphabet(std::move(chars));
}

// Output file, or the command's standard output when the path is empty.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_)
                throw DataError("cannot write " + path);
            out_ = file_.get();
        }
    }
    std::ostream& get() { return *out_; }
    void finish(const std::string& path) {
        out_->flush();
        if (!*out_)
            throw DataError("failed writing " + (path.empty() ? std::string("output") : path));
    }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* out_;
};

inline std::string seconds_field(bool timing, double secs) { return timing ? format_double(secs) : "-"; }

struct CommonOptions {
    std::uint64_t seed = 0;
    std::size_t samples = kDefaultSamples;
    std::size_t burn_in = kDefaultBurnIn;
    std::string alphabet = "builtin";
    std::string mode = "mc";
};

inline void add_sampling_options(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--seed", o.seed, "master random seed");
    cmd->add_option("--samples", o.samples, "Gibbs samples per estimate")->check(CLI::PositiveNumber);
    cmd->add_option("--burn-in", o.burn_in, "sweeps per chain");
    cmd->add_option("--alphabet", o.alphabet, "alphabet file, or 'builtin' for printable ASCII");
    cmd->add_option("--mode", o.mode, "expectation estimates: exact or mc")->check(CLI::IsMember({"exact", "mc"}));
}

inline int run_ingest(const std::string& corpus_path, std::size_t max_length, const std::string& output,
                      Streams io) {
    auto corpus = read_corpus_file(corpus_path, IngestOptions{max_length});
    for (const auto& w : corpus.warnings)
        io.err << "warning: " << w << '\n';
    EmpiricalDistribution empirical(corpus.entries);
    auto lengths = empirical.length_marginal();
    auto& out = io.out;
    out << "types\t" << empirical.size() << '\n';
    out << "tokens\t" << corpus.total << '\n';
    out << "skipped\t" << corpus.warnings.size() << '\n';
    out << "max_length\t" << empirical.max_length() << '\n';
    out << "entropy\t" << format_double(-empirical.neg_entropy()) << '\n';
    for (std::size_t l = 0; l < lengths.probs().size(); ++l)
        if (lengths(l) > 0.0)
            out << "length\t" << l << '\t' << format_double(lengths(l)) << '\n';
    if (!output.empty()) {
        Sink sink(output, io.out);
        write_corpus(sink.get(), empirical);
        sink.finish(output);
    }
    return kExitOk;
}

struct InduceArgs {
    std::string corpus;
    std::size_t max_features = 10;
    double gain_threshold = kDefaultGainThreshold;
    std::optional<double> tolerance;
    std::size_t max_iterations = kDefaultMaxIterations;
    std::string log;
    std::string output;
    bool timing = false;
};

inline void write_induction_header(std::ostream& out) {
    out << "iteration\tfeature\talpha_hat\tgain\tdivergence\tdivergence_exact\tcandidates\tiis_iterations\twall_seconds\n";
}

inline void write_induction_record(std::ostream& out, const InductionRecord& r, bool timing) {
    out << r.iteration << '\t' << r.feature << '\t' << format_double(r.alpha_hat) << '\t' << format_double(r.gain)
        << '\t' << format_double(r.divergence) << '\t' << (r.divergence_exact ? "exact" : "estimated") << '\t'
        << r.candidates << '\t' << r.iis_iterations << '\t' << seconds_field(timing, r.wall_seconds) << '\n';
}

inline int run_induce(const InduceArgs& args, const CommonOptions& common, Streams io) {
    auto data = ingest_file(args.corpus);
    for (const auto& w : data.warnings)
        io.err << "warning: " << w << '\n';
    InductionConfig config;
    config.max_features = args.max_features;
    config.samples = common.samples;
    config.burn_in = common.burn_in;
    config.gain_threshold = args.gain_threshold;
    config.mode = common.mode == "exact" ? EstimationMode::Exact : EstimationMode::MonteCarlo;
    config.tolerance = args.tolerance;
    config.max_iterations = args.max_iterations;
    config.alphabet = read_alphabet(common.alphabet);
    config.seed = common.seed;

    std::unique_ptr<Sink> log;
    if (!args.log.empty()) {
        log = std::make_unique<Sink>(args.log, io.out);
        write_induction_header(log->get());
    }
    auto [model, result] = run_induction(data.empirical, config, [&](const InductionRecord& r) {
        if (log) {
            write_induction_record(log->get(), r, args.timing);
            log->get().flush();
        }
    });
    if (log)
        log->finish(args.log);
    if (result.complete)
        io.err << "induction complete: no candidate gains at least " << format_double(args.gain_threshold) << '\n';
    Sink sink(args.output, io.out);
    save_model(sink.get(), model);
    sink.finish(args.output);
    return kExitOk;
}

struct TrainArgs {
    std::string corpus;
    std::string model;
    std::vector<std::string> features;
    std::optional<double> tolerance;
    std::size_t max_iterations = kDefaultMaxIterations;
    std::string log;
    std::string output;
    bool timing = false;
};

inline int run_train(const TrainArgs& args, const CommonOptions& common, Streams io) {
    auto data = ingest_file(args.corpus);
    for (const auto& w : data.warnings)
        io.err << "warning: " << w << '\n';
    FieldModel start = args.model.empty() ? uniform_model(data.empirical) : load_model(args.model);
    for (const auto& text : args.features) {
        auto g = FeaturePattern::parse(text);
        if (!start.index_of(g)) {
            start.features.push_back(g);
            start.weights.push_back(0.0);
        }
    }
    if (start.features.empty())
        throw DataError("nothing to train: give --model with features or at least one --feature");
    // Iterative scaling needs the corpus length marginal.
    start.length_dist = data.lengths;

    auto alphabet = read_alphabet(common.alphabet);
    TrainMode mode = common.mode == "exact"
                         ? TrainMode{ExactMode{EnumerableSpace{alphabet, data.empirical.max_length()}}}
                         : TrainMode{MonteCarloMode{alphabet, common.samples, common.burn_in, common.seed}};
    const bool exact = common.mode == "exact";

    std::unique_ptr<Sink> log;
    if (!args.log.empty()) {
        log = std::make_unique<Sink>(args.log, io.out);
        log->get() << "iteration\t" << (exact ? "divergence" : "gamma_norm") << "\twall_seconds\n";
    }
    TrainOptions options;
    options.tolerance = args.tolerance;
    options.max_iterations = args.max_iterations;
    options.on_iteration = [&](const IISState& s, double secs) {
        if (!log)
            return;
        double v = exact ? s.divergence_history.back() : s.gamma_norm_history.back();
        log->get() << s.iteration << '\t' << format_double(v) << '\t' << seconds_field(args.timing, secs) << '\n';
    };
    auto result = train(start, data.empirical, mode, options);
    if (log)
        log->finish(args.log);
    if (!result.warning.empty())
        io.err << "warning: " << result.warning << '\n';
    Sink sink(args.output, io.out);
    save_model(sink.get(), result.model);
    sink.finish(args.output);
    return kExitOk;
}

struct SampleArgs {
    std::string model;
    std::size_t n = 10;
    bool anneal = false;
};

inline int run_sample(const SampleArgs& args, const CommonOptions& common, Streams io) {
    FieldModel model = args.model.empty()
                           ? FieldModel({}, {}, LengthDistribution::uniform(kDefaultSampleMinLength, kDefaultSampleMaxLength))
                           : load_model(args.model);
    auto alphabet = read_alphabet(common.alphabet);
    auto batch = args.anneal
                     ? annealed_samples(model, alphabet, args.n, geometric_schedule(2.0, 0.8, std::max<std::size_t>(common.burn_in, 1)),
                                        common.seed)
                     : sample_batch(model, alphabet, args.n, common.burn_in, common.seed);
    for (const auto& w : batch.configs())
        io.out << w << '\n';
    return kExitOk;
}

inline int run_score(const std::string& model_path, const std::vector<std::string>& words, const CommonOptions& common,
                     Streams io) {
    auto model = load_model(model_path);
    PartitionEstimateOptions estimate;
    estimate.samples = std::max<std::size_t>(common.samples / 10, 1);
    estimate.burn_in = common.burn_in;
    estimate.seed = common.seed;
    SpellingScorer scorer(model, read_alphabet(common.alphabet), estimate);

    auto score_one = [&](const std::string& word, std::size_t line) {
        for (char c : word)
            if (!is_printable(c))
                throw ParseError("word contains a tab, space or other non-printable character", line);
        auto s = scorer.score(word);
        io.out << word << '\t';
        if (s.status == ScoreStatus::Ok)
            io.out << format_double(s.log_prob) << '\t' << (s.exact ? "exact" : "approx") << '\n';
        else
            io.out << "-inf\t" << (s.status == ScoreStatus::OutsideAlphabet ? "outside-alphabet" : "length-unsupported")
                   << '\n';
    };
    if (!words.empty()) {
        for (std::size_t i = 0; i < words.size(); ++i)
            score_one(words[i], i + 1);
    } else {
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(io.in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            score_one(line, line_no);
        }
    }
    return kExitOk;
}

struct InspectArgs {
    std::string model;
    bool gains = false;
    std::string corpus;
    std::size_t top = 0;
};

inline int run_inspect(const InspectArgs& args, const CommonOptions& common, Streams io) {
    auto model = load_model(args.model);
    auto& out = io.out;
    if (!args.gains) {
        out << "pattern\tlambda\texp_lambda\n";
        for (std::size_t i = 0; i < model.size(); ++i)
            out << model.features[i].text() << '\t' << format_double(model.weights[i]) << '\t'
                << format_double(std::exp(model.weights[i])) << '\n';
        out << "length\tprob\n";
        for (std::size_t l = 0; l < model.length_dist.probs().size(); ++l)
            if (model.length_dist(l) > 0.0)
                out << l << '\t' << format_double(model.length_dist(l)) << '\n';
        return kExitOk;
    }
    if (args.corpus.empty())
        throw CLI::RequiredError("--corpus is required with --gains");
    auto data = ingest_file(args.corpus);
    InductionConfig config;
    config.samples = common.samples;
    config.burn_in = common.burn_in;
    config.mode = common.mode == "exact" ? EstimationMode::Exact : EstimationMode::MonteCarlo;
    config.alphabet = read_alphabet(common.alphabet);
    config.seed = common.seed;
    auto ranking = rank_next(model, data.empirical, config, model.size());
    out << "pattern\tp_emp\talpha_hat\tgain\tstatus\n";
    std::size_t shown = 0;
    for (const auto& r : ranking) {
        if (args.top && shown++ == args.top)
            break;
        out << r.candidate->text() << '\t' << format_double(r.empirical) << '\t' << format_double(r.alpha_hat) << '\t'
            << format_double(r.gain) << '\t' << to_string(r.status) << '\n';
    }
    return kExitOk;
}

inline int cli_dispatch(const std::vector<std::string>& argv, Streams io) {
    CLI::App app{"Feature induction for random fields over character strings", "fieldforge"};
    app.require_subcommand(1, 1);

    CommonOptions common;

    std::string ingest_corpus, ingest_output;
    std::size_t ingest_max = kDefaultMaxWordLength;
    auto* ingest_cmd = app.add_subcommand("ingest", "read a corpus and print summary statistics");
    ingest_cmd->add_option("corpus", ingest_corpus, "word<TAB>count file")->required();
    ingest_cmd->add_option("--max-length", ingest_max, "skip longer words")->check(CLI::PositiveNumber);
    ingest_cmd->add_option("-o,--output", ingest_output, "write the cleaned word counts here");

    InduceArgs induce;
    auto* induce_cmd = app.add_subcommand("induce", "greedy feature induction from the uniform field");
    induce_cmd->add_option("corpus", induce.corpus, "word<TAB>count file")->required();
    induce_cmd->add_option("--max-features", induce.max_features)->check(CLI::PositiveNumber);
    induce_cmd->add_option("--gain-threshold", induce.gain_threshold)->check(CLI::NonNegativeNumber);
    induce_cmd->add_option("--tol", induce.tolerance)->check(CLI::PositiveNumber);
    induce_cmd->add_option("--max-iter", induce.max_iterations)->check(CLI::PositiveNumber);
    induce_cmd->add_option("--log", induce.log, "TSV record of each added feature");
    induce_cmd->add_option("-o,--output", induce.output, "model file (default: standard output)");
    induce_cmd->add_flag("--timing", induce.timing, "record wall-clock seconds in the log");
    add_sampling_options(induce_cmd, common);

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "iterative scaling on a fixed feature list");
    train_cmd->add_option("corpus", train_args.corpus, "word<TAB>count file")->required();
    train_cmd->add_option("--model", train_args.model, "starting model");
    train_cmd->add_option("--feature", train_args.features, "add a feature pattern (repeatable)");
    train_cmd->add_option("--tol", train_args.tolerance)->check(CLI::PositiveNumber);
    train_cmd->add_option("--max-iter", train_args.max_iterations)->check(CLI::PositiveNumber);
    train_cmd->add_option("--log", train_args.log, "TSV record of each iteration");
    train_cmd->add_option("-o,--output", train_args.output, "model file (default: standard output)");
    train_cmd->add_flag("--timing", train_args.timing, "record wall-clock seconds in the log");
    add_sampling_options(train_cmd, common);

    SampleArgs sample;
    auto* sample_cmd = app.add_subcommand("sample", "print spellings drawn from a model");
    sample_cmd->add_option("--model", sample.model, "model file (default: uniform field, lengths 1..8)");
    sample_cmd->add_option("--n", sample.n, "number of spellings")->check(CLI::PositiveNumber);
    sample_cmd->add_flag("--anneal", sample.anneal, "cool from T=2 to T=0.8 during burn-in");
    add_sampling_options(sample_cmd, common);

    std::string score_model;
    std::vector<std::string> score_words;
    auto* score_cmd = app.add_subcommand("score", "log-probability of each word (arguments or standard input)");
    score_cmd->add_option("--model", score_model)->required();
    score_cmd->add_option("words", score_words);
    add_sampling_options(score_cmd, common);

    InspectArgs inspect;
    auto* inspect_cmd = app.add_subcommand("inspect", "print a model, or rank candidate features with --gains");
    inspect_cmd->add_option("model", inspect.model)->required();
    inspect_cmd->add_flag("--gains", inspect.gains);
    inspect_cmd->add_option("--corpus", inspect.corpus, "training corpus for --gains");
    inspect_cmd->add_option("--top", inspect.top, "show only the best N candidates");
    add_sampling_options(inspect_cmd, common);

    std::vector<std::string> args(argv.rbegin(), argv.rend());
    if (!args.empty())
        args.pop_back(); // program name
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, io.out, io.err);
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, io.out, io.err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        io.err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (ingest_cmd->parsed())
            return run_ingest(ingest_corpus, ingest_max, ingest_output, io);
        if (induce_cmd->parsed())
            return run_induce(induce, common, io);
        if (train_cmd->parsed())
            return run_train(train_args, common, io);
        if (sample_cmd->parsed())
            return run_sample(sample, common, io);
        if (score_cmd->parsed())
            return run_score(score_model, score_words, common, io);
        if (inspect_cmd->parsed())
            return run_inspect(inspect, common, io);
    } catch (const CLI::ParseError& e) {
        io.err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        io.err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

inline int cli_dispatch(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return cli_dispatch(args, Streams{std::cin, std::cout, std::cerr});
}

} // namespace fieldforge::cli
