#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "wepo/dom.hpp"
#include "wepo/error.hpp"
#include "wepo/eval.hpp"
#include "wepo/manifest.hpp"
#include "wepo/pairgen.hpp"
#include "wepo/policy.hpp"
#include "wepo/pruner.hpp"
#include "wepo/sampler.hpp"
#include "wepo/stats.hpp"

namespace {

std::uint64_t resolve_seed(std::uint64_t flag_seed) {
    const char* env = std::getenv("WEPO_SEED");
    if (env == nullptr || *env == '\0') return flag_seed;
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') {
        throw wepo::Error(std::string("WEPO_SEED is not an unsigned integer: ") + env);
    }
    return v;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw wepo::IoError("cannot open " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw wepo::IoError("cannot open " + path + " for writing");
    out << content;
    if (!out) throw wepo::IoError("write failed for " + path);
}

// One manifest beside every produced file, all listing the full output set.
void emit_manifests(const wepo::RunManifest& manifest) {
    for (const auto& [path, digest] : manifest.outputs) {
        wepo::write_manifest(manifest, path);
    }
}

struct CleanArgs {
    std::string html;
    std::string out;
};

void run_clean(const CleanArgs& args) {
    wepo::DomTree tree = wepo::clean(wepo::parse_html(read_text_file(args.html)));
    write_text_file(args.out, wepo::serialize(tree) + "\n");

    wepo::RunManifest manifest;
    manifest.command = "clean";
    manifest.config = {{"html", args.html}, {"out", args.out}};
    manifest.inputs[args.html] = wepo::file_digest(args.html);
    manifest.outputs[args.out] = wepo::file_digest(args.out);
    emit_manifests(manifest);
    std::cout << "cleaned " << args.html << " -> " << args.out << "\n";
}

struct PruneArgs {
    std::string html;
    std::string out;
    std::string scores;
    std::string intent;
    int truth = -1;
    wepo::PruneConfig cfg;
};

void run_prune(const PruneArgs& args) {
    wepo::DomTree tree =
        wepo::assign_candidate_ids(wepo::clean(wepo::parse_html(read_text_file(args.html))));
    wepo::CandidateScores scores;
    if (!args.scores.empty()) {
        scores = wepo::load_scores(args.scores);
    } else if (!args.intent.empty()) {
        scores = wepo::fallback_scores(tree, args.intent);
    }
    wepo::DomTree pruned = wepo::prune_to_k(tree, scores, args.truth, args.cfg);
    write_text_file(args.out, wepo::serialize_with_markers(pruned) + "\n");

    wepo::RunManifest manifest;
    manifest.command = "prune";
    manifest.config = {{"html", args.html},
                       {"out", args.out},
                       {"scores", args.scores},
                       {"intent", args.intent},
                       {"truth", std::to_string(args.truth)},
                       {"k", std::to_string(args.cfg.k)},
                       {"max-descendants", std::to_string(args.cfg.max_descendants)},
                       {"mode", args.cfg.mode == wepo::PruneMode::Training ? "training"
                                                                           : "inference"}};
    manifest.inputs[args.html] = wepo::file_digest(args.html);
    if (!args.scores.empty()) manifest.inputs[args.scores] = wepo::file_digest(args.scores);
    manifest.outputs[args.out] = wepo::file_digest(args.out);
    emit_manifests(manifest);
    std::cout << "kept " << wepo::candidate_nodes(pruned).size() << " candidates -> " << args.out
              << "\n";
}

struct SampleArgs {
    std::string html;
    std::string truth;
    std::string out;
    std::string trace;
    wepo::SampleConfig cfg;
};

void run_sample(const SampleArgs& args) {
    auto truth = wepo::parse_action(args.truth);
    if (!truth.has_value()) {
        throw wepo::Error("sample: cannot parse truth action '" + args.truth + "'");
    }
    wepo::SampleConfig cfg = args.cfg;
    cfg.seed = resolve_seed(cfg.seed);

    wepo::DomTree tree =
        wepo::assign_candidate_ids(wepo::clean(wepo::parse_html(read_text_file(args.html))));
    std::vector<wepo::NegativeSample> negatives =
        wepo::build_negative_actions(tree, *truth, cfg);

    std::string lines;
    for (const wepo::NegativeSample& neg : negatives) {
        lines += wepo::serialize_action(neg.action);
        lines += "\n";
    }
    if (args.out.empty()) {
        std::cout << lines;
    } else {
        write_text_file(args.out, lines);
    }

    if (!args.trace.empty()) {
        std::string tsv = "negative_id\tdistance\top\n";
        for (const wepo::NegativeSample& neg : negatives) {
            tsv += std::to_string(neg.action.element);
            tsv += "\t";
            tsv += std::to_string(neg.distance);
            tsv += "\t";
            tsv += wepo::op_name(neg.action.op);
            tsv += "\n";
        }
        write_text_file(args.trace, tsv);
    }

    wepo::RunManifest manifest;
    manifest.command = "sample";
    manifest.global_seed = cfg.seed;
    manifest.config = {{"html", args.html},
                       {"truth", args.truth},
                       {"n", std::to_string(cfg.n)},
                       {"strategy",
                        cfg.strategy == wepo::SampleStrategy::Distance ? "distance" : "random"},
                       {"threshold", std::to_string(cfg.replace_threshold)},
                       {"seed", std::to_string(cfg.seed)}};
    manifest.inputs[args.html] = wepo::file_digest(args.html);
    if (!args.out.empty()) manifest.outputs[args.out] = wepo::file_digest(args.out);
    if (!args.trace.empty()) manifest.outputs[args.trace] = wepo::file_digest(args.trace);
    emit_manifests(manifest);
}

struct BuildArgs {
    std::string corpus;
    std::string out;
    wepo::PruneConfig prune_cfg;
    wepo::SampleConfig sample_cfg;
    int threads = 1;
};

void run_build(const BuildArgs& args) {
    wepo::SampleConfig sample_cfg = args.sample_cfg;
    sample_cfg.seed = resolve_seed(sample_cfg.seed);
    wepo::PruneConfig prune_cfg = args.prune_cfg;
    prune_cfg.mode = wepo::PruneMode::Training;

    std::vector<wepo::StepRecord> corpus = wepo::read_corpus(args.corpus);
    wepo::DatasetResult result =
        wepo::generate_dataset(corpus, prune_cfg, sample_cfg,
                               wepo::PromptTemplate::standard(), args.threads);
    long written = wepo::write_dataset(result.pairs, args.out);

    wepo::RunManifest manifest;
    manifest.command = "build";
    manifest.global_seed = sample_cfg.seed;
    manifest.config = {{"corpus", args.corpus},
                       {"out", args.out},
                       {"k", std::to_string(prune_cfg.k)},
                       {"max-descendants", std::to_string(prune_cfg.max_descendants)},
                       {"n", std::to_string(sample_cfg.n)},
                       {"strategy", sample_cfg.strategy == wepo::SampleStrategy::Distance
                                        ? "distance"
                                        : "random"},
                       {"threshold", std::to_string(sample_cfg.replace_threshold)},
                       {"seed", std::to_string(sample_cfg.seed)},
                       {"threads", std::to_string(args.threads)}};
    manifest.inputs[args.corpus] = wepo::file_digest(args.corpus);
    manifest.outputs[args.out] = wepo::file_digest(args.out);
    emit_manifests(manifest);
    std::cout << "wrote " << written << " pairs from " << corpus.size() << " steps ("
              << result.skipped_steps << " skipped) -> " << args.out << "\n";
}

struct TrainArgs {
    std::string pairs;
    std::string out;
    std::string objective = "dpo";
    wepo::DpoConfig cfg;
};

void run_train_toy(const TrainArgs& args) {
    wepo::DpoConfig cfg = args.cfg;
    cfg.seed = resolve_seed(cfg.seed);
    wepo::Objective objective =
        args.objective == "sft" ? wepo::Objective::Sft : wepo::Objective::Dpo;

    std::vector<wepo::PreferencePair> pairs = wepo::read_dataset(args.pairs);
    wepo::PolicyTable policy = wepo::train(pairs, cfg, objective);
    wepo::save_policy(policy, args.out);

    wepo::RunManifest manifest;
    manifest.command = "train-toy";
    manifest.global_seed = cfg.seed;
    manifest.config = {{"pairs", args.pairs},
                       {"out", args.out},
                       {"objective", args.objective},
                       {"beta", std::to_string(cfg.beta)},
                       {"lr", std::to_string(cfg.learning_rate)},
                       {"warmup", std::to_string(cfg.warmup_fraction)},
                       {"epochs", std::to_string(cfg.epochs)},
                       {"seed", std::to_string(cfg.seed)}};
    manifest.inputs[args.pairs] = wepo::file_digest(args.pairs);
    manifest.outputs[args.out] = wepo::file_digest(args.out);
    emit_manifests(manifest);
    std::cout << "trained " << args.objective << " on " << pairs.size()
              << " pairs; mean margin " << wepo::mean_margin(policy, pairs) << " -> " << args.out
              << "\n";
}

struct EvalArgs {
    std::string preds;
    std::string corpus;
    std::string report;
};

void run_eval(const EvalArgs& args) {
    std::vector<wepo::Prediction> preds = wepo::read_predictions(args.preds);
    std::vector<wepo::StepRecord> corpus = wepo::read_corpus(args.corpus);
    wepo::MetricsReport report = wepo::aggregate(preds, corpus);
    wepo::write_report(report, args.report);

    wepo::RunManifest manifest;
    manifest.command = "eval";
    manifest.config = {{"preds", args.preds}, {"corpus", args.corpus}, {"report", args.report}};
    manifest.inputs[args.preds] = wepo::file_digest(args.preds);
    manifest.inputs[args.corpus] = wepo::file_digest(args.corpus);
    manifest.outputs[args.report] = wepo::file_digest(args.report);
    emit_manifests(manifest);
    std::cout << "ssr " << report.overall.ssr << " op_f1 " << report.overall.op_f1 << " over "
              << report.overall.steps << " steps -> " << args.report << "\n";
}

struct StatsArgs {
    std::string corpus;
    std::string out;
    std::string csv;
};

void run_stats(const StatsArgs& args) {
    std::vector<wepo::StepRecord> corpus = wepo::read_corpus(args.corpus);
    wepo::CorpusStats stats = wepo::compute_stats(corpus);
    wepo::write_stats(stats, args.out);
    if (!args.csv.empty()) wepo::write_histogram_csv(stats, args.csv);

    wepo::RunManifest manifest;
    manifest.command = "stats";
    manifest.config = {{"corpus", args.corpus}, {"out", args.out}, {"csv", args.csv}};
    manifest.inputs[args.corpus] = wepo::file_digest(args.corpus);
    manifest.outputs[args.out] = wepo::file_digest(args.out);
    if (!args.csv.empty()) manifest.outputs[args.csv] = wepo::file_digest(args.csv);
    emit_manifests(manifest);
    std::cout << "stats for " << stats.steps << " steps / " << stats.tasks << " tasks -> "
              << args.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"WEPO pipeline: preference-pair datasets from annotated web traces"};
    app.require_subcommand(1);
    app.set_version_flag("--version", wepo::kToolVersion);

    const std::map<std::string, wepo::SampleStrategy> strategy_map{
        {"distance", wepo::SampleStrategy::Distance}, {"random", wepo::SampleStrategy::Random}};
    const std::map<std::string, wepo::PruneMode> mode_map{
        {"training", wepo::PruneMode::Training}, {"inference", wepo::PruneMode::Inference}};

    CleanArgs clean_args;
    auto* clean_cmd = app.add_subcommand("clean", "Parse HTML, strip noise, re-serialize");
    clean_cmd->add_option("--html", clean_args.html, "Input HTML file")->required();
    clean_cmd->add_option("--out", clean_args.out, "Cleaned HTML output")->required();
    clean_cmd->callback([&] { run_clean(clean_args); });

    PruneArgs prune_args;
    auto* prune_cmd = app.add_subcommand("prune", "Keep top-k candidate snippets");
    prune_cmd->add_option("--html", prune_args.html, "Input HTML file")->required();
    prune_cmd->add_option("--out", prune_args.out, "Pruned HTML output")->required();
    prune_cmd->add_option("--scores", prune_args.scores, "TSV of candidate_id<TAB>score");
    prune_cmd->add_option("--intent", prune_args.intent,
                          "Intent text for overlap scores when no --scores file");
    prune_cmd->add_option("--truth", prune_args.truth,
                          "Ground-truth candidate id (required in training mode)");
    prune_cmd->add_option("--k", prune_args.cfg.k, "Candidates to keep")->capture_default_str();
    prune_cmd->add_option("--max-descendants", prune_args.cfg.max_descendants,
                          "Snippet growth limit")
        ->capture_default_str();
    prune_cmd->add_option("--mode", prune_args.cfg.mode, "training|inference")
        ->transform(CLI::CheckedTransformer(mode_map, CLI::ignore_case))
        ->capture_default_str();
    prune_cmd->callback([&] { run_prune(prune_args); });

    SampleArgs sample_args;
    auto* sample_cmd = app.add_subcommand("sample", "Draw negative actions for one page");
    sample_cmd->add_option("--html", sample_args.html, "Input HTML file")->required();
    sample_cmd->add_option("--truth", sample_args.truth, "Ground-truth action, e.g. 'CLICK [5]'")
        ->required();
    sample_cmd->add_option("--out", sample_args.out, "Negatives output (default stdout)");
    sample_cmd->add_option("--trace", sample_args.trace, "Debug TSV of (id, distance, op)");
    sample_cmd->add_option("--n", sample_args.cfg.n, "Negatives per step")->capture_default_str();
    sample_cmd->add_option("--strategy", sample_args.cfg.strategy, "distance|random")
        ->transform(CLI::CheckedTransformer(strategy_map, CLI::ignore_case))
        ->capture_default_str();
    sample_cmd->add_option("--threshold", sample_args.cfg.replace_threshold,
                           "CLICK replacement threshold")
        ->capture_default_str();
    sample_cmd->add_option("--seed", sample_args.cfg.seed, "RNG seed")->capture_default_str();
    sample_cmd->callback([&] { run_sample(sample_args); });

    BuildArgs build_args;
    auto* build_cmd = app.add_subcommand("build", "Corpus JSONL -> preference-pair JSONL");
    build_cmd->add_option("--corpus", build_args.corpus, "Step corpus JSONL")->required();
    build_cmd->add_option("--out", build_args.out, "Preference-pair JSONL output")->required();
    build_cmd->add_option("--k", build_args.prune_cfg.k, "Candidates to keep")
        ->capture_default_str();
    build_cmd->add_option("--max-descendants", build_args.prune_cfg.max_descendants,
                          "Snippet growth limit")
        ->capture_default_str();
    build_cmd->add_option("--n", build_args.sample_cfg.n, "Negatives per step")
        ->capture_default_str();
    build_cmd->add_option("--strategy", build_args.sample_cfg.strategy, "distance|random")
        ->transform(CLI::CheckedTransformer(strategy_map, CLI::ignore_case))
        ->capture_default_str();
    build_cmd->add_option("--threshold", build_args.sample_cfg.replace_threshold,
                          "CLICK replacement threshold")
        ->capture_default_str();
    build_cmd->add_option("--seed", build_args.sample_cfg.seed, "Global seed")
        ->capture_default_str();
    build_cmd->add_option("--threads", build_args.threads, "Worker threads")
        ->capture_default_str();
    build_cmd->callback([&] { run_build(build_args); });

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train-toy", "Train the toy policy on a pair dataset");
    train_cmd->add_option("--pairs", train_args.pairs, "Preference-pair JSONL")->required();
    train_cmd->add_option("--out", train_args.out, "Policy checkpoint output")->required();
    train_cmd->add_option("--objective", train_args.objective, "dpo|sft")
        ->check(CLI::IsMember({"dpo", "sft"}, CLI::ignore_case))
        ->capture_default_str();
    train_cmd->add_option("--beta", train_args.cfg.beta, "DPO beta")->capture_default_str();
    train_cmd->add_option("--lr", train_args.cfg.learning_rate, "Peak learning rate")
        ->capture_default_str();
    train_cmd->add_option("--warmup", train_args.cfg.warmup_fraction, "Warmup fraction")
        ->capture_default_str();
    train_cmd->add_option("--epochs", train_args.cfg.epochs, "Training epochs")
        ->capture_default_str();
    train_cmd->add_option("--seed", train_args.cfg.seed, "Shuffle seed")->capture_default_str();
    train_cmd->callback([&] { run_train_toy(train_args); });

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Score predictions against a corpus");
    eval_cmd->add_option("--preds", eval_args.preds, "Predictions JSONL")->required();
    eval_cmd->add_option("--corpus", eval_args.corpus, "Step corpus JSONL")->required();
    eval_cmd->add_option("--report", eval_args.report, "Metrics report JSON output")->required();
    eval_cmd->callback([&] { run_eval(eval_args); });

    StatsArgs stats_args;
    auto* stats_cmd = app.add_subcommand("stats", "Corpus analytics report");
    stats_cmd->add_option("--corpus", stats_args.corpus, "Step corpus JSONL")->required();
    stats_cmd->add_option("--out", stats_args.out, "Stats report JSON output")->required();
    stats_cmd->add_option("--csv", stats_args.csv, "Optional histogram CSV output");
    stats_cmd->callback([&] { run_stats(stats_args); });

    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        std::cout << wepo::kToolVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    } catch (const wepo::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
