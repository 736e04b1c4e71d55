#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wepo/action.hpp"
#include "wepo/dom.hpp"
#include "wepo/pruner.hpp"
#include "wepo/sampler.hpp"

namespace wepo {

enum class Split { Train, CrossDomain, CrossTask, CrossWebsite };

std::string_view split_name(Split s);
std::optional<Split> split_from_name(std::string_view name);

// One annotated interaction step as stored in the corpus JSONL.
struct StepRecord {
    std::string intent;
    std::string raw_html;
    std::vector<Action> trajectory;  // prior actions, oldest first
    Action truth;
    Split split = Split::Train;
};

// Content hash identifying a step across corpus and prediction files.
std::string step_digest(const StepRecord& step);

struct PairMeta {
    std::string step_digest;
    int negative_rank = 0;
    int distance = 0;
    SampleStrategy strategy = SampleStrategy::Distance;
    std::uint64_t seed = 0;
};

struct PreferencePair {
    std::string prompt;
    std::string chosen;
    std::string rejected;
    PairMeta meta;
};

// Three-block prompt scaffold: who the model is, how to act, and what shape
// the answer takes. Wording is configuration; the rendered prompt always
// carries the blocks in this order.
struct PromptTemplate {
    std::string system_preamble;
    std::string instruction_block;
    std::string output_format_block;

    static PromptTemplate standard();
};

// Deterministic concatenation of template blocks, marker-serialized pruned
// HTML, the trajectory (one action per line, "None" when empty) and the
// intent.
std::string build_prompt(const StepRecord& step, const DomTree& pruned,
                         const PromptTemplate& tmpl);

// Candidate ids referenced by element_id="N" markers in a prompt, ascending.
std::vector<int> extract_element_ids(const std::string& prompt);

// Full per-step pipeline: parse, clean, assign candidate ids, prune with the
// truth force-included, sample negatives, render one shared prompt and emit
// one pair per negative. Throws SkippedStep when fewer than two candidates
// survive pruning.
std::vector<PreferencePair> build_pairs(const StepRecord& step, const PruneConfig& cfg,
                                        const SampleConfig& scfg, const PromptTemplate& tmpl);

// JSONL corpus and dataset IO.
std::vector<StepRecord> read_corpus(const std::string& path);
void write_corpus(const std::vector<StepRecord>& steps, const std::string& path);
std::vector<PreferencePair> read_dataset(const std::string& path);
long write_dataset(const std::vector<PreferencePair>& pairs, const std::string& path);

std::string pair_to_json_line(const PreferencePair& pair);

struct DatasetResult {
    std::vector<PreferencePair> pairs;
    long skipped_steps = 0;
};

// Runs build_pairs over a corpus with per-step seeds derived from the global
// seed, so results are identical for any thread count and any processing
// order. threads <= 1 runs sequentially.
DatasetResult generate_dataset(const std::vector<StepRecord>& corpus, const PruneConfig& cfg,
                               const SampleConfig& scfg, const PromptTemplate& tmpl,
                               int threads = 1);

}  // namespace wepo
