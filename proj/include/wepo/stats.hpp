#pragma once

#include <map>
#include <string>
#include <vector>

#include "wepo/pairgen.hpp"

namespace wepo {

// Corpus analytics: HTML token lengths, action-kind proportions, trajectory
// lengths (steps grouped by intent), and intent word frequencies.

inline constexpr long kTokenBucketWidth = 100;

struct CorpusStats {
    long steps = 0;
    long tasks = 0;                                    // distinct intents
    std::map<long, long> token_length_histogram;       // bucket start -> count
    double mean_token_length = 0.0;
    std::map<std::string, long> op_counts;             // truth op -> count
    std::map<std::string, double> action_proportions;  // truth op -> fraction
    std::map<long, long> trajectory_length_histogram;  // steps per task -> count
    double mean_trajectory_length = 0.0;
    std::map<std::string, long> word_frequencies;      // stop-worded intent words
};

struct ClickRatioDiagnostic {
    bool has_non_click = false;
    double ratio = 0.0;        // CLICK / (TYPE + SELECT); valid when has_non_click
    bool in_range = false;     // ratio within [4, 6]
};

CorpusStats compute_stats(const std::vector<StepRecord>& corpus);

ClickRatioDiagnostic check_click_ratio(const CorpusStats& stats);

std::string stats_to_json(const CorpusStats& stats);
void write_stats(const CorpusStats& stats, const std::string& path);

// Long-format CSV of both histograms: histogram,bucket,count.
void write_histogram_csv(const CorpusStats& stats, const std::string& path);

}  // namespace wepo
