#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wepo/action.hpp"
#include "wepo/dom.hpp"
#include "wepo/pairgen.hpp"

namespace wepo {

// Step success rate, Operation F1, and the element-distance diagnostic over
// predicted vs. ground-truth actions, aggregated per split.

struct Prediction {
    std::string step_digest;
    std::string raw;                       // action string as emitted by the model
    std::optional<Action> predicted;       // nullopt = unparseable, always a miss
};

struct SplitMetrics {
    long steps = 0;                        // predictions scored in this split
    long successes = 0;
    double ssr = 0.0;
    double op_f1 = 0.0;                    // macro average; 0 when op_f1_steps == 0
    long op_f1_steps = 0;                  // TYPE/SELECT truths contributing to op_f1
    double mean_element_distance = 0.0;    // over mismatched, resolvable elements
    long mismatched_elements = 0;
    long unmatched_elements = 0;           // predicted element absent from the page
    std::map<std::string, long> op_counts; // truth op -> count
};

struct MetricsReport {
    SplitMetrics overall;
    std::map<std::string, SplitMetrics> per_split;
    std::map<int, long> distance_histogram;
    long missing_predictions = 0;          // corpus steps with no prediction
};

// Trim, collapse internal whitespace, and ASCII-lowercase.
std::string normalize_value(const std::string& value);

bool step_success(const std::optional<Action>& pred, const Action& truth);

// Multiset token F1 between "op value" strings after normalization.
double token_f1(const std::string& pred_text, const std::string& truth_text);

// Macro-averaged token F1 over steps whose truth op is TYPE or SELECT.
double operation_f1(const std::vector<Prediction>& preds, const std::vector<Action>& truths);

int element_distance(const DomTree& tree, int pred_element, int truth_element);

MetricsReport aggregate(const std::vector<Prediction>& preds,
                        const std::vector<StepRecord>& corpus);

std::vector<Prediction> read_predictions(const std::string& path);
void write_predictions(const std::vector<Prediction>& preds, const std::string& path);

std::string report_to_json(const MetricsReport& report);
void write_report(const MetricsReport& report, const std::string& path);

}  // namespace wepo
