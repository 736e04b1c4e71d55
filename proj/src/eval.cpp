#include "wepo/eval.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "wepo/error.hpp"

namespace wepo {

namespace {

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

// "op value" text used by Operation F1; element ids are deliberately absent.
std::string op_value_text(const Action& a) {
    std::string out(op_name(a.op));
    if (a.value.has_value()) {
        out += " ";
        out += *a.value;
    }
    return out;
}

struct Acc {
    long steps = 0;
    long successes = 0;
    double f1_sum = 0.0;
    long f1_steps = 0;
    long dist_sum = 0;
    long mismatched = 0;
    long unmatched = 0;
    std::map<std::string, long> op_counts;
};

SplitMetrics finalize(const Acc& a) {
    SplitMetrics m;
    m.steps = a.steps;
    m.successes = a.successes;
    m.ssr = a.steps > 0 ? static_cast<double>(a.successes) / static_cast<double>(a.steps) : 0.0;
    m.op_f1 = a.f1_steps > 0 ? a.f1_sum / static_cast<double>(a.f1_steps) : 0.0;
    m.op_f1_steps = a.f1_steps;
    m.mean_element_distance =
        a.mismatched > 0 ? static_cast<double>(a.dist_sum) / static_cast<double>(a.mismatched)
                         : 0.0;
    m.mismatched_elements = a.mismatched;
    m.unmatched_elements = a.unmatched;
    m.op_counts = a.op_counts;
    return m;
}

nlohmann::json metrics_to_json(const SplitMetrics& m) {
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [op, n] : m.op_counts) counts[op] = n;
    return {
        {"steps", m.steps},
        {"successes", m.successes},
        {"ssr", m.ssr},
        {"op_f1", m.op_f1},
        {"op_f1_steps", m.op_f1_steps},
        {"mean_element_distance", m.mean_element_distance},
        {"mismatched_elements", m.mismatched_elements},
        {"unmatched_elements", m.unmatched_elements},
        {"op_counts", counts},
    };
}

}  // namespace

std::string normalize_value(const std::string& value) {
    std::string out;
    bool pending_space = false;
    for (char c : value) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

bool step_success(const std::optional<Action>& pred, const Action& truth) {
    if (!pred.has_value()) return false;
    if (pred->element != truth.element || pred->op != truth.op) return false;
    if (truth.op == OpKind::Click) return true;
    return normalize_value(pred->value.value_or("")) == normalize_value(truth.value.value_or(""));
}

double token_f1(const std::string& pred_text, const std::string& truth_text) {
    std::vector<std::string> pred_tokens = split_ws(normalize_value(pred_text));
    std::vector<std::string> truth_tokens = split_ws(normalize_value(truth_text));
    if (pred_tokens.empty() || truth_tokens.empty()) return 0.0;

    std::unordered_map<std::string, long> remaining;
    for (const std::string& t : truth_tokens) ++remaining[t];
    long overlap = 0;
    for (const std::string& t : pred_tokens) {
        auto it = remaining.find(t);
        if (it != remaining.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    double precision = static_cast<double>(overlap) / static_cast<double>(pred_tokens.size());
    double recall = static_cast<double>(overlap) / static_cast<double>(truth_tokens.size());
    return 2.0 * precision * recall / (precision + recall);
}

double operation_f1(const std::vector<Prediction>& preds, const std::vector<Action>& truths) {
    if (preds.size() != truths.size()) {
        throw Error("operation_f1: prediction and truth lists are not aligned");
    }
    double sum = 0.0;
    long count = 0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        if (truths[i].op == OpKind::Click) continue;
        std::string pred_text =
            preds[i].predicted.has_value() ? op_value_text(*preds[i].predicted) : "";
        sum += token_f1(pred_text, op_value_text(truths[i]));
        ++count;
    }
    if (count == 0) throw EmptyEvalSetError("operation_f1: no TYPE or SELECT truths");
    return sum / static_cast<double>(count);
}

int element_distance(const DomTree& tree, int pred_element, int truth_element) {
    auto pred_node = find_candidate(tree, pred_element);
    if (!pred_node.has_value()) {
        throw UnknownElementError("element_distance: no candidate " +
                                  std::to_string(pred_element));
    }
    auto truth_node = find_candidate(tree, truth_element);
    if (!truth_node.has_value()) {
        throw UnknownElementError("element_distance: no candidate " +
                                  std::to_string(truth_element));
    }
    return step_distance(tree, *pred_node, *truth_node);
}

MetricsReport aggregate(const std::vector<Prediction>& preds,
                        const std::vector<StepRecord>& corpus) {
    std::unordered_map<std::string, std::size_t> by_digest;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        by_digest.emplace(step_digest(corpus[i]), i);
    }

    Acc overall;
    std::map<std::string, Acc> per_split;
    std::map<int, long> histogram;
    std::unordered_set<std::string> scored;
    std::unordered_map<std::size_t, DomTree> trees;

    for (const Prediction& pred : preds) {
        auto it = by_digest.find(pred.step_digest);
        if (it == by_digest.end()) {
            throw MissingStepError("aggregate: prediction for unknown step " + pred.step_digest);
        }
        if (!scored.insert(pred.step_digest).second) {
            throw DuplicatePredictionError("aggregate: duplicate prediction for step " +
                                           pred.step_digest);
        }
        const StepRecord& step = corpus[it->second];
        Acc* accs[2] = {&overall, &per_split[std::string(split_name(step.split))]};

        bool success = step_success(pred.predicted, step.truth);
        bool scoreable_f1 = step.truth.op != OpKind::Click;
        double f1 = 0.0;
        if (scoreable_f1) {
            std::string pred_text =
                pred.predicted.has_value() ? op_value_text(*pred.predicted) : "";
            f1 = token_f1(pred_text, op_value_text(step.truth));
        }

        bool mismatched = pred.predicted.has_value() && pred.predicted->element != step.truth.element;
        int distance = -1;
        bool unmatched = false;
        if (mismatched) {
            auto tree_it = trees.find(it->second);
            if (tree_it == trees.end()) {
                tree_it = trees.emplace(it->second,
                                        assign_candidate_ids(clean(parse_html(step.raw_html))))
                              .first;
            }
            auto pred_node = find_candidate(tree_it->second, pred.predicted->element);
            auto truth_node = find_candidate(tree_it->second, step.truth.element);
            if (pred_node.has_value() && truth_node.has_value()) {
                distance = step_distance(tree_it->second, *pred_node, *truth_node);
                ++histogram[distance];
            } else {
                unmatched = true;
            }
        }

        for (Acc* acc : accs) {
            ++acc->steps;
            if (success) ++acc->successes;
            if (scoreable_f1) {
                acc->f1_sum += f1;
                ++acc->f1_steps;
            }
            if (distance >= 0) {
                acc->dist_sum += distance;
                ++acc->mismatched;
            }
            if (unmatched) ++acc->unmatched;
            ++acc->op_counts[std::string(op_name(step.truth.op))];
        }
    }

    MetricsReport report;
    report.overall = finalize(overall);
    for (const auto& [split, acc] : per_split) report.per_split[split] = finalize(acc);
    report.distance_histogram = histogram;
    for (const StepRecord& step : corpus) {
        if (scored.count(step_digest(step)) == 0) ++report.missing_predictions;
    }
    return report;
}

std::vector<Prediction> read_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_predictions: cannot open " + path);
    std::vector<Prediction> out;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object()) {
            throw ParseError("invalid JSON record", line_no);
        }
        try {
            Prediction pred;
            pred.step_digest = record.at("step_digest").get<std::string>();
            pred.raw = record.at("action_string").get<std::string>();
            pred.predicted = parse_action(pred.raw);
            out.push_back(std::move(pred));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad prediction record: ") + e.what(), line_no);
        }
    }
    return out;
}

void write_predictions(const std::vector<Prediction>& preds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_predictions: cannot open " + path);
    for (const Prediction& pred : preds) {
        nlohmann::json record;
        record["step_digest"] = pred.step_digest;
        record["action_string"] = pred.raw;
        out << record.dump() << "\n";
    }
    if (!out) throw IoError("write_predictions: write failed for " + path);
}

std::string report_to_json(const MetricsReport& report) {
    nlohmann::json splits = nlohmann::json::object();
    for (const auto& [name, metrics] : report.per_split) {
        splits[name] = metrics_to_json(metrics);
    }
    nlohmann::json histogram = nlohmann::json::object();
    for (const auto& [distance, count] : report.distance_histogram) {
        histogram[std::to_string(distance)] = count;
    }
    nlohmann::json doc = {
        {"overall", metrics_to_json(report.overall)},
        {"splits", splits},
        {"distance_histogram", histogram},
        {"missing_predictions", report.missing_predictions},
    };
    return doc.dump(2);
}

void write_report(const MetricsReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_report: cannot open " + path);
    out << report_to_json(report) << "\n";
    if (!out) throw IoError("write_report: write failed for " + path);
}

}  // namespace wepo
