#include "wepo/stats.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "wepo/action.hpp"
#include "wepo/error.hpp"

namespace wepo {

namespace {

constexpr std::array<const char*, 22> kStopWords = {
    "a",  "an",  "the",  "to",   "of",   "in",   "on",   "for",  "and", "or",  "with",
    "at", "by",  "from", "is",   "it",   "this", "that", "your", "my",  "me",  "i",
};

bool is_stop_word(const std::string& word) {
    for (const char* s : kStopWords) {
        if (word == s) return true;
    }
    return false;
}

long count_ws_tokens(const std::string& text) {
    long count = 0;
    bool in_token = false;
    for (char c : text) {
        bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_token) ++count;
        in_token = !space;
    }
    return count;
}

// Lowercased alphanumeric runs; punctuation separates words.
std::vector<std::string> intent_words(const std::string& intent) {
    std::vector<std::string> out;
    std::string word;
    for (char c : intent) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!word.empty()) {
            out.push_back(word);
            word.clear();
        }
    }
    if (!word.empty()) out.push_back(word);
    return out;
}

nlohmann::json histogram_to_json(const std::map<long, long>& histogram) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [bucket, count] : histogram) out[std::to_string(bucket)] = count;
    return out;
}

}  // namespace

CorpusStats compute_stats(const std::vector<StepRecord>& corpus) {
    if (corpus.empty()) throw EmptyInputError("compute_stats: empty corpus");

    CorpusStats stats;
    stats.steps = static_cast<long>(corpus.size());

    long token_total = 0;
    std::unordered_map<std::string, long> steps_per_task;
    for (const StepRecord& step : corpus) {
        long tokens = count_ws_tokens(step.raw_html);
        token_total += tokens;
        ++stats.token_length_histogram[(tokens / kTokenBucketWidth) * kTokenBucketWidth];

        ++stats.op_counts[std::string(op_name(step.truth.op))];
        ++steps_per_task[step.intent];

        for (const std::string& word : intent_words(step.intent)) {
            if (!is_stop_word(word)) ++stats.word_frequencies[word];
        }
    }

    stats.mean_token_length = static_cast<double>(token_total) / static_cast<double>(stats.steps);
    for (const auto& [op, count] : stats.op_counts) {
        stats.action_proportions[op] =
            static_cast<double>(count) / static_cast<double>(stats.steps);
    }

    stats.tasks = static_cast<long>(steps_per_task.size());
    long length_total = 0;
    for (const auto& [intent, length] : steps_per_task) {
        ++stats.trajectory_length_histogram[length];
        length_total += length;
    }
    stats.mean_trajectory_length =
        static_cast<double>(length_total) / static_cast<double>(stats.tasks);
    return stats;
}

ClickRatioDiagnostic check_click_ratio(const CorpusStats& stats) {
    auto count_of = [&](const char* op) {
        auto it = stats.op_counts.find(op);
        return it != stats.op_counts.end() ? it->second : 0L;
    };
    long clicks = count_of("CLICK");
    long others = count_of("TYPE") + count_of("SELECT");

    ClickRatioDiagnostic diag;
    if (others == 0) return diag;
    diag.has_non_click = true;
    diag.ratio = static_cast<double>(clicks) / static_cast<double>(others);
    diag.in_range = diag.ratio >= 4.0 && diag.ratio <= 6.0;
    return diag;
}

std::string stats_to_json(const CorpusStats& stats) {
    nlohmann::json ops = nlohmann::json::object();
    for (const auto& [op, count] : stats.op_counts) ops[op] = count;
    nlohmann::json proportions = nlohmann::json::object();
    for (const auto& [op, p] : stats.action_proportions) proportions[op] = p;
    nlohmann::json words = nlohmann::json::object();
    for (const auto& [word, count] : stats.word_frequencies) words[word] = count;

    ClickRatioDiagnostic diag = check_click_ratio(stats);
    nlohmann::json click_ratio;
    if (diag.has_non_click) {
        click_ratio = {{"ratio", diag.ratio}, {"in_range", diag.in_range}};
    } else {
        click_ratio = {{"note", "no non-click actions"}};
    }

    nlohmann::json doc = {
        {"steps", stats.steps},
        {"tasks", stats.tasks},
        {"token_length_histogram", histogram_to_json(stats.token_length_histogram)},
        {"mean_token_length", stats.mean_token_length},
        {"op_counts", ops},
        {"action_proportions", proportions},
        {"trajectory_length_histogram", histogram_to_json(stats.trajectory_length_histogram)},
        {"mean_trajectory_length", stats.mean_trajectory_length},
        {"word_frequencies", words},
        {"click_ratio", click_ratio},
    };
    return doc.dump(2);
}

void write_stats(const CorpusStats& stats, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_stats: cannot open " + path);
    out << stats_to_json(stats) << "\n";
    if (!out) throw IoError("write_stats: write failed for " + path);
}

void write_histogram_csv(const CorpusStats& stats, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_histogram_csv: cannot open " + path);
    out << "histogram,bucket,count\n";
    for (const auto& [bucket, count] : stats.token_length_histogram) {
        out << "token_length," << bucket << "," << count << "\n";
    }
    for (const auto& [bucket, count] : stats.trajectory_length_histogram) {
        out << "trajectory_length," << bucket << "," << count << "\n";
    }
    if (!out) throw IoError("write_histogram_csv: write failed for " + path);
}

}  // namespace wepo
