#include "wepo/pairgen.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "wepo/error.hpp"
#include "wepo/hash.hpp"
#include "wepo/rng.hpp"

namespace wepo {

std::string_view split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::CrossDomain: return "cross_domain";
        case Split::CrossTask: return "cross_task";
        case Split::CrossWebsite: return "cross_website";
    }
    return "train";
}

std::optional<Split> split_from_name(std::string_view name) {
    if (name == "train") return Split::Train;
    if (name == "cross_domain") return Split::CrossDomain;
    if (name == "cross_task") return Split::CrossTask;
    if (name == "cross_website") return Split::CrossWebsite;
    return std::nullopt;
}

std::string step_digest(const StepRecord& step) {
    std::uint64_t h = fnv1a64(step.intent);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(step.raw_html, h);
    h = fnv1a64("\x1f", h);
    for (const Action& a : step.trajectory) {
        h = fnv1a64(serialize_action(a), h);
        h = fnv1a64("\x1e", h);
    }
    h = fnv1a64("\x1f", h);
    h = fnv1a64(serialize_action(step.truth), h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(split_name(step.split), h);
    return to_hex(h);
}

PromptTemplate PromptTemplate::standard() {
    PromptTemplate t;
    t.system_preamble =
        "You are a web navigation assistant operating a browser on behalf of a user.";
    t.instruction_block =
        "Read the HTML snippet of the current page, the actions already taken, and the "
        "user's task. Decide the single next action. Interactable elements are tagged "
        "with a numeric element id.";
    t.output_format_block =
        "Answer with exactly one line in one of these forms: CLICK [id] or TYPE [id] "
        "[text] or SELECT [id] [option].";
    return t;
}

std::string build_prompt(const StepRecord& step, const DomTree& pruned,
                         const PromptTemplate& tmpl) {
    std::string out;
    out += tmpl.system_preamble;
    out += "\n\n";
    out += tmpl.instruction_block;
    out += "\n\n";
    out += tmpl.output_format_block;
    out += "\n\nHTML:\n";
    out += serialize_with_markers(pruned);
    out += "\n\nPrevious actions:\n";
    if (step.trajectory.empty()) {
        out += "None\n";
    } else {
        for (const Action& a : step.trajectory) {
            out += serialize_action(a);
            out += "\n";
        }
    }
    out += "\nTask: ";
    out += step.intent;
    out += "\n";
    return out;
}

std::vector<int> extract_element_ids(const std::string& prompt) {
    static const std::string marker = "element_id=\"";
    std::vector<int> ids;
    std::size_t pos = 0;
    while ((pos = prompt.find(marker, pos)) != std::string::npos) {
        pos += marker.size();
        std::size_t end = pos;
        while (end < prompt.size() && prompt[end] >= '0' && prompt[end] <= '9') ++end;
        if (end > pos && end < prompt.size() && prompt[end] == '"') {
            ids.push_back(std::stoi(prompt.substr(pos, end - pos)));
        }
        pos = end;
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

std::vector<PreferencePair> build_pairs(const StepRecord& step, const PruneConfig& cfg,
                                        const SampleConfig& scfg, const PromptTemplate& tmpl) {
    DomTree tree = assign_candidate_ids(clean(parse_html(step.raw_html)));
    if (!find_candidate(tree, step.truth.element).has_value()) {
        throw MissingTruthError("build_pairs: truth element " +
                                std::to_string(step.truth.element) +
                                " does not resolve on the page");
    }

    PruneConfig train_cfg = cfg;
    train_cfg.mode = PruneMode::Training;
    CandidateScores scores = fallback_scores(tree, step.intent);
    DomTree pruned = prune_to_k(tree, scores, step.truth.element, train_cfg);

    if (candidate_nodes(pruned).size() < 2) {
        throw SkippedStep("build_pairs: fewer than two candidates after pruning");
    }

    std::vector<NegativeSample> negatives = build_negative_actions(pruned, step.truth, scfg);

    PreferencePair base;
    base.prompt = build_prompt(step, pruned, tmpl);
    base.chosen = serialize_action(step.truth);
    base.meta.step_digest = step_digest(step);
    base.meta.strategy = scfg.strategy;
    base.meta.seed = scfg.seed;

    std::vector<PreferencePair> out;
    out.reserve(negatives.size());
    for (std::size_t i = 0; i < negatives.size(); ++i) {
        PreferencePair pair = base;
        pair.rejected = serialize_action(negatives[i].action);
        pair.meta.negative_rank = static_cast<int>(i);
        pair.meta.distance = negatives[i].distance;
        out.push_back(std::move(pair));
    }
    return out;
}

namespace {

const char* strategy_name(SampleStrategy s) {
    return s == SampleStrategy::Distance ? "distance" : "random";
}

SampleStrategy strategy_from_json(const std::string& name, long line) {
    if (name == "distance") return SampleStrategy::Distance;
    if (name == "random") return SampleStrategy::Random;
    throw ParseError("unknown strategy '" + name + "'", line);
}

Action parse_action_or_throw(const std::string& s, long line) {
    auto a = parse_action(s);
    if (!a.has_value()) throw ParseError("unparseable action '" + s + "'", line);
    return *a;
}

}  // namespace

std::vector<StepRecord> read_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_corpus: cannot open " + path);
    std::vector<StepRecord> out;
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
            StepRecord step;
            step.intent = record.at("intent").get<std::string>();
            step.raw_html = record.at("raw_html").get<std::string>();
            for (const auto& item : record.at("trajectory")) {
                step.trajectory.push_back(
                    parse_action_or_throw(item.get<std::string>(), line_no));
            }
            step.truth = parse_action_or_throw(record.at("truth").get<std::string>(), line_no);
            auto split = split_from_name(record.at("split").get<std::string>());
            if (!split.has_value()) {
                throw ParseError("unknown split '" + record.at("split").get<std::string>() + "'",
                                 line_no);
            }
            step.split = *split;
            out.push_back(std::move(step));
        } catch (const ParseError&) {
            throw;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad step record: ") + e.what(), line_no);
        }
    }
    return out;
}

void write_corpus(const std::vector<StepRecord>& steps, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_corpus: cannot open " + path);
    for (const StepRecord& step : steps) {
        nlohmann::json record;
        record["intent"] = step.intent;
        record["raw_html"] = step.raw_html;
        nlohmann::json traj = nlohmann::json::array();
        for (const Action& a : step.trajectory) traj.push_back(serialize_action(a));
        record["trajectory"] = std::move(traj);
        record["truth"] = serialize_action(step.truth);
        record["split"] = std::string(split_name(step.split));
        out << record.dump() << "\n";
    }
    if (!out) throw IoError("write_corpus: write failed for " + path);
}

namespace {

long ws_token_count(const std::string& text) {
    long count = 0;
    bool in_token = false;
    for (char c : text) {
        bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
        if (!space && !in_token) ++count;
        in_token = !space;
    }
    return count;
}

}  // namespace

std::string pair_to_json_line(const PreferencePair& pair) {
    nlohmann::json record;
    record["prompt"] = pair.prompt;
    record["prompt_length"] = ws_token_count(pair.prompt);
    record["chosen"] = pair.chosen;
    record["rejected"] = pair.rejected;
    record["meta"] = {
        {"step_digest", pair.meta.step_digest},
        {"negative_rank", pair.meta.negative_rank},
        {"distance", pair.meta.distance},
        {"strategy", strategy_name(pair.meta.strategy)},
        {"seed", pair.meta.seed},
    };
    return record.dump();
}

long write_dataset(const std::vector<PreferencePair>& pairs, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_dataset: cannot open " + path);
    long count = 0;
    for (const PreferencePair& pair : pairs) {
        out << pair_to_json_line(pair) << "\n";
        ++count;
    }
    if (!out) throw IoError("write_dataset: write failed for " + path);
    return count;
}

std::vector<PreferencePair> read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_dataset: cannot open " + path);
    std::vector<PreferencePair> out;
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
            PreferencePair pair;
            pair.prompt = record.at("prompt").get<std::string>();
            pair.chosen = record.at("chosen").get<std::string>();
            pair.rejected = record.at("rejected").get<std::string>();
            const auto& meta = record.at("meta");
            pair.meta.step_digest = meta.at("step_digest").get<std::string>();
            pair.meta.negative_rank = meta.at("negative_rank").get<int>();
            pair.meta.distance = meta.at("distance").get<int>();
            pair.meta.strategy = strategy_from_json(meta.at("strategy").get<std::string>(), line_no);
            pair.meta.seed = meta.at("seed").get<std::uint64_t>();
            out.push_back(std::move(pair));
        } catch (const ParseError&) {
            throw;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad pair record: ") + e.what(), line_no);
        }
    }
    return out;
}

DatasetResult generate_dataset(const std::vector<StepRecord>& corpus, const PruneConfig& cfg,
                               const SampleConfig& scfg, const PromptTemplate& tmpl,
                               int threads) {
    struct StepOutput {
        std::vector<PreferencePair> pairs;
        bool skipped = false;
    };
    std::vector<StepOutput> results(corpus.size());

    auto process = [&](std::size_t index) {
        SampleConfig step_cfg = scfg;
        step_cfg.seed = derive_seed(scfg.seed, index);
        try {
            results[index].pairs = build_pairs(corpus[index], cfg, step_cfg, tmpl);
        } catch (const SkippedStep&) {
            results[index].skipped = true;
        }
    };

    if (threads <= 1 || corpus.size() < 2) {
        for (std::size_t i = 0; i < corpus.size(); ++i) process(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto worker = [&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= corpus.size()) return;
                try {
                    process(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        int count = std::min<int>(threads, static_cast<int>(corpus.size()));
        pool.reserve(static_cast<std::size_t>(count));
        for (int t = 0; t < count; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }

    DatasetResult out;
    for (StepOutput& r : results) {
        if (r.skipped) {
            ++out.skipped_steps;
        } else {
            for (PreferencePair& p : r.pairs) out.pairs.push_back(std::move(p));
        }
    }
    return out;
}

}  // namespace wepo
