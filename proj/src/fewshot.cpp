#include "eyesal/fewshot.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <ostream>
#include <limits>
#include <random>
#include <cstdio>

#include <json.hpp>

#include "eyesal/stats.hpp"

namespace eyesal {

LabelPair labels_for(Style style) {
    if (style == Style::positive || style == Style::negative) return {"Positive", "Negative"};
    return {"Polite", "Impolite"};
}

std::string label_of(Style style) {
    switch (style) {
        case Style::polite: return "Polite";
        case Style::impolite: return "Impolite";
        case Style::positive: return "Positive";
        case Style::negative: return "Negative";
    }
    return "?";
}

namespace {

/// Uniform integer in [0, bound) by rejection sampling.
std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = 0;
    do {
        x = gen();
    } while (x >= limit);
    return x % bound;
}

void append_block(std::string& out, const FewShotItem& item, const std::vector<std::string>* words,
                  const LabelPair& labels, bool with_answer) {
    out += "\nText: " + item.text;
    if (words != nullptr) {
        out += "\nImportant words: ";
        for (std::size_t i = 0; i < words->size(); ++i) {
            if (i != 0) out += ", ";
            out += (*words)[i];
        }
    }
    out += "\n" + labels.answer_cue();
    if (with_answer) out += " " + item.label;
}

}  // namespace

std::vector<FewShotPrompt> build_fewshot_prompts(std::span<const FewShotItem> items,
                                                 const std::map<std::string, std::vector<std::string>>& important,
                                                 const PromptSpec& spec, std::uint64_t seed) {
    if (!items.empty() && spec.k_shots > items.size() - 1) {
        throw ValidationError("k = " + std::to_string(spec.k_shots) + " exceeds the " +
                              std::to_string(items.size() - 1) + " available demonstrations");
    }
    const std::vector<std::string> no_words;
    auto words_for = [&](const FewShotItem& item) -> const std::vector<std::string>* {
        if (spec.baseline) return nullptr;
        const auto it = important.find(item.item_id);
        return it == important.end() ? &no_words : &it->second;
    };

    std::mt19937_64 gen(seed);
    std::vector<FewShotPrompt> prompts;
    prompts.reserve(items.size());
    for (std::size_t q = 0; q < items.size(); ++q) {
        std::vector<std::size_t> pool;
        pool.reserve(items.size() - 1);
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (i != q) pool.push_back(i);
        }
        // Partial Fisher-Yates: the first k entries become the sample.
        for (std::size_t i = 0; i < spec.k_shots; ++i) {
            const auto j = i + bounded(gen, pool.size() - i);
            std::swap(pool[i], pool[j]);
        }

        std::string text = spec.labels.task_line();
        for (std::size_t i = 0; i < spec.k_shots; ++i) {
            const auto& demo = items[pool[i]];
            append_block(text, demo, words_for(demo), spec.labels, true);
        }
        append_block(text, items[q], words_for(items[q]), spec.labels, false);
        prompts.push_back({items[q].item_id, items[q].item_id, items[q].label, std::move(text)});
    }
    return prompts;
}

std::vector<std::string> important_words(const Stimulus& stimulus, const BinaryMap& salient) {
    std::vector<std::string> words;
    for (const auto& ia : stimulus.ias) {
        if (!salient.salient.contains({stimulus.stimulus_id, ia.ia_index})) continue;
        std::string phrase;
        for (auto t : ia.token_indices) {
            const auto& tok = stimulus.tokens[t].text;
            if (is_punctuation(tok)) continue;
            if (!phrase.empty()) phrase += ' ';
            for (char c : tok) phrase += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
        if (!phrase.empty()) words.push_back(std::move(phrase));
    }
    return words;
}

std::optional<bool> grade_completion(std::string_view completion, std::string_view gold) {
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    const auto begin = std::find_if_not(completion.begin(), completion.end(), is_space);
    const auto end = std::find_if(begin, completion.end(), is_space);
    std::string_view word(begin, end);
    auto is_word_char = [](char c) {
        const auto u = static_cast<unsigned char>(c);
        return u >= 0x80 || std::isalnum(u);
    };
    while (!word.empty() && !is_word_char(word.front())) word.remove_prefix(1);
    while (!word.empty() && !is_word_char(word.back())) word.remove_suffix(1);
    if (word.empty()) return std::nullopt;
    if (word.size() != gold.size()) return false;
    for (std::size_t i = 0; i < word.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(word[i])) != std::tolower(static_cast<unsigned char>(gold[i]))) {
            return false;
        }
    }
    return true;
}

AccuracyReport score_fewshot_runs(std::span<const RoundCompletions> rounds, Diagnostics* diag) {
    if (rounds.empty()) throw ValidationError("no rounds to score");
    AccuracyReport report;
    for (std::size_t r = 0; r < rounds.size(); ++r) {
        const auto& round = rounds[r];
        if (round.gold.empty()) throw ValidationError("round " + std::to_string(r + 1) + " has no prompts");
        for (const auto& [id, text] : round.completions) {
            if (!round.gold.contains(id)) {
                throw ValidationError("round " + std::to_string(r + 1) + ": completion for unknown prompt '" + id + "'");
            }
        }
        std::size_t correct = 0;
        for (const auto& [id, gold] : round.gold) {
            const auto it = round.completions.find(id);
            if (it == round.completions.end()) {
                throw ValidationError("round " + std::to_string(r + 1) + ": no completion for prompt '" + id + "'");
            }
            const auto graded = grade_completion(it->second, gold);
            if (!graded) {
                warn(diag, "round " + std::to_string(r + 1) + ": unparseable completion for '" + id +
                               "' counted incorrect");
            } else if (*graded) {
                ++correct;
            }
        }
        report.round_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(round.gold.size()));
    }
    if (report.round_accuracy.size() >= 2) {
        const auto ci = mean_ci(report.round_accuracy);
        report.mean = ci.mean;
        report.half_width = ci.half_width;
    } else {
        report.mean = report.round_accuracy.front();
    }
    return report;
}

std::string AccuracyReport::formatted() const {
    if (half_width) return format_mean_ci({mean, *half_width});
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", mean);
    return buf;
}

void write_prompts(std::ostream& out, std::span<const FewShotPrompt> prompts, int round) {
    for (const auto& p : prompts) {
        nlohmann::json rec{{"prompt_id", p.prompt_id},
                           {"round", round},
                           {"item_id", p.item_id},
                           {"gold", p.gold},
                           {"prompt", p.text}};
        out << rec.dump() << '\n';
    }
}

}  // namespace eyesal
