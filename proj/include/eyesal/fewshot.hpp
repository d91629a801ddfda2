#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eyesal/error.hpp"
#include "eyesal/saliency.hpp"
#include "eyesal/stimulus.hpp"

namespace eyesal {

struct LabelPair {
    std::string first = "Polite";
    std::string second = "Impolite";

    std::string task_line() const { return "Decide whether the following text is " + first + " or " + second + "."; }
    std::string answer_cue() const { return first + " or " + second + ":"; }
};

/// Label pair for a style family: Polite/Impolite or Positive/Negative.
LabelPair labels_for(Style style);
std::string label_of(Style style);

struct FewShotItem {
    std::string item_id;
    std::string text;
    std::string label;
};

struct PromptSpec {
    LabelPair labels;
    std::size_t k_shots = 0;
    /// Without important words the "Important words:" lines are omitted.
    bool baseline = false;
    std::vector<std::uint64_t> round_seeds{1, 2, 3, 4, 5};
};

struct FewShotPrompt {
    std::string prompt_id;
    std::string item_id;
    std::string gold;
    std::string text;
};

/// One prompt per item. For each query, k demonstrations are drawn
/// uniformly without replacement from the other items using a generator
/// seeded with `seed`. Throws ValidationError when k exceeds the pool.
std::vector<FewShotPrompt> build_fewshot_prompts(std::span<const FewShotItem> items,
                                                 const std::map<std::string, std::vector<std::string>>& important,
                                                 const PromptSpec& spec, std::uint64_t seed);

/// Lower-cased IA texts of the salient IAs of a stimulus, in reading order,
/// with punctuation tokens dropped.
std::vector<std::string> important_words(const Stimulus& stimulus, const BinaryMap& salient);

struct RoundCompletions {
    std::map<std::string, std::string> gold;         // prompt_id -> label
    std::map<std::string, std::string> completions;  // prompt_id -> model output
};

struct AccuracyReport {
    std::vector<double> round_accuracy;
    double mean = 0.0;
    std::optional<double> half_width;  // needs at least two rounds

    std::string formatted() const;
};

/// True when the completion's first whitespace-delimited word, stripped of
/// surrounding punctuation, equals the gold label ignoring case.
std::optional<bool> grade_completion(std::string_view completion, std::string_view gold);

/// Accuracy per round plus mean and 95% CI over rounds. A prompt without a
/// completion is an error; an empty completion counts as incorrect.
AccuracyReport score_fewshot_runs(std::span<const RoundCompletions> rounds, Diagnostics* diag = nullptr);

void write_prompts(std::ostream& out, std::span<const FewShotPrompt> prompts, int round);

}  // namespace eyesal
