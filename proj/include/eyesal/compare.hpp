#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eyesal/error.hpp"
#include "eyesal/metrics.hpp"
#include "eyesal/saliency.hpp"
#include "eyesal/stimulus.hpp"

namespace eyesal {

enum class TokenSource { surprisal, integrated_gradients, human_annotation, other };

/// Accepts "surprisal", "integrated_gradients"/"ig", "human_annotation"/"human".
TokenSource parse_token_source(std::string_view s);
std::string_view to_string(TokenSource s);

/// (stimulus_id, token_index)
using TokenKey = std::pair<std::string, std::size_t>;

struct TokenScoreSet {
    TokenSource source = TokenSource::other;
    std::map<TokenKey, double> scores;
    std::string units;
};

/// Token score file: "# units: ..." header line, then columns
/// source, stimulus_id, token_index, score. One set per distinct source.
std::vector<TokenScoreSet> read_token_scores(std::istream& in, const std::string& source_name = "<stream>");
std::vector<TokenScoreSet> read_token_scores(const std::string& path);
void write_token_scores(std::ostream& out, const TokenScoreSet& set);

/// Annotation file: stimulus_id, token_index, annotator_id, highlighted.
/// A token's score is the fraction of the stimulus's annotators who
/// highlighted it.
TokenScoreSet read_annotations(std::istream& in, const std::string& source_name = "<stream>");
TokenScoreSet read_annotations(const std::string& path);

/// Per-IA score: sum of token scores for surprisal, mean otherwise.
/// Throws ValidationError when a member token has no score.
SaliencyMap align_token_scores(const TokenScoreSet& scores, const Stimulus& stimulus);
SaliencyMap align_token_scores(const TokenScoreSet& scores, std::span<const Stimulus> stimuli);

/// |a n b| / |a u b|; 1 when both are empty.
double jaccard(const BinaryMap& a, const BinaryMap& b);

struct VennPartition {
    /// Region counts indexed by membership mask (bit 0 = first map); index 0 unused.
    std::array<std::size_t, 8> regions{};
    std::size_t union_size = 0;
    double three_way_iou = 0.0;

    std::size_t region(bool in_a, bool in_b, bool in_c) const {
        return regions[(in_a ? 1u : 0u) | (in_b ? 2u : 0u) | (in_c ? 4u : 0u)];
    }
};

VennPartition venn_partition(std::span<const BinaryMap> maps);

struct PosHistogram {
    std::map<std::string, double> proportions;
    std::size_t token_count = 0;
};

/// Collapses a Penn tag to its two-letter family (VBG -> VB).
std::string coarse_pos(std::string_view tag);

/// Tag proportions over all tokens inside salient IAs.
PosHistogram pos_distribution(const BinaryMap& map, const StimulusIndex& stimuli, Diagnostics* diag = nullptr);

/// Highest proportions first; ties broken by tag.
std::vector<std::pair<std::string, double>> top_k(const PosHistogram& hist, std::size_t k);

using CorrelationMatrix = std::vector<std::vector<std::optional<double>>>;

/// Pairwise Pearson r over keys scored by both maps; empty entries where
/// fewer than two keys are shared or a side is constant.
CorrelationMatrix correlation_matrix(std::span<const SaliencyMap> maps);

struct ComparisonReport {
    std::vector<std::string> sources;
    std::vector<BinaryMap> binary;
    std::vector<std::vector<double>> jaccard;
    CorrelationMatrix pearson;
    std::optional<VennPartition> venn;  // over the first three sources
    std::vector<PosHistogram> pos;
};

/// Restricts every map to the keys all maps share, binarizes each at its
/// median and computes every comparison statistic.
ComparisonReport compare_saliency_maps(std::span<const SaliencyMap> maps, const StimulusIndex& stimuli,
                                       Diagnostics* diag = nullptr);

void write_comparison_report(const ComparisonReport& report, std::ostream& jaccard_out, std::ostream& pearson_out,
                             std::ostream& venn_out, std::ostream& pos_out);

}  // namespace eyesal
