#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eyesal/error.hpp"
#include "eyesal/ingest.hpp"
#include "eyesal/metrics.hpp"

namespace eyesal {

/// (stimulus_id, ia_index)
using IaKey = std::pair<std::string, std::size_t>;

struct SaliencyMap {
    std::string source;
    std::map<IaKey, double> scores;
    std::size_t n_participants = 0;
};

struct BinaryMap {
    std::string source;
    std::set<IaKey> salient;
    std::set<IaKey> universe;  // keys of the originating map
    double threshold_value = 0.0;
};

enum class ConditionFilter { all, congruent, incongruent };

ConditionFilter parse_condition_filter(std::string_view s);
std::string_view to_string(ConditionFilter f);
bool passes(ConditionFilter f, Condition c);

/// Per participant, z-scores each observation against that participant's
/// mean and SD over all their observations of `measure`; the IA score is the
/// mean z across contributing observations. Empty measure values are
/// excluded. A participant with zero SD contributes z = 0 (with a warning).
SaliencyMap zscore_aggregate(const MeasureTable& table, Measure measure, ConditionFilter filter,
                             SdVariant sd_variant = SdVariant::population, Diagnostics* diag = nullptr);

/// Per-IA arithmetic mean of the raw measure.
SaliencyMap raw_aggregate(const MeasureTable& table, Measure measure, ConditionFilter filter,
                          Diagnostics* diag = nullptr);

enum class Covariate { previous_viewed, length, log_freq };
std::string_view to_string(Covariate c);

/// Fits measure ~ 1 + covariates + (1 | participant) and scores each IA by
/// the mean conditional residual of its observations, in the measure's
/// original units. Constant covariates are dropped with a warning; genuine
/// collinearity throws NumericError.
SaliencyMap lme_adjusted_aggregate(const MeasureTable& table, Measure measure, const StimulusIndex& stimuli,
                                   std::span<const Covariate> covariates, ConditionFilter filter = ConditionFilter::all,
                                   Diagnostics* diag = nullptr);

/// incong - cong, key by key. Throws ValidationError listing keys present in
/// only one map.
SaliencyMap congruency_contrast(const SaliencyMap& incong, const SaliencyMap& cong, std::string source = {});

double median(std::vector<double> values);

/// Keys scoring strictly above the median score.
BinaryMap binarize_median(const SaliencyMap& map);

void write_saliency_map(std::ostream& out, const SaliencyMap& map, std::span<const std::string> metadata = {});
/// Reads one or more maps (grouped by the source column).
std::vector<SaliencyMap> read_saliency_maps(std::istream& in, const std::string& source_name = "<stream>");
std::vector<SaliencyMap> read_saliency_maps(const std::string& path);

void write_binary_map(std::ostream& out, const BinaryMap& map);

}  // namespace eyesal
