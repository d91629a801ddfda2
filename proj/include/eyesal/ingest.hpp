#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eyesal/error.hpp"
#include "eyesal/stimulus.hpp"

namespace eyesal {

enum class Condition { congruent, incongruent, context_free };

Condition parse_condition(std::string_view s);
std::string_view to_string(Condition c);

struct FixationEvent {
    std::size_t fixation_index = 0;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    double x_px = 0.0;
    double y_px = 0.0;
    double pupil = 0.0;
    std::optional<std::size_t> ia_index;

    std::int64_t duration_ms() const { return end_ms - start_ms; }
};

struct TrialRecord {
    std::string participant_id;
    std::string trial_id;
    std::string stimulus_id;
    Condition condition = Condition::congruent;
    Style block_style = Style::polite;
    std::vector<FixationEvent> fixations;
    double track_loss_fraction = 0.0;
};

/// Half-open pixel rectangle [left, right) x [top, bottom).
struct PixelRect {
    double left = 0.0;
    double top = 0.0;
    double right = 0.0;
    double bottom = 0.0;

    bool contains(double x, double y) const { return x >= left && x < right && y >= top && y < bottom; }
};

struct IALayout {
    std::string stimulus_id;
    std::vector<PixelRect> rects;  // indexed by ia_index
};

struct FixationReport {
    std::vector<TrialRecord> trials;  // sorted by (participant_id, trial_id)
    bool has_ia_column = false;
};

/// Parses the delimited fixation report. Rows are grouped into trials by
/// (participant_id, trial_id) and ordered by fixation_index; start_ms must
/// increase strictly with fixation_index.
FixationReport parse_fixation_report(std::istream& in, const std::string& source_name = "<stream>");
FixationReport parse_fixation_report(const std::string& path);

void write_fixation_report(std::ostream& out, std::span<const TrialRecord> trials);

std::map<std::string, IALayout> parse_layout(std::istream& in, const std::string& source_name = "<stream>");
std::map<std::string, IALayout> parse_layout(const std::string& path);

/// Sets each fixation's ia_index to the rectangle containing it, or none.
/// Throws ValidationError when a point falls in two rectangles.
TrialRecord assign_fixations_to_ias(const TrialRecord& trial, const IALayout& layout);

struct TrackLossFilterResult {
    std::vector<TrialRecord> trials;
    std::size_t removed = 0;
};

/// Drops trials whose track_loss_fraction exceeds `threshold`.
TrackLossFilterResult filter_trials_by_track_loss(std::span<const TrialRecord> trials,
                                                  double threshold = 0.5);

enum class SdVariant { population, sample };

struct OutlierPolicy {
    std::int64_t min_duration_ms = 80;
    bool use_sd_rule = true;
    double sd_multiplier = 3.0;
    SdVariant sd_variant = SdVariant::population;
};

struct OutlierRemovalResult {
    std::vector<TrialRecord> trials;
    std::size_t removed = 0;
    std::size_t total = 0;

    double removal_fraction() const {
        return total == 0 ? 0.0 : static_cast<double>(removed) / static_cast<double>(total);
    }
};

/// Deletes fixations shorter than the minimum duration or longer than the
/// participant's mean + k SD (computed over all that participant's input
/// fixations). Values equal to the bound are kept. Participants with fewer
/// than two fixations get only the minimum-duration rule. Surviving
/// fixation_index values are renumbered 0..n-1 in their original order.
OutlierRemovalResult remove_outlier_fixations(std::span<const TrialRecord> trials,
                                              const OutlierPolicy& policy = {},
                                              Diagnostics* diag = nullptr);

}  // namespace eyesal
