#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eyesal/ingest.hpp"
#include "eyesal/stimulus.hpp"

namespace eyesal {

enum class Measure { ffd, frd, gp, dt, rr, ps, fc, reg };

Measure parse_measure(std::string_view s);
std::string_view to_string(Measure m);
inline constexpr Measure kAllMeasures[] = {Measure::ffd, Measure::frd, Measure::gp, Measure::dt,
                                           Measure::rr,  Measure::ps,  Measure::fc, Measure::reg};

/// Reading measures of one interest area in one trial. Duration measures
/// and pupil size are empty when the IA was never fixated.
struct IAMeasures {
    std::optional<std::int64_t> ffd_ms;
    std::optional<std::int64_t> frd_ms;
    std::optional<std::int64_t> gp_ms;
    std::optional<std::int64_t> dt_ms;
    std::optional<std::int64_t> rr_ms;
    std::optional<double> ps;
    std::size_t fc = 0;
    std::size_t reg_count = 0;

    std::optional<double> value(Measure m) const;
    bool operator==(const IAMeasures&) const = default;
};

/// One in-IA fixation of the temporal sequence the measures are defined on.
struct GazeStep {
    std::size_t ia = 0;
    std::int64_t duration_ms = 0;
    double pupil = 0.0;
};

/// The trial's fixations with a defined ia_index, in temporal order.
std::vector<GazeStep> in_ia_sequence(const TrialRecord& trial);

struct FirstPassMeasures {
    std::optional<std::int64_t> ffd_ms;
    std::optional<std::int64_t> frd_ms;
    std::optional<std::int64_t> gp_ms;
};

struct TotalMeasures {
    std::optional<std::int64_t> dt_ms;
    std::optional<std::int64_t> rr_ms;
    std::size_t fc = 0;
};

/// First fixation duration, first-run dwell time and go-past time for IA
/// `ia`. Go-past accumulates the IA's fixations until the first exit to a
/// lower-indexed IA, inclusive; with no such exit it equals first-run dwell.
FirstPassMeasures first_pass_measures(std::span<const GazeStep> seq, std::size_t ia);
TotalMeasures total_measures(std::span<const GazeStep> seq, std::size_t ia);
std::optional<double> pupil_measure(std::span<const GazeStep> seq, std::size_t ia);
/// Transitions from IA `ia` directly to any lower-indexed IA.
std::size_t regression_count(std::span<const GazeStep> seq, std::size_t ia);

/// All eight measures for IAs 0..n_ias-1 in one pass over the sequence.
/// Throws ValidationError when a step refers to an IA >= n_ias.
std::vector<IAMeasures> compute_ia_measures(std::span<const GazeStep> seq, std::size_t n_ias);

struct MeasureKey {
    std::string participant_id;
    std::string trial_id;
    std::string stimulus_id;
    Condition condition = Condition::congruent;
    std::size_t ia_index = 0;

    auto operator<=>(const MeasureKey&) const = default;
};

struct MeasureRow {
    MeasureKey key;
    IAMeasures measures;
    bool operator==(const MeasureRow&) const = default;
};

/// Rows sorted by key; every IA of every trial is present.
struct MeasureTable {
    std::vector<MeasureRow> rows;
};

/// One row per IA of the stimulus. Throws ValidationError on a stimulus
/// mismatch or an out-of-range ia_index.
std::vector<MeasureRow> compute_trial_measures(const TrialRecord& trial, const Stimulus& stimulus);

using StimulusIndex = std::map<std::string, const Stimulus*, std::less<>>;
StimulusIndex index_stimuli(std::span<const Stimulus> stimuli);

/// Reference implementation: trials processed one after another.
MeasureTable compute_measure_table_serial(std::span<const TrialRecord> trials, const StimulusIndex& stimuli);
/// OpenMP implementation; output is identical to the serial one.
MeasureTable compute_measure_table(std::span<const TrialRecord> trials, const StimulusIndex& stimuli);

void write_measure_table(std::ostream& out, const MeasureTable& table);
MeasureTable read_measure_table(std::istream& in, const std::string& source_name = "<stream>");
MeasureTable read_measure_table(const std::string& path);

}  // namespace eyesal
