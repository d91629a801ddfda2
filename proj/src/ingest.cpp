#include "eyesal/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

#include "eyesal/table_io.hpp"

namespace eyesal {

Condition parse_condition(std::string_view s) {
    if (s == "congruent") return Condition::congruent;
    if (s == "incongruent") return Condition::incongruent;
    if (s == "context_free") return Condition::context_free;
    throw ValidationError("unknown condition '" + std::string(s) + "'");
}

std::string_view to_string(Condition c) {
    switch (c) {
        case Condition::congruent: return "congruent";
        case Condition::incongruent: return "incongruent";
        case Condition::context_free: return "context_free";
    }
    return "?";
}

namespace {

struct PendingRow {
    FixationEvent fix;
    std::size_t row;
};

}  // namespace

FixationReport parse_fixation_report(std::istream& in, const std::string& source_name) {
    const DelimitedTable t = read_delimited(in, source_name);
    const auto c_participant = t.column("participant_id");
    const auto c_trial = t.column("trial_id");
    const auto c_stimulus = t.column("stimulus_id");
    const auto c_condition = t.column("condition");
    const auto c_block = t.column("block_style");
    const auto c_index = t.column("fixation_index");
    const auto c_start = t.column("start_ms");
    const auto c_end = t.column("end_ms");
    const auto c_x = t.column("x_px");
    const auto c_y = t.column("y_px");
    const auto c_pupil = t.column("pupil");
    const auto c_track = t.column("track_loss_fraction");
    const auto c_ia = t.find_column("ia_index");

    std::map<std::pair<std::string, std::string>, std::pair<TrialRecord, std::vector<PendingRow>>> groups;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        auto key = std::make_pair(row[c_participant], row[c_trial]);
        if (key.first.empty()) throw_field_error(t, r, c_participant, "empty");
        if (key.second.empty()) throw_field_error(t, r, c_trial, "empty");

        Condition condition{};
        Style block{};
        try {
            condition = parse_condition(row[c_condition]);
        } catch (const ValidationError& e) {
            throw_field_error(t, r, c_condition, e.what());
        }
        try {
            block = parse_style(row[c_block]);
        } catch (const ValidationError& e) {
            throw_field_error(t, r, c_block, e.what());
        }
        const double track = parse_double_field(t, r, c_track);
        if (!(track >= 0.0 && track <= 1.0)) throw_field_error(t, r, c_track, "must lie in [0, 1]");

        FixationEvent fix;
        const auto idx = parse_int_field(t, r, c_index);
        if (idx < 0) throw_field_error(t, r, c_index, "must be >= 0");
        fix.fixation_index = static_cast<std::size_t>(idx);
        fix.start_ms = parse_int_field(t, r, c_start);
        fix.end_ms = parse_int_field(t, r, c_end);
        if (fix.end_ms <= fix.start_ms) throw_field_error(t, r, c_end, "end_ms must exceed start_ms");
        fix.x_px = parse_double_field(t, r, c_x);
        fix.y_px = parse_double_field(t, r, c_y);
        fix.pupil = parse_double_field(t, r, c_pupil);
        if (c_ia) {
            if (auto ia = parse_optional_int_field(t, r, *c_ia)) {
                if (*ia < 0) throw_field_error(t, r, *c_ia, "must be >= 0");
                fix.ia_index = static_cast<std::size_t>(*ia);
            }
        }

        auto [it, inserted] = groups.try_emplace(key);
        auto& trial = it->second.first;
        if (inserted) {
            trial.participant_id = key.first;
            trial.trial_id = key.second;
            trial.stimulus_id = row[c_stimulus];
            trial.condition = condition;
            trial.block_style = block;
            trial.track_loss_fraction = track;
        } else {
            if (trial.stimulus_id != row[c_stimulus]) throw_field_error(t, r, c_stimulus, "differs within trial");
            if (trial.condition != condition) throw_field_error(t, r, c_condition, "differs within trial");
            if (trial.block_style != block) throw_field_error(t, r, c_block, "differs within trial");
            if (trial.track_loss_fraction != track) throw_field_error(t, r, c_track, "differs within trial");
        }
        it->second.second.push_back({fix, r});
    }

    FixationReport report;
    report.has_ia_column = c_ia.has_value();
    for (auto& [key, entry] : groups) {
        auto& [trial, pending] = entry;
        std::stable_sort(pending.begin(), pending.end(), [](const PendingRow& a, const PendingRow& b) {
            return a.fix.fixation_index < b.fix.fixation_index;
        });
        for (std::size_t i = 1; i < pending.size(); ++i) {
            if (pending[i].fix.fixation_index == pending[i - 1].fix.fixation_index) {
                throw_field_error(t, pending[i].row, c_index, "duplicate fixation_index within trial");
            }
            if (pending[i].fix.start_ms <= pending[i - 1].fix.start_ms) {
                throw_field_error(t, pending[i].row, c_start,
                                  "start_ms not increasing with fixation_index");
            }
        }
        trial.fixations.reserve(pending.size());
        for (auto& p : pending) trial.fixations.push_back(p.fix);
        report.trials.push_back(std::move(trial));
    }
    return report;
}

FixationReport parse_fixation_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    return parse_fixation_report(in, path);
}

void write_fixation_report(std::ostream& out, std::span<const TrialRecord> trials) {
    write_csv_row(out, {"participant_id", "trial_id", "stimulus_id", "condition", "block_style",
                        "fixation_index", "start_ms", "end_ms", "x_px", "y_px", "pupil", "ia_index",
                        "track_loss_fraction"});
    for (const auto& trial : trials) {
        for (const auto& f : trial.fixations) {
            write_csv_row(out, {trial.participant_id, trial.trial_id, trial.stimulus_id,
                                std::string(to_string(trial.condition)), std::string(to_string(trial.block_style)),
                                std::to_string(f.fixation_index), std::to_string(f.start_ms),
                                std::to_string(f.end_ms), format_double(f.x_px), format_double(f.y_px),
                                format_double(f.pupil), f.ia_index ? std::to_string(*f.ia_index) : "",
                                format_double(trial.track_loss_fraction)});
        }
    }
}

std::map<std::string, IALayout> parse_layout(std::istream& in, const std::string& source_name) {
    const DelimitedTable t = read_delimited(in, source_name);
    const auto c_stim = t.column("stimulus_id");
    const auto c_ia = t.column("ia_index");
    const auto c_left = t.column("left");
    const auto c_top = t.column("top");
    const auto c_right = t.column("right");
    const auto c_bottom = t.column("bottom");

    std::map<std::string, std::map<std::size_t, PixelRect>> staged;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto ia = parse_int_field(t, r, c_ia);
        if (ia < 0) throw_field_error(t, r, c_ia, "must be >= 0");
        PixelRect rect{parse_double_field(t, r, c_left), parse_double_field(t, r, c_top),
                       parse_double_field(t, r, c_right), parse_double_field(t, r, c_bottom)};
        if (rect.left < 0 || rect.top < 0) throw_field_error(t, r, c_left, "rectangle outside display");
        if (!(rect.right > rect.left)) throw_field_error(t, r, c_right, "right must exceed left");
        if (!(rect.bottom > rect.top)) throw_field_error(t, r, c_bottom, "bottom must exceed top");
        if (!staged[t.rows[r][c_stim]].emplace(static_cast<std::size_t>(ia), rect).second) {
            throw_field_error(t, r, c_ia, "duplicate rectangle for interest area");
        }
    }

    std::map<std::string, IALayout> layouts;
    for (auto& [stim, rects] : staged) {
        IALayout layout;
        layout.stimulus_id = stim;
        for (auto& [ia, rect] : rects) {
            if (ia != layout.rects.size()) {
                throw ValidationError(source_name + ": stimulus '" + stim + "' is missing a rectangle for ia_index " +
                                      std::to_string(layout.rects.size()));
            }
            layout.rects.push_back(rect);
        }
        layouts.emplace(stim, std::move(layout));
    }
    return layouts;
}

std::map<std::string, IALayout> parse_layout(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    return parse_layout(in, path);
}

TrialRecord assign_fixations_to_ias(const TrialRecord& trial, const IALayout& layout) {
    if (trial.stimulus_id != layout.stimulus_id) {
        throw ValidationError("layout for '" + layout.stimulus_id + "' applied to trial of '" +
                              trial.stimulus_id + "'");
    }
    TrialRecord out = trial;
    for (auto& fix : out.fixations) {
        fix.ia_index.reset();
        for (std::size_t ia = 0; ia < layout.rects.size(); ++ia) {
            if (!layout.rects[ia].contains(fix.x_px, fix.y_px)) continue;
            if (fix.ia_index) {
                std::ostringstream msg;
                msg << "ambiguous layout for '" << layout.stimulus_id << "': point (" << fix.x_px << ", "
                    << fix.y_px << ") lies in interest areas " << *fix.ia_index << " and " << ia;
                throw ValidationError(msg.str());
            }
            fix.ia_index = ia;
        }
    }
    return out;
}

TrackLossFilterResult filter_trials_by_track_loss(std::span<const TrialRecord> trials, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw ValidationError("track-loss threshold must lie in [0, 1]");
    }
    TrackLossFilterResult result;
    for (const auto& trial : trials) {
        if (trial.track_loss_fraction > threshold) {
            ++result.removed;
        } else {
            result.trials.push_back(trial);
        }
    }
    return result;
}

OutlierRemovalResult remove_outlier_fixations(std::span<const TrialRecord> trials,
                                              const OutlierPolicy& policy, Diagnostics* diag) {
    // Per-participant upper bound, accumulated in input order.
    struct Moments {
        double sum = 0.0;
        double sum_sq_dev = 0.0;
        std::size_t n = 0;
    };
    std::map<std::string, Moments> moments;
    for (const auto& trial : trials) {
        auto& m = moments[trial.participant_id];
        for (const auto& f : trial.fixations) {
            m.sum += static_cast<double>(f.duration_ms());
            ++m.n;
        }
    }
    for (const auto& trial : trials) {
        auto& m = moments[trial.participant_id];
        const double mean = m.sum / static_cast<double>(m.n);
        for (const auto& f : trial.fixations) {
            const double d = static_cast<double>(f.duration_ms()) - mean;
            m.sum_sq_dev += d * d;
        }
    }
    std::map<std::string, std::optional<double>> upper;
    for (const auto& [pid, m] : moments) {
        if (!policy.use_sd_rule || m.n < 2) {
            if (policy.use_sd_rule) {
                warn(diag, "participant '" + pid + "' has fewer than 2 fixations; SD rule skipped");
            }
            upper[pid] = std::nullopt;
            continue;
        }
        const double denom = policy.sd_variant == SdVariant::population ? static_cast<double>(m.n)
                                                                         : static_cast<double>(m.n - 1);
        const double sd = std::sqrt(m.sum_sq_dev / denom);
        upper[pid] = m.sum / static_cast<double>(m.n) + policy.sd_multiplier * sd;
    }

    OutlierRemovalResult result;
    result.trials.resize(trials.size());
    std::vector<std::size_t> removed(trials.size(), 0);
    const auto n_trials = static_cast<std::ptrdiff_t>(trials.size());

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n_trials; ++i) {
        const auto& in = trials[static_cast<std::size_t>(i)];
        const auto bound = upper.at(in.participant_id);
        TrialRecord out = in;
        out.fixations.clear();
        for (const auto& f : in.fixations) {
            const auto dur = f.duration_ms();
            const bool too_short = dur < policy.min_duration_ms;
            const bool too_long = bound && static_cast<double>(dur) > *bound;
            if (too_short || too_long) {
                ++removed[static_cast<std::size_t>(i)];
                continue;
            }
            FixationEvent kept = f;
            kept.fixation_index = out.fixations.size();
            out.fixations.push_back(kept);
        }
        result.trials[static_cast<std::size_t>(i)] = std::move(out);
    }

    for (std::size_t i = 0; i < trials.size(); ++i) {
        result.removed += removed[i];
        result.total += trials[i].fixations.size();
    }
    return result;
}

}  // namespace eyesal
