#include "eyesal/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include "eyesal/table_io.hpp"

namespace eyesal {

Measure parse_measure(std::string_view s) {
    for (auto m : kAllMeasures) {
        if (to_string(m) == s) return m;
    }
    throw ValidationError("unknown measure '" + std::string(s) + "'");
}

std::string_view to_string(Measure m) {
    switch (m) {
        case Measure::ffd: return "ffd";
        case Measure::frd: return "frd";
        case Measure::gp: return "gp";
        case Measure::dt: return "dt";
        case Measure::rr: return "rr";
        case Measure::ps: return "ps";
        case Measure::fc: return "fc";
        case Measure::reg: return "reg";
    }
    return "?";
}

std::optional<double> IAMeasures::value(Measure m) const {
    auto ms = [](const std::optional<std::int64_t>& v) -> std::optional<double> {
        if (!v) return std::nullopt;
        return static_cast<double>(*v);
    };
    switch (m) {
        case Measure::ffd: return ms(ffd_ms);
        case Measure::frd: return ms(frd_ms);
        case Measure::gp: return ms(gp_ms);
        case Measure::dt: return ms(dt_ms);
        case Measure::rr: return ms(rr_ms);
        case Measure::ps: return ps;
        case Measure::fc: return static_cast<double>(fc);
        case Measure::reg: return static_cast<double>(reg_count);
    }
    return std::nullopt;
}

std::vector<GazeStep> in_ia_sequence(const TrialRecord& trial) {
    std::vector<GazeStep> seq;
    seq.reserve(trial.fixations.size());
    for (const auto& f : trial.fixations) {
        if (f.ia_index) seq.push_back({*f.ia_index, f.duration_ms(), f.pupil});
    }
    return seq;
}

FirstPassMeasures first_pass_measures(std::span<const GazeStep> seq, std::size_t ia) {
    FirstPassMeasures out;
    auto first = std::find_if(seq.begin(), seq.end(), [ia](const GazeStep& s) { return s.ia == ia; });
    if (first == seq.end()) return out;
    out.ffd_ms = first->duration_ms;

    std::int64_t frd = 0;
    for (auto it = first; it != seq.end() && it->ia == ia; ++it) frd += it->duration_ms;
    out.frd_ms = frd;

    std::int64_t gp = 0;
    for (auto it = first; it != seq.end(); ++it) {
        if (it->ia != ia) continue;
        gp += it->duration_ms;
        const auto next = std::next(it);
        if (next != seq.end() && next->ia < ia) {
            out.gp_ms = gp;
            return out;
        }
    }
    out.gp_ms = frd;
    return out;
}

TotalMeasures total_measures(std::span<const GazeStep> seq, std::size_t ia) {
    TotalMeasures out;
    std::int64_t dt = 0;
    for (const auto& s : seq) {
        if (s.ia != ia) continue;
        dt += s.duration_ms;
        ++out.fc;
    }
    if (out.fc == 0) return out;
    out.dt_ms = dt;
    out.rr_ms = dt - *first_pass_measures(seq, ia).frd_ms;
    return out;
}

std::optional<double> pupil_measure(std::span<const GazeStep> seq, std::size_t ia) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : seq) {
        if (s.ia != ia) continue;
        sum += s.pupil;
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

std::size_t regression_count(std::span<const GazeStep> seq, std::size_t ia) {
    std::size_t n = 0;
    for (std::size_t k = 0; k + 1 < seq.size(); ++k) {
        if (seq[k].ia == ia && seq[k + 1].ia < ia) ++n;
    }
    return n;
}

std::vector<IAMeasures> compute_ia_measures(std::span<const GazeStep> seq, std::size_t n_ias) {
    enum class Run : unsigned char { not_started, open, closed };
    struct State {
        Run run = Run::not_started;
        bool left_exit = false;
        std::int64_t ffd = 0;
        std::int64_t frd = 0;
        std::int64_t gp = 0;
        std::int64_t dt = 0;
        double pupil_sum = 0.0;
        std::size_t fc = 0;
        std::size_t reg = 0;
    };
    std::vector<State> st(n_ias);

    for (std::size_t k = 0; k < seq.size(); ++k) {
        const auto ia = seq[k].ia;
        if (ia >= n_ias) {
            throw ValidationError("fixation on interest area " + std::to_string(ia) + " but stimulus has " +
                                  std::to_string(n_ias));
        }
        auto& s = st[ia];
        const auto dur = seq[k].duration_ms;
        if (s.run == Run::not_started) {
            s.run = Run::open;
            s.ffd = dur;
        }
        if (s.run == Run::open) s.frd += dur;
        if (!s.left_exit) s.gp += dur;
        s.dt += dur;
        s.pupil_sum += seq[k].pupil;
        ++s.fc;

        if (k + 1 < seq.size() && seq[k + 1].ia != ia) {
            s.run = Run::closed;
            if (seq[k + 1].ia < ia) {
                ++s.reg;
                s.left_exit = true;
            }
        }
    }

    std::vector<IAMeasures> out(n_ias);
    for (std::size_t i = 0; i < n_ias; ++i) {
        const auto& s = st[i];
        auto& m = out[i];
        m.fc = s.fc;
        m.reg_count = s.reg;
        if (s.fc == 0) continue;
        m.ffd_ms = s.ffd;
        m.frd_ms = s.frd;
        m.gp_ms = s.left_exit ? s.gp : s.frd;
        m.dt_ms = s.dt;
        m.rr_ms = s.dt - s.frd;
        m.ps = s.pupil_sum / static_cast<double>(s.fc);
    }
    return out;
}

std::vector<MeasureRow> compute_trial_measures(const TrialRecord& trial, const Stimulus& stimulus) {
    if (trial.stimulus_id != stimulus.stimulus_id) {
        throw ValidationError("trial " + trial.participant_id + "/" + trial.trial_id + " is for stimulus '" +
                              trial.stimulus_id + "', not '" + stimulus.stimulus_id + "'");
    }
    const auto seq = in_ia_sequence(trial);
    std::vector<IAMeasures> measures;
    try {
        measures = compute_ia_measures(seq, stimulus.ias.size());
    } catch (const ValidationError& e) {
        throw ValidationError("trial " + trial.participant_id + "/" + trial.trial_id + ": " + e.what());
    }
    std::vector<MeasureRow> rows;
    rows.reserve(measures.size());
    for (std::size_t i = 0; i < measures.size(); ++i) {
        rows.push_back({{trial.participant_id, trial.trial_id, trial.stimulus_id, trial.condition, i},
                        measures[i]});
    }
    return rows;
}

StimulusIndex index_stimuli(std::span<const Stimulus> stimuli) {
    StimulusIndex idx;
    for (const auto& s : stimuli) idx.emplace(s.stimulus_id, &s);
    return idx;
}

namespace {

const Stimulus& lookup(const StimulusIndex& stimuli, const TrialRecord& trial) {
    auto it = stimuli.find(trial.stimulus_id);
    if (it == stimuli.end()) {
        throw ValidationError("trial " + trial.participant_id + "/" + trial.trial_id + " refers to unknown stimulus '" +
                              trial.stimulus_id + "'");
    }
    return *it->second;
}

MeasureTable flatten_sorted(std::vector<std::vector<MeasureRow>>& per_trial) {
    MeasureTable table;
    std::size_t n = 0;
    for (const auto& v : per_trial) n += v.size();
    table.rows.reserve(n);
    for (auto& v : per_trial) {
        std::move(v.begin(), v.end(), std::back_inserter(table.rows));
    }
    std::stable_sort(table.rows.begin(), table.rows.end(),
                     [](const MeasureRow& a, const MeasureRow& b) { return a.key < b.key; });
    for (std::size_t i = 1; i < table.rows.size(); ++i) {
        if (table.rows[i].key == table.rows[i - 1].key) {
            throw ValidationError("duplicate measure row for " + table.rows[i].key.participant_id + "/" +
                                  table.rows[i].key.trial_id);
        }
    }
    return table;
}

}  // namespace

MeasureTable compute_measure_table_serial(std::span<const TrialRecord> trials, const StimulusIndex& stimuli) {
    std::vector<std::vector<MeasureRow>> per_trial;
    per_trial.reserve(trials.size());
    for (const auto& trial : trials) per_trial.push_back(compute_trial_measures(trial, lookup(stimuli, trial)));
    return flatten_sorted(per_trial);
}

MeasureTable compute_measure_table(std::span<const TrialRecord> trials, const StimulusIndex& stimuli) {
    // Validate every trial before entering the parallel region.
    for (const auto& trial : trials) {
        const auto& stim = lookup(stimuli, trial);
        for (const auto& f : trial.fixations) {
            if (f.ia_index && *f.ia_index >= stim.ias.size()) {
                throw ValidationError("trial " + trial.participant_id + "/" + trial.trial_id +
                                      ": fixation on interest area " + std::to_string(*f.ia_index) +
                                      " but stimulus has " + std::to_string(stim.ias.size()));
            }
        }
    }

    std::vector<std::vector<MeasureRow>> per_trial(trials.size());
    const auto n = static_cast<std::ptrdiff_t>(trials.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto& trial = trials[static_cast<std::size_t>(i)];
        per_trial[static_cast<std::size_t>(i)] = compute_trial_measures(trial, *stimuli.find(trial.stimulus_id)->second);
    }
    return flatten_sorted(per_trial);
}

namespace {

std::string opt_field(const std::optional<std::int64_t>& v) { return v ? std::to_string(*v) : std::string(); }

}  // namespace

void write_measure_table(std::ostream& out, const MeasureTable& table) {
    write_csv_row(out, {"participant_id", "trial_id", "stimulus_id", "condition", "ia_index", "ffd_ms", "frd_ms",
                        "gp_ms", "dt_ms", "rr_ms", "ps", "fc", "reg_count"});
    for (const auto& row : table.rows) {
        const auto& k = row.key;
        const auto& m = row.measures;
        write_csv_row(out, {k.participant_id, k.trial_id, k.stimulus_id, std::string(to_string(k.condition)),
                            std::to_string(k.ia_index), opt_field(m.ffd_ms), opt_field(m.frd_ms),
                            opt_field(m.gp_ms), opt_field(m.dt_ms), opt_field(m.rr_ms),
                            m.ps ? format_double(*m.ps) : std::string(), std::to_string(m.fc),
                            std::to_string(m.reg_count)});
    }
}

MeasureTable read_measure_table(std::istream& in, const std::string& source_name) {
    const auto t = read_delimited(in, source_name);
    const auto c_p = t.column("participant_id");
    const auto c_t = t.column("trial_id");
    const auto c_s = t.column("stimulus_id");
    const auto c_c = t.column("condition");
    const auto c_ia = t.column("ia_index");
    const auto c_ffd = t.column("ffd_ms");
    const auto c_frd = t.column("frd_ms");
    const auto c_gp = t.column("gp_ms");
    const auto c_dt = t.column("dt_ms");
    const auto c_rr = t.column("rr_ms");
    const auto c_ps = t.column("ps");
    const auto c_fc = t.column("fc");
    const auto c_reg = t.column("reg_count");

    std::vector<std::vector<MeasureRow>> rows(1);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        MeasureRow row;
        row.key.participant_id = t.rows[r][c_p];
        row.key.trial_id = t.rows[r][c_t];
        row.key.stimulus_id = t.rows[r][c_s];
        try {
            row.key.condition = parse_condition(t.rows[r][c_c]);
        } catch (const ValidationError& e) {
            throw_field_error(t, r, c_c, e.what());
        }
        const auto ia = parse_int_field(t, r, c_ia);
        if (ia < 0) throw_field_error(t, r, c_ia, "must be >= 0");
        row.key.ia_index = static_cast<std::size_t>(ia);
        auto& m = row.measures;
        m.ffd_ms = parse_optional_int_field(t, r, c_ffd);
        m.frd_ms = parse_optional_int_field(t, r, c_frd);
        m.gp_ms = parse_optional_int_field(t, r, c_gp);
        m.dt_ms = parse_optional_int_field(t, r, c_dt);
        m.rr_ms = parse_optional_int_field(t, r, c_rr);
        if (!t.rows[r][c_ps].empty()) m.ps = parse_double_field(t, r, c_ps);
        const auto fc = parse_int_field(t, r, c_fc);
        const auto reg = parse_int_field(t, r, c_reg);
        if (fc < 0) throw_field_error(t, r, c_fc, "must be >= 0");
        if (reg < 0) throw_field_error(t, r, c_reg, "must be >= 0");
        m.fc = static_cast<std::size_t>(fc);
        m.reg_count = static_cast<std::size_t>(reg);
        if ((m.fc > 0) != m.dt_ms.has_value()) throw_field_error(t, r, c_fc, "fc inconsistent with dt_ms");
        rows[0].push_back(std::move(row));
    }
    return flatten_sorted(rows);
}

MeasureTable read_measure_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    return read_measure_table(in, path);
}

}  // namespace eyesal
