#include "eyesal/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <tuple>

#include "eyesal/stats.hpp"
#include "eyesal/table_io.hpp"

namespace eyesal {

ConditionFilter parse_condition_filter(std::string_view s) {
    if (s == "all") return ConditionFilter::all;
    if (s == "congruent") return ConditionFilter::congruent;
    if (s == "incongruent") return ConditionFilter::incongruent;
    throw ValidationError("unknown condition filter '" + std::string(s) + "'");
}

std::string_view to_string(ConditionFilter f) {
    switch (f) {
        case ConditionFilter::all: return "all";
        case ConditionFilter::congruent: return "congruent";
        case ConditionFilter::incongruent: return "incongruent";
    }
    return "?";
}

bool passes(ConditionFilter f, Condition c) {
    switch (f) {
        case ConditionFilter::all: return true;
        case ConditionFilter::congruent: return c == Condition::congruent;
        case ConditionFilter::incongruent: return c == Condition::incongruent;
    }
    return false;
}

std::string_view to_string(Covariate c) {
    switch (c) {
        case Covariate::previous_viewed: return "previous_viewed";
        case Covariate::length: return "length";
        case Covariate::log_freq: return "log_freq";
    }
    return "?";
}

namespace {

std::string source_label(Measure m, std::string_view agg, ConditionFilter f) {
    return std::string(to_string(m)) + "/" + std::string(agg) + "/" + std::string(to_string(f));
}

struct Accum {
    double sum = 0.0;
    std::size_t n = 0;
};

/// Averages per-row values into a map, warning about keys with no value.
SaliencyMap average_by_ia(const MeasureTable& table, ConditionFilter filter,
                          const std::vector<std::optional<double>>& per_row, std::string source, Diagnostics* diag) {
    std::map<IaKey, Accum> acc;
    std::set<std::string> participants;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& k = table.rows[r].key;
        if (!passes(filter, k.condition)) continue;
        auto& a = acc[{k.stimulus_id, k.ia_index}];
        if (!per_row[r]) continue;
        a.sum += *per_row[r];
        ++a.n;
        participants.insert(k.participant_id);
    }
    SaliencyMap map;
    map.source = std::move(source);
    map.n_participants = participants.size();
    for (const auto& [key, a] : acc) {
        if (a.n == 0) {
            warn(diag, "interest area " + key.first + "/" + std::to_string(key.second) +
                           " has no observations; score omitted");
            continue;
        }
        map.scores.emplace(key, a.sum / static_cast<double>(a.n));
    }
    return map;
}

}  // namespace

SaliencyMap zscore_aggregate(const MeasureTable& table, Measure measure, ConditionFilter filter,
                             SdVariant sd_variant, Diagnostics* diag) {
    std::map<std::string, Accum> mean_acc;
    for (const auto& row : table.rows) {
        if (!passes(filter, row.key.condition)) continue;
        if (auto v = row.measures.value(measure)) {
            auto& a = mean_acc[row.key.participant_id];
            a.sum += *v;
            ++a.n;
        }
    }
    std::map<std::string, double> means;
    std::map<std::string, double> ss;
    for (const auto& [pid, a] : mean_acc) means[pid] = a.sum / static_cast<double>(a.n);
    for (const auto& row : table.rows) {
        if (!passes(filter, row.key.condition)) continue;
        if (auto v = row.measures.value(measure)) {
            const double d = *v - means[row.key.participant_id];
            ss[row.key.participant_id] += d * d;
        }
    }
    std::map<std::string, double> sds;
    for (const auto& [pid, a] : mean_acc) {
        const double denom = sd_variant == SdVariant::population ? static_cast<double>(a.n)
                                                                  : static_cast<double>(a.n) - 1.0;
        const double sd = denom > 0.0 ? std::sqrt(ss[pid] / denom) : 0.0;
        if (sd == 0.0) warn(diag, "participant '" + pid + "' has zero SD for " + std::string(to_string(measure)) +
                                      "; z-scores set to 0");
        sds[pid] = sd;
    }

    std::vector<std::optional<double>> z(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (!passes(filter, row.key.condition)) continue;
        if (auto v = row.measures.value(measure)) {
            const double sd = sds[row.key.participant_id];
            z[r] = sd == 0.0 ? 0.0 : (*v - means[row.key.participant_id]) / sd;
        }
    }
    return average_by_ia(table, filter, z, source_label(measure, "zscore", filter), diag);
}

SaliencyMap raw_aggregate(const MeasureTable& table, Measure measure, ConditionFilter filter, Diagnostics* diag) {
    std::vector<std::optional<double>> v(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) v[r] = table.rows[r].measures.value(measure);
    return average_by_ia(table, filter, v, source_label(measure, "raw", filter), diag);
}

SaliencyMap lme_adjusted_aggregate(const MeasureTable& table, Measure measure, const StimulusIndex& stimuli,
                                   std::span<const Covariate> covariates, ConditionFilter filter,
                                   Diagnostics* diag) {
    std::map<std::tuple<std::string, std::string, std::size_t>, std::size_t> fc_of;
    for (const auto& row : table.rows) {
        fc_of[{row.key.participant_id, row.key.trial_id, row.key.ia_index}] = row.measures.fc;
    }

    std::vector<std::size_t> used;
    std::vector<double> response;
    std::vector<std::string> groups;
    std::vector<DesignColumn> columns;
    for (auto c : covariates) columns.push_back({std::string(to_string(c)), {}, c == Covariate::previous_viewed});

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (!passes(filter, row.key.condition)) continue;
        const auto v = row.measures.value(measure);
        if (!v) continue;
        const auto it = stimuli.find(row.key.stimulus_id);
        if (it == stimuli.end()) throw ValidationError("unknown stimulus '" + row.key.stimulus_id + "'");
        const Stimulus& stim = *it->second;
        if (row.key.ia_index >= stim.ias.size()) {
            throw ValidationError("interest area " + std::to_string(row.key.ia_index) + " out of range for '" +
                                  stim.stimulus_id + "'");
        }
        used.push_back(r);
        response.push_back(*v);
        groups.push_back(row.key.participant_id);
        for (std::size_t c = 0; c < covariates.size(); ++c) {
            double x = 0.0;
            switch (covariates[c]) {
                case Covariate::previous_viewed:
                    if (row.key.ia_index > 0) {
                        const auto prev = fc_of.find({row.key.participant_id, row.key.trial_id, row.key.ia_index - 1});
                        x = (prev != fc_of.end() && prev->second > 0) ? 1.0 : 0.0;
                    }
                    break;
                case Covariate::length: x = static_cast<double>(stim.ia_length(row.key.ia_index)); break;
                case Covariate::log_freq: x = stim.ia_log_freq(row.key.ia_index); break;
            }
            columns[c].values.push_back(x);
        }
    }
    if (used.size() < 3) throw NumericError("too few observations for the mixed model");

    std::erase_if(columns, [&](const DesignColumn& col) {
        const bool constant = std::all_of(col.values.begin(), col.values.end(),
                                          [&](double x) { return x == col.values.front(); });
        if (constant) warn(diag, "covariate '" + col.name + "' is constant and was dropped");
        return constant;
    });

    const auto design = make_normalized_design(response, columns, std::move(groups));
    const auto fit = fit_random_intercept_lmm(design);
    if (!fit.converged) warn(diag, "mixed model did not converge; using best iterate");
    const Eigen::VectorXd resid = conditional_residuals(design, fit) * design.response_sd;

    std::vector<std::optional<double>> per_row(table.rows.size());
    for (std::size_t i = 0; i < used.size(); ++i) per_row[used[i]] = resid(static_cast<Eigen::Index>(i));
    return average_by_ia(table, filter, per_row, source_label(measure, "lme", filter), diag);
}

SaliencyMap congruency_contrast(const SaliencyMap& incong, const SaliencyMap& cong, std::string source) {
    std::vector<std::string> missing;
    for (const auto& [k, v] : incong.scores) {
        if (!cong.scores.contains(k)) missing.push_back(k.first + "/" + std::to_string(k.second) + " (congruent)");
    }
    for (const auto& [k, v] : cong.scores) {
        if (!incong.scores.contains(k)) missing.push_back(k.first + "/" + std::to_string(k.second) + " (incongruent)");
    }
    if (!missing.empty()) {
        std::string msg = "contrast maps cover different keys; missing from:";
        for (const auto& m : missing) msg += " " + m;
        throw ValidationError(msg);
    }
    SaliencyMap out;
    out.source = source.empty() ? incong.source + " - " + cong.source : std::move(source);
    out.n_participants = std::min(incong.n_participants, cong.n_participants);
    for (const auto& [k, v] : incong.scores) out.scores.emplace(k, v - cong.scores.at(k));
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) throw ValidationError("median of an empty list");
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

BinaryMap binarize_median(const SaliencyMap& map) {
    if (map.scores.empty()) throw ValidationError("cannot binarize an empty saliency map '" + map.source + "'");
    std::vector<double> values;
    values.reserve(map.scores.size());
    for (const auto& [k, v] : map.scores) values.push_back(v);
    BinaryMap out;
    out.source = map.source;
    out.threshold_value = median(std::move(values));
    for (const auto& [k, v] : map.scores) {
        out.universe.insert(k);
        if (v > out.threshold_value) out.salient.insert(k);
    }
    return out;
}

void write_saliency_map(std::ostream& out, const SaliencyMap& map, std::span<const std::string> metadata) {
    out << "# participants: " << map.n_participants << '\n';
    for (const auto& m : metadata) out << "# " << m << '\n';
    write_csv_row(out, {"source", "stimulus_id", "ia_index", "score"});
    for (const auto& [k, v] : map.scores) {
        write_csv_row(out, {map.source, k.first, std::to_string(k.second), format_double(v)});
    }
}

std::vector<SaliencyMap> read_saliency_maps(std::istream& in, const std::string& source_name) {
    const auto t = read_delimited(in, source_name);
    const auto c_src = t.column("source");
    const auto c_stim = t.column("stimulus_id");
    const auto c_ia = t.column("ia_index");
    const auto c_score = t.column("score");
    std::size_t participants = 0;
    if (auto p = t.metadata_value("participants")) {
        try {
            participants = std::stoul(*p);
        } catch (const std::exception&) {
            throw ValidationError(source_name + ": bad participants header");
        }
    }
    std::vector<SaliencyMap> maps;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& src = t.rows[r][c_src];
        auto it = std::find_if(maps.begin(), maps.end(), [&](const SaliencyMap& m) { return m.source == src; });
        if (it == maps.end()) {
            maps.push_back({src, {}, participants});
            it = std::prev(maps.end());
        }
        const auto ia = parse_int_field(t, r, c_ia);
        if (ia < 0) throw_field_error(t, r, c_ia, "must be >= 0");
        const double score = parse_double_field(t, r, c_score);
        if (!std::isfinite(score)) throw_field_error(t, r, c_score, "score must be finite");
        if (!it->scores.emplace(IaKey{t.rows[r][c_stim], static_cast<std::size_t>(ia)}, score).second) {
            throw_field_error(t, r, c_ia, "duplicate key");
        }
    }
    return maps;
}

std::vector<SaliencyMap> read_saliency_maps(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    return read_saliency_maps(in, path);
}

void write_binary_map(std::ostream& out, const BinaryMap& map) {
    out << "# threshold: " << format_double(map.threshold_value) << '\n';
    write_csv_row(out, {"source", "stimulus_id", "ia_index", "salient"});
    for (const auto& k : map.universe) {
        write_csv_row(out, {map.source, k.first, std::to_string(k.second), map.salient.contains(k) ? "1" : "0"});
    }
}

}  // namespace eyesal
