#include "eyesal/compare.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <tuple>

#include "eyesal/stats.hpp"
#include "eyesal/table_io.hpp"

namespace eyesal {

TokenSource parse_token_source(std::string_view s) {
    if (s == "surprisal") return TokenSource::surprisal;
    if (s == "integrated_gradients" || s == "ig") return TokenSource::integrated_gradients;
    if (s == "human_annotation" || s == "human") return TokenSource::human_annotation;
    throw ValidationError("unknown token score source '" + std::string(s) + "'");
}

std::string_view to_string(TokenSource s) {
    switch (s) {
        case TokenSource::surprisal: return "surprisal";
        case TokenSource::integrated_gradients: return "integrated_gradients";
        case TokenSource::human_annotation: return "human_annotation";
        case TokenSource::other: return "other";
    }
    return "?";
}

std::vector<TokenScoreSet> read_token_scores(std::istream& in, const std::string& source_name) {
    const auto t = read_delimited(in, source_name);
    const auto c_src = t.column("source");
    const auto c_stim = t.column("stimulus_id");
    const auto c_tok = t.column("token_index");
    const auto c_score = t.column("score");
    const auto units = t.metadata_value("units");
    if (!units) throw ValidationError(source_name + ": missing '# units:' header line");

    std::vector<TokenScoreSet> sets;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        TokenSource src{};
        try {
            src = parse_token_source(t.rows[r][c_src]);
        } catch (const ValidationError& e) {
            throw_field_error(t, r, c_src, e.what());
        }
        auto it = std::find_if(sets.begin(), sets.end(), [&](const TokenScoreSet& s) { return s.source == src; });
        if (it == sets.end()) {
            sets.push_back({src, {}, *units});
            it = std::prev(sets.end());
        }
        const auto tok = parse_int_field(t, r, c_tok);
        if (tok < 0) throw_field_error(t, r, c_tok, "must be >= 0");
        const double score = parse_double_field(t, r, c_score);
        if (!std::isfinite(score)) throw_field_error(t, r, c_score, "score must be finite");
        if (src == TokenSource::human_annotation && (score < 0.0 || score > 1.0)) {
            throw_field_error(t, r, c_score, "human annotation scores must lie in [0, 1]");
        }
        if (!it->scores.emplace(TokenKey{t.rows[r][c_stim], static_cast<std::size_t>(tok)}, score).second) {
            throw_field_error(t, r, c_tok, "duplicate token score");
        }
    }
    return sets;
}

std::vector<TokenScoreSet> read_token_scores(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    return read_token_scores(in, path);
}

void write_token_scores(std::ostream& out, const TokenScoreSet& set) {
    out << "# units: " << (set.units.empty() ? "unspecified" : set.units) << '\n';
    write_csv_row(out, {"source", "stimulus_id", "token_index", "score"});
    for (const auto& [k, v] : set.scores) {
        write_csv_row(out, {std::string(to_string(set.source)), k.first, std::to_string(k.second), format_double(v)});
    }
}

TokenScoreSet read_annotations(std::istream& in, const std::string& source_name) {
    const auto t = read_delimited(in, source_name);
    const auto c_stim = t.column("stimulus_id");
    const auto c_tok = t.column("token_index");
    const auto c_ann = t.column("annotator_id");
    const auto c_hl = t.column("highlighted");

    std::map<std::string, std::set<std::string>> annotators;
    std::map<TokenKey, std::size_t> highlights;
    std::set<std::tuple<std::string, std::size_t, std::string>> seen;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& stim = t.rows[r][c_stim];
        const auto tok = parse_int_field(t, r, c_tok);
        if (tok < 0) throw_field_error(t, r, c_tok, "must be >= 0");
        const auto hl = parse_int_field(t, r, c_hl);
        if (hl != 0 && hl != 1) throw_field_error(t, r, c_hl, "must be 0 or 1");
        const auto& ann = t.rows[r][c_ann];
        if (!seen.emplace(stim, static_cast<std::size_t>(tok), ann).second) {
            throw_field_error(t, r, c_ann, "duplicate annotation");
        }
        annotators[stim].insert(ann);
        highlights[{stim, static_cast<std::size_t>(tok)}] += static_cast<std::size_t>(hl);
    }
    TokenScoreSet set;
    set.source = TokenSource::human_annotation;
    set.units = "fraction of annotators";
    for (const auto& [key, count] : highlights) {
        set.scores.emplace(key, static_cast<double>(count) / static_cast<double>(annotators[key.first].size()));
    }
    return set;
}

TokenScoreSet read_annotations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    return read_annotations(in, path);
}

SaliencyMap align_token_scores(const TokenScoreSet& scores, const Stimulus& stimulus) {
    if (scores.source == TokenSource::other) {
        throw ValidationError("no interest-area aggregation rule for token source 'other'");
    }
    SaliencyMap map;
    map.source = std::string(to_string(scores.source));
    for (const auto& ia : stimulus.ias) {
        double sum = 0.0;
        for (auto t : ia.token_indices) {
            const auto it = scores.scores.find({stimulus.stimulus_id, t});
            if (it == scores.scores.end()) {
                throw ValidationError(std::string(to_string(scores.source)) + " score missing for token " +
                                      std::to_string(t) + " ('" + stimulus.tokens[t].text + "') of stimulus '" +
                                      stimulus.stimulus_id + "'");
            }
            sum += it->second;
        }
        const double score = scores.source == TokenSource::surprisal
                                 ? sum
                                 : sum / static_cast<double>(ia.token_indices.size());
        map.scores.emplace(IaKey{stimulus.stimulus_id, ia.ia_index}, score);
    }
    return map;
}

SaliencyMap align_token_scores(const TokenScoreSet& scores, std::span<const Stimulus> stimuli) {
    SaliencyMap map;
    map.source = std::string(to_string(scores.source));
    for (const auto& stim : stimuli) {
        auto part = align_token_scores(scores, stim);
        map.scores.merge(part.scores);
    }
    return map;
}

double jaccard(const BinaryMap& a, const BinaryMap& b) {
    std::size_t inter = 0;
    for (const auto& k : a.salient) inter += b.salient.contains(k) ? 1 : 0;
    const std::size_t uni = a.salient.size() + b.salient.size() - inter;
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

VennPartition venn_partition(std::span<const BinaryMap> maps) {
    if (maps.size() != 3) throw ValidationError("venn_partition needs exactly three maps");
    std::set<IaKey> all;
    for (const auto& m : maps) all.insert(m.salient.begin(), m.salient.end());
    VennPartition v;
    for (const auto& k : all) {
        unsigned mask = 0;
        for (unsigned i = 0; i < 3; ++i) {
            if (maps[i].salient.contains(k)) mask |= 1u << i;
        }
        ++v.regions[mask];
    }
    v.union_size = all.size();
    v.three_way_iou = v.union_size == 0 ? 1.0 : static_cast<double>(v.regions[7]) / static_cast<double>(v.union_size);
    return v;
}

std::string coarse_pos(std::string_view tag) {
    if (tag.empty()) return "UNK";
    return std::string(tag.substr(0, std::min<std::size_t>(2, tag.size())));
}

PosHistogram pos_distribution(const BinaryMap& map, const StimulusIndex& stimuli, Diagnostics* diag) {
    std::map<std::string, std::size_t> counts;
    PosHistogram hist;
    for (const auto& [stim_id, ia] : map.salient) {
        const auto it = stimuli.find(stim_id);
        if (it == stimuli.end()) throw ValidationError("unknown stimulus '" + stim_id + "'");
        const Stimulus& stim = *it->second;
        if (ia >= stim.ias.size()) {
            throw ValidationError("interest area " + std::to_string(ia) + " out of range for '" + stim_id + "'");
        }
        for (auto t : stim.ias[ia].token_indices) {
            const auto& tag = stim.tokens[t].pos_tag;
            if (tag.empty()) warn(diag, "token " + std::to_string(t) + " of '" + stim_id + "' has no POS tag");
            ++counts[coarse_pos(tag)];
            ++hist.token_count;
        }
    }
    for (const auto& [tag, n] : counts) {
        hist.proportions.emplace(tag, static_cast<double>(n) / static_cast<double>(hist.token_count));
    }
    return hist;
}

std::vector<std::pair<std::string, double>> top_k(const PosHistogram& hist, std::size_t k) {
    std::vector<std::pair<std::string, double>> v(hist.proportions.begin(), hist.proportions.end());
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (v.size() > k) v.resize(k);
    return v;
}

CorrelationMatrix correlation_matrix(std::span<const SaliencyMap> maps) {
    const auto n = maps.size();
    CorrelationMatrix m(n, std::vector<std::optional<double>>(n));
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        for (std::size_t j = i; j < n; ++j) {
            std::vector<double> x, y;
            for (const auto& [k, v] : maps[i].scores) {
                const auto it = maps[j].scores.find(k);
                if (it == maps[j].scores.end()) continue;
                x.push_back(v);
                y.push_back(it->second);
            }
            std::optional<double> r;
            if (x.size() >= 2) r = pearson_r(x, y);
            m[i][j] = r;
            m[j][i] = r;
        }
    }
    return m;
}

ComparisonReport compare_saliency_maps(std::span<const SaliencyMap> maps, const StimulusIndex& stimuli,
                                       Diagnostics* diag) {
    if (maps.size() < 2) throw ValidationError("comparison needs at least two saliency maps");
    std::set<IaKey> common;
    for (const auto& [k, v] : maps[0].scores) common.insert(k);
    for (std::size_t i = 1; i < maps.size(); ++i) {
        std::erase_if(common, [&](const IaKey& k) { return !maps[i].scores.contains(k); });
    }
    if (common.empty()) throw ValidationError("saliency maps share no interest areas");

    ComparisonReport report;
    std::vector<SaliencyMap> restricted;
    for (const auto& m : maps) {
        SaliencyMap r;
        r.source = m.source;
        r.n_participants = m.n_participants;
        for (const auto& k : common) r.scores.emplace(k, m.scores.at(k));
        if (r.scores.size() != m.scores.size()) {
            warn(diag, "map '" + m.source + "': " + std::to_string(m.scores.size() - r.scores.size()) +
                           " interest areas not shared by every map were excluded");
        }
        report.sources.push_back(m.source);
        report.binary.push_back(binarize_median(r));
        restricted.push_back(std::move(r));
    }

    const auto n = maps.size();
    report.jaccard.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) report.jaccard[i][j] = jaccard(report.binary[i], report.binary[j]);
    }
    report.pearson = correlation_matrix(restricted);
    if (n >= 3) report.venn = venn_partition(std::span(report.binary).first(3));
    for (const auto& b : report.binary) report.pos.push_back(pos_distribution(b, stimuli, diag));
    return report;
}

void write_comparison_report(const ComparisonReport& report, std::ostream& jaccard_out, std::ostream& pearson_out,
                             std::ostream& venn_out, std::ostream& pos_out) {
    std::vector<std::string> header{"source"};
    header.insert(header.end(), report.sources.begin(), report.sources.end());
    write_csv_row(jaccard_out, header);
    write_csv_row(pearson_out, header);
    for (std::size_t i = 0; i < report.sources.size(); ++i) {
        std::vector<std::string> jrow{report.sources[i]};
        std::vector<std::string> prow{report.sources[i]};
        for (std::size_t j = 0; j < report.sources.size(); ++j) {
            jrow.push_back(format_double(report.jaccard[i][j]));
            prow.push_back(report.pearson[i][j] ? format_double(*report.pearson[i][j]) : std::string());
        }
        write_csv_row(jaccard_out, jrow);
        write_csv_row(pearson_out, prow);
    }

    write_csv_row(venn_out, {"region", "count"});
    if (report.venn) {
        const auto& v = *report.venn;
        for (unsigned mask = 1; mask < 8; ++mask) {
            std::string name;
            for (unsigned i = 0; i < 3; ++i) {
                if (mask & (1u << i)) name += (name.empty() ? "" : "&") + report.sources[i];
            }
            write_csv_row(venn_out, {name, std::to_string(v.regions[mask])});
        }
        write_csv_row(venn_out, {"union", std::to_string(v.union_size)});
        write_csv_row(venn_out, {"three_way_iou", format_double(v.three_way_iou)});
    }

    write_csv_row(pos_out, {"source", "pos", "proportion"});
    for (std::size_t i = 0; i < report.sources.size(); ++i) {
        for (const auto& [tag, p] : report.pos[i].proportions) {
            write_csv_row(pos_out, {report.sources[i], tag, format_double(p)});
        }
    }
}

}  // namespace eyesal
