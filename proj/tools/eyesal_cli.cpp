#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eyesal/compare.hpp"
#include "eyesal/error.hpp"
#include "eyesal/fewshot.hpp"
#include "eyesal/ingest.hpp"
#include "eyesal/metrics.hpp"
#include "eyesal/report.hpp"
#include "eyesal/saliency.hpp"
#include "eyesal/stimulus.hpp"
#include "eyesal/table_io.hpp"

namespace fs = std::filesystem;
using namespace eyesal;

namespace {

/// Output files held in memory until commit() writes them all.
class PendingOutputs {
public:
    explicit PendingOutputs(std::string dir) : dir_(std::move(dir)) {}

    std::ostringstream& open(const std::string& name) {
        files_.emplace_back(name, std::make_unique<std::ostringstream>());
        return *files_.back().second;
    }

    void commit() const {
        fs::create_directories(dir_);
        for (const auto& [name, body] : files_) {
            const auto path = fs::path(dir_) / name;
            std::ofstream out(path, std::ios::binary);
            if (!out) throw ValidationError("cannot write " + path.string());
            out << body->str();
            std::cout << "wrote " << path.string() << '\n';
        }
    }

private:
    std::string dir_;
    std::vector<std::pair<std::string, std::unique_ptr<std::ostringstream>>> files_;
};

void print_warnings(const Diagnostics& diag) {
    for (const auto& w : diag.warnings()) std::cerr << "warning: " << w << '\n';
}

std::vector<Stimulus> load_stimulus_file(const std::string& path, const std::string& stopword_path, Diagnostics* diag) {
    if (stopword_path.empty()) return load_stimuli(path, default_stopwords(), diag);
    return load_stimuli(path, load_stopwords(stopword_path), diag);
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

SaliencyMap pick_map(const std::string& path, const std::string& source) {
    auto maps = read_saliency_maps(path);
    if (maps.empty()) throw ValidationError(path + ": no saliency scores");
    if (source.empty()) {
        if (maps.size() > 1) throw ValidationError(path + ": several sources present; choose one with --source");
        return maps.front();
    }
    for (auto& m : maps) {
        if (m.source == source) return m;
    }
    throw ValidationError(path + ": no source '" + source + "'");
}

std::string file_label(std::string s) {
    for (auto& c : s) {
        if (c == '/' || c == ' ' || c == '\\') c = '_';
    }
    return s;
}

struct Common {
    std::string stimuli;
    std::string stopwords;
    std::string out_dir = ".";
};

void add_common(CLI::App* cmd, Common& c, bool needs_stimuli) {
    auto* opt = cmd->add_option("--stimuli", c.stimuli, "stimulus file (JSON lines)")->check(CLI::ExistingFile);
    if (needs_stimuli) opt->required();
    cmd->add_option("--stopwords", c.stopwords, "stopword list, one word per line")->check(CLI::ExistingFile);
    cmd->add_option("--out-dir", c.out_dir, "directory for output files")->capture_default_str();
}

// segment ------------------------------------------------------------------

void run_segment(const Common& c) {
    Diagnostics diag;
    const auto stimuli = load_stimulus_file(c.stimuli, c.stopwords, &diag);
    PendingOutputs out(c.out_dir);
    write_stimuli(out.open("stimuli_segmented.jsonl"), stimuli);
    auto& ias = out.open("interest_areas.csv");
    write_csv_row(ias, {"stimulus_id", "ia_index", "first_token", "last_token", "text"});
    for (const auto& s : stimuli) {
        for (const auto& ia : s.ias) {
            write_csv_row(ias, {s.stimulus_id, std::to_string(ia.ia_index), std::to_string(ia.token_indices.front()),
                                std::to_string(ia.token_indices.back()), ia.text});
        }
    }
    print_warnings(diag);
    out.commit();
}

// ingest -------------------------------------------------------------------

struct IngestArgs {
    std::string fixations;
    std::string layout;
    double track_loss = 0.5;
    std::int64_t min_ms = 80;
    bool no_sd_rule = false;
    double sd_k = 3.0;
    std::string sd_variant = "population";
};

void check_against_stimuli(std::span<const TrialRecord> trials, const StimulusIndex& index) {
    for (const auto& t : trials) {
        const auto it = index.find(t.stimulus_id);
        if (it == index.end()) {
            throw ValidationError("trial " + t.participant_id + "/" + t.trial_id + ": unknown stimulus '" +
                                  t.stimulus_id + "'");
        }
        for (const auto& f : t.fixations) {
            if (f.ia_index && *f.ia_index >= it->second->ias.size()) {
                throw ValidationError("trial " + t.participant_id + "/" + t.trial_id + ": ia_index " +
                                      std::to_string(*f.ia_index) + " out of range for '" + t.stimulus_id + "'");
            }
        }
    }
}

void run_ingest(const Common& c, const IngestArgs& a) {
    Diagnostics diag;
    auto report = parse_fixation_report(a.fixations);
    if (!a.layout.empty()) {
        const auto layouts = parse_layout(a.layout);
        for (auto& t : report.trials) {
            const auto it = layouts.find(t.stimulus_id);
            if (it == layouts.end()) throw ValidationError(a.layout + ": no layout for stimulus '" + t.stimulus_id + "'");
            t = assign_fixations_to_ias(t, it->second);
        }
    } else if (!report.has_ia_column) {
        throw ValidationError(a.fixations + ": no ia_index column; supply --layout");
    }
    if (!c.stimuli.empty()) {
        const auto stimuli = load_stimulus_file(c.stimuli, c.stopwords, &diag);
        check_against_stimuli(report.trials, index_stimuli(stimuli));
    }

    const auto kept = filter_trials_by_track_loss(report.trials, a.track_loss);
    OutlierPolicy policy;
    policy.min_duration_ms = a.min_ms;
    policy.use_sd_rule = !a.no_sd_rule;
    policy.sd_multiplier = a.sd_k;
    policy.sd_variant = a.sd_variant == "sample" ? SdVariant::sample : SdVariant::population;
    const auto cleaned = remove_outlier_fixations(kept.trials, policy, &diag);

    PendingOutputs out(c.out_dir);
    auto& f = out.open("fixations_clean.csv");
    f << "# track_loss_threshold: " << format_double(a.track_loss) << '\n'
      << "# trials_removed_track_loss: " << kept.removed << " of " << report.trials.size() << '\n'
      << "# min_fixation_ms: " << a.min_ms << '\n'
      << "# sd_rule: " << (policy.use_sd_rule ? "mean + " + format_double(a.sd_k) + " SD (" + a.sd_variant + ")" : "off")
      << '\n'
      << "# fixations_removed: " << cleaned.removed << " of " << cleaned.total << " ("
      << fmt("%.2f", 100.0 * cleaned.removal_fraction()) << "%)\n";
    write_fixation_report(f, cleaned.trials);
    print_warnings(diag);
    out.commit();
}

// metrics ------------------------------------------------------------------

void run_metrics(const Common& c, const std::string& fixations, bool serial) {
    Diagnostics diag;
    const auto stimuli = load_stimulus_file(c.stimuli, c.stopwords, &diag);
    const auto report = parse_fixation_report(fixations);
    if (!report.has_ia_column) throw ValidationError(fixations + ": no ia_index column; run ingest with --layout first");
    const auto index = index_stimuli(stimuli);
    const auto table = serial ? compute_measure_table_serial(report.trials, index)
                              : compute_measure_table(report.trials, index);
    PendingOutputs out(c.out_dir);
    auto& m = out.open("measures.csv");
    m << "# missing: empty cell means the interest area was never fixated in that trial\n"
      << "# ps: mean pupil size over the interest area's fixations\n";
    write_measure_table(m, table);
    print_warnings(diag);
    out.commit();
}

// saliency -----------------------------------------------------------------

struct SaliencyArgs {
    std::string measures;
    std::string measure = "dt";
    std::string agg = "zscore";
    std::string condition = "all";
    std::string sd_variant = "population";
};

SaliencyMap aggregate(const MeasureTable& table, const SaliencyArgs& a, ConditionFilter filter,
                      const StimulusIndex* index, Diagnostics* diag) {
    const auto measure = parse_measure(a.measure);
    if (a.agg == "zscore") {
        return zscore_aggregate(table, measure, filter,
                                a.sd_variant == "sample" ? SdVariant::sample : SdVariant::population, diag);
    }
    if (a.agg == "raw") return raw_aggregate(table, measure, filter, diag);
    static constexpr Covariate covariates[] = {Covariate::previous_viewed, Covariate::length, Covariate::log_freq};
    return lme_adjusted_aggregate(table, measure, *index, covariates, filter, diag);
}

void run_saliency(const Common& c, const SaliencyArgs& a) {
    Diagnostics diag;
    if (a.agg == "lme" && c.stimuli.empty()) throw ValidationError("--agg lme needs --stimuli for its covariates");
    std::vector<Stimulus> stimuli;
    if (!c.stimuli.empty()) stimuli = load_stimulus_file(c.stimuli, c.stopwords, &diag);
    const auto index = index_stimuli(stimuli);
    const auto table = read_measure_table(a.measures);

    SaliencyMap map;
    if (a.condition == "contrast") {
        const auto incong = aggregate(table, a, ConditionFilter::incongruent, &index, &diag);
        const auto cong = aggregate(table, a, ConditionFilter::congruent, &index, &diag);
        map = congruency_contrast(incong, cong, a.measure + "/" + a.agg + "/contrast");
    } else {
        map = aggregate(table, a, ConditionFilter::all, &index, &diag);
    }
    const auto binary = binarize_median(map);

    const std::vector<std::string> metadata{
        "measure: " + a.measure, "aggregation: " + a.agg, "condition: " + a.condition,
        "sd_variant: " + a.sd_variant, "missing: unfixated interest areas are excluded from every mean"};
    PendingOutputs out(c.out_dir);
    const auto label = file_label(map.source);
    write_saliency_map(out.open("saliency_" + label + ".csv"), map, metadata);
    write_binary_map(out.open("binary_" + label + ".csv"), binary);
    print_warnings(diag);
    out.commit();
}

// compare ------------------------------------------------------------------

struct CompareArgs {
    std::vector<std::string> maps;
    std::vector<std::string> token_scores;
    std::vector<std::string> annotations;
};

void run_compare(const Common& c, const CompareArgs& a) {
    Diagnostics diag;
    const auto stimuli = load_stimulus_file(c.stimuli, c.stopwords, &diag);
    const auto index = index_stimuli(stimuli);
    std::vector<SaliencyMap> maps;
    for (const auto& path : a.maps) {
        for (auto& m : read_saliency_maps(path)) maps.push_back(std::move(m));
    }
    for (const auto& path : a.token_scores) {
        for (const auto& set : read_token_scores(path)) maps.push_back(align_token_scores(set, stimuli));
    }
    for (const auto& path : a.annotations) maps.push_back(align_token_scores(read_annotations(path), stimuli));
    std::set<std::string> seen;
    for (const auto& m : maps) {
        if (!seen.insert(m.source).second) throw ValidationError("saliency source '" + m.source + "' given twice");
    }

    const auto report = compare_saliency_maps(maps, index, &diag);
    PendingOutputs out(c.out_dir);
    write_comparison_report(report, out.open("jaccard.csv"), out.open("pearson.csv"), out.open("venn.csv"),
                            out.open("pos.csv"));
    auto& bin = out.open("binary_maps.csv");
    write_csv_row(bin, {"source", "stimulus_id", "ia_index", "salient"});
    for (const auto& b : report.binary) {
        for (const auto& k : b.universe) {
            write_csv_row(bin, {b.source, k.first, std::to_string(k.second), b.salient.contains(k) ? "1" : "0"});
        }
    }
    print_warnings(diag);
    out.commit();
}

// report -------------------------------------------------------------------

struct ReportArgs {
    std::string map;
    std::string source;
    std::string reference;
    std::string reference_source;
    std::string annotations;
};

void run_report(const Common& c, const ReportArgs& a) {
    Diagnostics diag;
    const auto stimuli = load_stimulus_file(c.stimuli, c.stopwords, &diag);
    const auto map = pick_map(a.map, a.source);
    std::optional<SaliencyMap> reference;
    if (!a.reference.empty() && !a.annotations.empty()) {
        throw ValidationError("give either --reference or --annotations, not both");
    }
    if (!a.reference.empty()) reference = pick_map(a.reference, a.reference_source);
    if (!a.annotations.empty()) reference = align_token_scores(read_annotations(a.annotations), stimuli);

    PendingOutputs out(c.out_dir);
    out.open("heatmap.html") << render_heatmap_html(stimuli, map, reference ? &*reference : nullptr);
    print_warnings(diag);
    out.commit();
}

// prompts ------------------------------------------------------------------

struct PromptArgs {
    std::string map;
    std::string source;
    std::size_t k = 0;
    int rounds = 5;
    std::uint64_t seed = 1;
    bool baseline = false;
};

void run_prompts(const Common& c, const PromptArgs& a) {
    Diagnostics diag;
    const auto stimuli = load_stimulus_file(c.stimuli, c.stopwords, &diag);
    if (stimuli.empty()) throw ValidationError(c.stimuli + ": no stimuli");
    if (a.baseline == !a.map.empty()) throw ValidationError("give exactly one of --baseline or --map");

    std::map<std::string, std::vector<std::string>> important;
    if (!a.map.empty()) {
        const auto binary = binarize_median(pick_map(a.map, a.source));
        for (const auto& s : stimuli) important[s.stimulus_id] = important_words(s, binary);
    }
    std::vector<FewShotItem> items;
    for (const auto& s : stimuli) items.push_back({s.stimulus_id, s.text, label_of(s.style)});

    PromptSpec spec;
    spec.labels = labels_for(stimuli.front().style);
    spec.k_shots = a.k;
    spec.baseline = a.baseline;
    for (const auto& s : stimuli) {
        const auto labels = labels_for(s.style);
        if (labels.first != spec.labels.first) {
            throw ValidationError("stimulus '" + s.stimulus_id + "' mixes " + labels.first + "/" + labels.second +
                                  " with " + spec.labels.first + "/" + spec.labels.second + " items");
        }
    }

    std::vector<std::vector<FewShotPrompt>> rounds;
    for (int r = 1; r <= a.rounds; ++r) {
        rounds.push_back(build_fewshot_prompts(items, important, spec, a.seed + static_cast<std::uint64_t>(r - 1)));
    }
    PendingOutputs out(c.out_dir);
    for (int r = 1; r <= a.rounds; ++r) {
        write_prompts(out.open("prompts_round" + std::to_string(r) + ".jsonl"), rounds[r - 1], r);
    }
    print_warnings(diag);
    out.commit();
}

// score --------------------------------------------------------------------

std::map<std::string, std::string> read_jsonl_pairs(const std::string& path, const char* value_key) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    std::map<std::string, std::string> out;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto where = path + ":" + std::to_string(n) + ": ";
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(where + "invalid JSON: " + e.what());
        }
        if (!rec.is_object() || !rec.contains("prompt_id") || !rec["prompt_id"].is_string() ||
            !rec.contains(value_key) || !rec[value_key].is_string()) {
            throw ValidationError(where + "expected string fields 'prompt_id' and '" + value_key + "'");
        }
        const auto id = rec["prompt_id"].get<std::string>();
        if (!out.emplace(id, rec[value_key].get<std::string>()).second) {
            throw ValidationError(where + "duplicate prompt_id '" + id + "'");
        }
    }
    return out;
}

void run_score(const Common& c, const std::vector<std::string>& prompts, const std::vector<std::string>& completions) {
    if (prompts.size() != completions.size()) {
        throw ValidationError("need one completion file per prompt file (" + std::to_string(prompts.size()) + " vs " +
                              std::to_string(completions.size()) + ")");
    }
    std::vector<RoundCompletions> rounds;
    for (std::size_t r = 0; r < prompts.size(); ++r) {
        rounds.push_back({read_jsonl_pairs(prompts[r], "gold"), read_jsonl_pairs(completions[r], "completion")});
    }
    Diagnostics diag;
    const auto report = score_fewshot_runs(rounds, &diag);
    PendingOutputs out(c.out_dir);
    auto& acc = out.open("accuracy.csv");
    acc << "# mean (95% CI half-width): " << report.formatted() << '\n';
    write_csv_row(acc, {"round", "accuracy"});
    for (std::size_t r = 0; r < report.round_accuracy.size(); ++r) {
        write_csv_row(acc, {std::to_string(r + 1), format_double(report.round_accuracy[r])});
    }
    print_warnings(diag);
    out.commit();
    std::cout << report.formatted() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Eye-tracking saliency pipeline"};
    app.set_config("--config", "", "defaults file of 'key = value' lines ([subcommand] sections or dotted keys)");
    app.require_subcommand(1);

    Common common;
    std::string fixations;

    auto* segment = app.add_subcommand("segment", "segment stimuli into interest areas");
    add_common(segment, common, true);

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand("ingest", "assign fixations to interest areas and clean trials");
    add_common(ingest, common, false);
    ingest->add_option("--fixations", ingest_args.fixations, "fixation report")->required()->check(CLI::ExistingFile);
    ingest->add_option("--layout", ingest_args.layout, "interest-area pixel layout")->check(CLI::ExistingFile);
    ingest->add_option("--threshold-trackloss", ingest_args.track_loss, "drop trials with more track loss")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    ingest->add_option("--min-fixation-ms", ingest_args.min_ms, "drop shorter fixations")->capture_default_str();
    ingest->add_flag("--no-sd-rule", ingest_args.no_sd_rule, "disable the per-participant SD rule");
    ingest->add_option("--sd-multiplier", ingest_args.sd_k, "k in mean + k SD")->capture_default_str();
    ingest->add_option("--sd-variant", ingest_args.sd_variant)
        ->check(CLI::IsMember({"population", "sample"}))
        ->capture_default_str();

    bool serial = false;
    auto* metrics = app.add_subcommand("metrics", "compute the per-IA measure table");
    add_common(metrics, common, true);
    metrics->add_option("--fixations", fixations, "cleaned fixation report")->required()->check(CLI::ExistingFile);
    metrics->add_flag("--serial", serial, "use the single-threaded reference implementation");

    SaliencyArgs sal;
    auto* saliency = app.add_subcommand("saliency", "aggregate a measure into a saliency map");
    add_common(saliency, common, false);
    saliency->add_option("--measures", sal.measures, "measure table")->required()->check(CLI::ExistingFile);
    saliency->add_option("--measure", sal.measure)
        ->check(CLI::IsMember({"ffd", "frd", "gp", "dt", "rr", "ps", "fc", "reg"}))
        ->capture_default_str();
    saliency->add_option("--agg", sal.agg)->check(CLI::IsMember({"zscore", "raw", "lme"}))->capture_default_str();
    saliency->add_option("--condition", sal.condition)
        ->check(CLI::IsMember({"all", "contrast"}))
        ->capture_default_str();
    saliency->add_option("--sd-variant", sal.sd_variant)
        ->check(CLI::IsMember({"population", "sample"}))
        ->capture_default_str();

    CompareArgs cmp;
    auto* compare = app.add_subcommand("compare", "compare saliency maps");
    add_common(compare, common, true);
    compare->add_option("--maps", cmp.maps, "saliency map files")->check(CLI::ExistingFile);
    compare->add_option("--token-scores", cmp.token_scores, "token score files")->check(CLI::ExistingFile);
    compare->add_option("--annotations", cmp.annotations, "human annotation files")->check(CLI::ExistingFile);

    ReportArgs rep;
    auto* report = app.add_subcommand("report", "render an HTML heatmap");
    add_common(report, common, true);
    report->add_option("--map", rep.map, "saliency map file")->required()->check(CLI::ExistingFile);
    report->add_option("--source", rep.source, "source within the map file");
    report->add_option("--reference", rep.reference, "reference saliency map file")->check(CLI::ExistingFile);
    report->add_option("--reference-source", rep.reference_source, "source within the reference file");
    report->add_option("--annotations", rep.annotations, "annotation file used as reference")
        ->check(CLI::ExistingFile);

    PromptArgs pr;
    auto* prompts = app.add_subcommand("prompts", "build few-shot prompts");
    add_common(prompts, common, true);
    prompts->add_option("--map", pr.map, "saliency map giving the important words")->check(CLI::ExistingFile);
    prompts->add_option("--source", pr.source, "source within the map file");
    prompts->add_flag("--baseline", pr.baseline, "omit important words");
    prompts->add_option("--k", pr.k, "demonstrations per prompt")->check(CLI::Range(0, 4))->capture_default_str();
    prompts->add_option("--rounds", pr.rounds)->check(CLI::PositiveNumber)->capture_default_str();
    prompts->add_option("--seed", pr.seed, "round r uses seed + r - 1")->capture_default_str();

    std::vector<std::string> prompt_files, completion_files;
    auto* score = app.add_subcommand("score", "grade completions and report accuracy");
    add_common(score, common, false);
    score->add_option("--prompts", prompt_files, "prompt files, one per round")->required()->check(CLI::ExistingFile);
    score->add_option("--completions", completion_files, "completion files, one per round")
        ->required()
        ->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*segment) run_segment(common);
        if (*ingest) run_ingest(common, ingest_args);
        if (*metrics) run_metrics(common, fixations, serial);
        if (*saliency) run_saliency(common, sal);
        if (*compare) run_compare(common, cmp);
        if (*report) run_report(common, rep);
        if (*prompts) run_prompts(common, pr);
        if (*score) run_score(common, prompt_files, completion_files);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
