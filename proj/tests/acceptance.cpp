// Acceptance checks: one PASS/FAIL line per criterion. Exit status is
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "eyesal/compare.hpp"
#include "eyesal/fewshot.hpp"
#include "eyesal/metrics.hpp"
#include "eyesal/saliency.hpp"
#include "eyesal/stats.hpp"
#include "eyesal/stimulus.hpp"
#include "oracles/fixtures.hpp"
#include "oracles/generators.hpp"
#include "oracles/lmm_sim.hpp"
#include "oracles/measure_oracle.hpp"
#include "oracles/tables.hpp"

using namespace eyesal;

namespace {

enum class Verdict { pass, fail, skipped };

struct Outcome {
    Verdict verdict;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

Outcome metric_identity() {
    const auto t0 = Clock::now();
    std::mt19937_64 gen(1001);
    std::uniform_int_distribution<std::size_t> ia_count(1, 15);
    const int n_sequences = 2000;
    std::size_t identity_failures = 0, order_failures = 0, oracle_failures = 0, max_len = 0;
    for (int s = 0; s < n_sequences; ++s) {
        const auto n_ias = ia_count(gen);
        const auto seq = testgen::random_sequence(gen, 40, n_ias);
        max_len = std::max(max_len, seq.size());
        const auto got = compute_ia_measures(seq, n_ias);
        for (std::size_t ia = 0; ia < n_ias; ++ia) {
            const auto& m = got[ia];
            if (!(m == oracle::measures_for(seq, ia))) ++oracle_failures;
            if (!m.dt_ms) continue;
            if (*m.frd_ms + *m.rr_ms != *m.dt_ms) ++identity_failures;
            if (!(*m.ffd_ms <= *m.frd_ms && *m.frd_ms <= *m.gp_ms && *m.gp_ms <= *m.dt_ms)) ++order_failures;
        }
    }
    const double secs = seconds_since(t0);
    const bool ok = identity_failures == 0 && order_failures == 0 && oracle_failures == 0 && secs < 5.0;
    return {ok ? Verdict::pass : Verdict::fail,
            std::to_string(n_sequences) + " sequences (max length " + std::to_string(max_len) +
                "), identity failures " + std::to_string(identity_failures) + ", ordering failures " +
                std::to_string(order_failures) + ", oracle mismatches " + std::to_string(oracle_failures) + ", " +
                fmt("%.2f s", secs)};
}

std::vector<std::string> ia_texts(const std::vector<InterestArea>& ias) {
    std::vector<std::string> out;
    for (const auto& ia : ias) out.push_back(ia.text);
    return out;
}

/// Nearest content token on the same line by token distance, ties to the right.
std::optional<std::size_t> nearest_content(const std::vector<Token>& tokens, const std::vector<bool>& stop,
                                           std::size_t i) {
    std::optional<std::size_t> best;
    std::size_t best_d = 0;
    for (std::size_t j = 0; j < tokens.size(); ++j) {
        if (stop[j] || tokens[j].line_index != tokens[i].line_index) continue;
        const std::size_t d = j > i ? j - i : i - j;
        if (!best || d < best_d || (d == best_d && j > *best)) {
            best = j;
            best_d = d;
        }
    }
    return best;
}

Outcome segmentation() {
    const std::vector<std::pair<std::string, std::vector<std::string>>> cases{
        {"Thank you for your kind comment .", {"Thank you", "for your kind", "comment ."}},
        {"Do you have a suggestion where the portals should be placed ?",
         {"Do you have a suggestion where", "the portals should", "be placed ?"}},
        {"Great movie", {"Great", "movie"}},
        {"I love | it", {"I love", "it"}},
        {"great plot and | awful ending", {"great", "plot and", "awful", "ending"}},
        {"movie of the | year", {"movie of the", "year"}},
        {"and the", {"and the"}},
        {"cats and dogs", {"cats", "and dogs"}},
        {"the cat", {"the cat"}},
        {"cat the", {"cat the"}},
        {"I am very happy to see you here", {"I am very happy", "to see you here"}},
        {"Thanks , but no thanks .", {"Thanks ,", "but no thanks ."}},
        {"What a terrible , terrible film", {"What a terrible", ", terrible", "film"}},
        {"Please | do not | reply", {"Please", "do not", "reply"}},
        {"You are so wrong about this", {"You are so wrong about this"}},
        {"Could you please explain your reasoning ?", {"Could", "you please", "explain", "your reasoning ?"}},
        {"love it or hate", {"love it", "or hate"}},
        {"best of all the films", {"best of", "all the films"}},
        {"Wow . | Just wow !", {"Wow .", "Just wow !"}},
        {"good | and then great", {"good", "and then great"}},
    };
    std::size_t hand_ok = 0;
    std::string first_bad;
    for (const auto& [sentence, expected] : cases) {
        const auto ias = segment_interest_areas(testgen::tokenize(sentence), default_stopwords());
        if (ia_texts(ias) == expected) {
            ++hand_ok;
        } else if (first_bad.empty()) {
            first_bad = " (first mismatch: \"" + sentence + "\")";
        }
    }

    std::mt19937_64 gen(2002);
    std::size_t random_ok = 0;
    const int n_random = 500;
    for (int iter = 0; iter < n_random; ++iter) {
        std::vector<bool> stop;
        const auto tokens = testgen::random_tokens(gen, stop);
        std::unique_ptr<bool[]> mask(new bool[stop.size()]);
        std::copy(stop.begin(), stop.end(), mask.get());
        const auto ias = segment_interest_areas(tokens, std::span<const bool>(mask.get(), stop.size()));

        bool ok = true;
        std::vector<std::size_t> owner(tokens.size(), SIZE_MAX);
        std::size_t next = 0;
        for (std::size_t a = 0; a < ias.size(); ++a) {
            std::size_t content = 0;
            for (auto t : ias[a].token_indices) {
                ok = ok && t == next++ && tokens[t].line_index == tokens[ias[a].token_indices.front()].line_index;
                owner[t] = a;
                if (!stop[t]) ++content;
            }
            ok = ok && ias[a].ia_index == a && content <= 1;
        }
        ok = ok && next == tokens.size();
        for (std::size_t i = 0; ok && i < tokens.size(); ++i) {
            if (!stop[i]) continue;
            const auto target = nearest_content(tokens, stop, i);
            if (target) {
                ok = owner[i] == owner[*target];
            } else {
                for (std::size_t j = 0; j < tokens.size(); ++j) {
                    if (tokens[j].line_index == tokens[i].line_index) ok = ok && owner[j] == owner[i];
                }
            }
        }
        if (ok) ++random_ok;
    }
    const bool ok = hand_ok == cases.size() && random_ok == n_random;
    return {ok ? Verdict::pass : Verdict::fail,
            std::to_string(hand_ok) + "/" + std::to_string(cases.size()) + " hand partitions" + first_bad + ", " +
                std::to_string(random_ok) + "/" + std::to_string(n_random) + " random lists satisfy invariants"};
}

MeasureTable random_dt_table(std::mt19937_64& gen) {
    std::uniform_int_distribution<int> n_part(2, 8), n_stim(1, 4), n_ia(2, 10), pct(0, 99);
    std::uniform_int_distribution<std::int64_t> dur(80, 1500);
    MeasureTable t;
    const int participants = n_part(gen), stimuli = n_stim(gen);
    std::vector<int> ias(stimuli);
    for (auto& n : ias) n = n_ia(gen);
    for (int p = 0; p < participants; ++p) {
        for (int s = 0; s < stimuli; ++s) {
            for (int i = 0; i < ias[s]; ++i) {
                std::optional<std::int64_t> v;
                if (pct(gen) >= 15) v = dur(gen);
                t.rows.push_back(testgen::dt_row("p" + std::to_string(p), "t" + std::to_string(s),
                                                 "s" + std::to_string(s), static_cast<std::size_t>(i), v));
            }
        }
    }
    testgen::sort_table(t);
    return t;
}

Outcome saliency() {
    std::mt19937_64 gen(3003);
    double worst_mean = 0.0, worst_sd = 0.0, worst_affine = 0.0;
    std::size_t binarize_mismatch = 0, cardinality_failures = 0;
    const int n_tables = 100;
    for (int rep = 0; rep < n_tables; ++rep) {
        const auto table = random_dt_table(gen);

        std::map<std::string, MeasureTable> by_participant;
        for (const auto& r : table.rows) by_participant[r.key.participant_id].rows.push_back(r);
        for (const auto& [pid, sub] : by_participant) {
            const auto m = zscore_aggregate(sub, Measure::dt, ConditionFilter::all);
            if (m.scores.size() < 2) continue;
            double sum = 0, ss = 0;
            for (const auto& [k, z] : m.scores) sum += z;
            const double mean = sum / static_cast<double>(m.scores.size());
            for (const auto& [k, z] : m.scores) ss += (z - mean) * (z - mean);
            worst_mean = std::max(worst_mean, std::abs(mean));
            worst_sd = std::max(worst_sd, std::abs(std::sqrt(ss / static_cast<double>(m.scores.size())) - 1.0));
        }

        std::uniform_int_distribution<std::int64_t> scale(1, 6), shift(-50, 400);
        std::map<std::string, std::pair<std::int64_t, std::int64_t>> affine;
        auto transformed = table;
        for (auto& r : transformed.rows) {
            auto [it, fresh] = affine.try_emplace(r.key.participant_id, 0, 0);
            if (fresh) it->second = {scale(gen), shift(gen)};
            if (r.measures.dt_ms) r.measures.dt_ms = it->second.first * *r.measures.dt_ms + it->second.second;
        }
        const auto base = zscore_aggregate(table, Measure::dt, ConditionFilter::all);
        const auto moved = zscore_aggregate(transformed, Measure::dt, ConditionFilter::all);
        for (const auto& [k, z] : base.scores) worst_affine = std::max(worst_affine, std::abs(z - moved.scores.at(k)));
        if (binarize_median(base).salient != binarize_median(moved).salient) ++binarize_mismatch;

        auto stretched = base;
        for (auto& [k, z] : stretched.scores) z = 3.5 * z - 7.0;
        if (binarize_median(base).salient != binarize_median(stretched).salient) ++binarize_mismatch;
    }
    for (std::size_t m = 1; m <= 200; ++m) {
        std::vector<double> v(m);
        std::iota(v.begin(), v.end(), 0.0);
        std::shuffle(v.begin(), v.end(), gen);
        SaliencyMap map;
        for (std::size_t i = 0; i < m; ++i) map.scores[{"s", i}] = v[i] * 0.37 - 5.0;
        if (binarize_median(map).salient.size() != m / 2) ++cardinality_failures;
    }
    const bool ok = worst_mean <= 1e-9 && worst_sd <= 1e-9 && worst_affine <= 1e-9 && binarize_mismatch == 0 &&
                    cardinality_failures == 0;
    return {ok ? Verdict::pass : Verdict::fail,
            "max |mean z| " + fmt("%.1e", worst_mean) + ", max |SD z - 1| " + fmt("%.1e", worst_sd) +
                ", max affine drift " + fmt("%.1e", worst_affine) + " over " + std::to_string(n_tables) +
                " tables, binarize mismatches " + std::to_string(binarize_mismatch) +
                ", cardinality failures " + std::to_string(cardinality_failures) + "/200"};
}

Outcome statistics() {
    const auto t0 = Clock::now();
    std::mt19937_64 gen(4004);
    int covered = 0;
    const int reps = 100;
    for (int rep = 0; rep < reps; ++rep) {
        const auto sim = testgen::simulate_lmm(gen, 20, 90, 0.3, 1.0, 1.0);
        const auto fit = fit_random_intercept_lmm(sim.design);
        if (std::abs(fit.beta(1) - 0.3) <= 2.0 * fit.se(1)) ++covered;
    }

    auto flat = testgen::simulate_lmm(gen, 20, 90, 0.3, 0.0, 1.0);
    Eigen::VectorXd e = flat.design.response - flat.design.fixed * flat.beta;
    for (int g = 0; g < 20; ++g) e.segment(g * 90, 90).array() -= e.segment(g * 90, 90).mean();
    flat.design.response = flat.design.fixed * flat.beta + e;
    const auto flat_fit = fit_random_intercept_lmm(flat.design);
    const auto ols = testgen::ols(flat.design.fixed, flat.design.response);
    const double ols_gap = (flat_fit.beta - ols).cwiseAbs().maxCoeff();

    Eigen::MatrixXd orth(8, 3);
    orth << 1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, 1, 1, 1, -1, -1, 1, 1, 1, -1, 1, -1, -1, -1;
    const auto v_orth = compute_vif(orth);
    const bool vif_one = std::all_of(v_orth.begin(), v_orth.end(), [](double v) { return v == 1.0; });
    Eigen::MatrixXd dup(6, 3);
    dup << 1, 1, 2, 2, 2, 7, 3, 3, 1, 4, 4, 8, 5, 5, 2, 6, 6, 9;
    const auto v_dup = compute_vif(dup);
    const bool vif_inf = std::isinf(v_dup[0]) && std::isinf(v_dup[1]) && std::isfinite(v_dup[2]);

    const std::vector<double> x{1, 2, 3}, y{1, 3, 2};
    const double r = pearson_r(x, y).value_or(NAN);
    const double secs = seconds_since(t0);
    const bool ok = covered >= 95 && ols_gap <= 1e-6 && vif_one && vif_inf && std::abs(r - 0.5) <= 1e-12 && secs < 60.0;
    return {ok ? Verdict::pass : Verdict::fail,
            "beta_congruent covered " + std::to_string(covered) + "/" + std::to_string(reps) + ", OLS gap " +
                fmt("%.1e", ols_gap) + ", VIF orthogonal " + (vif_one ? "1.0" : "not 1.0") + ", duplicate " +
                (vif_inf ? "inf" : "finite") + ", pearson " + fmt("%.15f", r) + ", " + fmt("%.2f s", secs)};
}

Outcome comparison() {
    std::mt19937_64 gen(5005);
    std::bernoulli_distribution coin(0.45);
    std::size_t venn_failures = 0;
    double worst_pos = 0.0;
    const int triples = 100;
    for (int rep = 0; rep < triples; ++rep) {
        const std::size_t n = 1 + gen() % 60;
        std::vector<BinaryMap> maps(3);
        for (auto& m : maps) {
            for (std::size_t i = 0; i < n; ++i) {
                m.universe.insert({"s", i});
                if (coin(gen)) m.salient.insert({"s", i});
            }
        }
        const auto v = venn_partition(maps);
        for (unsigned a = 0; a < 3; ++a) {
            for (unsigned b = a + 1; b < 3; ++b) {
                std::size_t inter = 0, uni = 0;
                for (unsigned mask = 1; mask < 8; ++mask) {
                    const bool in_a = mask & (1u << a), in_b = mask & (1u << b);
                    if (in_a && in_b) inter += v.regions[mask];
                    if (in_a || in_b) uni += v.regions[mask];
                }
                const double rebuilt = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
                if (rebuilt != jaccard(maps[a], maps[b])) ++venn_failures;
            }
        }

        auto stim = testgen::simple_stimulus("s", n);
        static const char* tags[] = {"NN", "NNS", "VBG", "VBD", "JJ", "RB", "DT", "IN", "PRP", ""};
        for (auto& t : stim.tokens) t.pos_tag = tags[gen() % 10];
        const auto idx = index_stimuli(std::span<const Stimulus>(&stim, 1));
        for (const auto& m : maps) {
            const auto hist = pos_distribution(m, idx);
            if (hist.token_count == 0) continue;
            double total = 0;
            for (const auto& [tag, p] : hist.proportions) total += p;
            worst_pos = std::max(worst_pos, std::abs(total - 1.0));
        }
    }
    const bool ok = venn_failures == 0 && worst_pos <= 1e-12;
    return {ok ? Verdict::pass : Verdict::fail,
            std::to_string(triples) + " triples, Jaccard reconstruction mismatches " + std::to_string(venn_failures) +
                ", max |sum POS proportions - 1| " + fmt("%.1e", worst_pos)};
}

Outcome dataset_dependent() {
    return {Verdict::skipped, "no public eye-tracking release ingested; property suites stand in"};
}

Outcome fewshot() {
    const std::string literal =
        "Decide whether the following text is Polite or Impolite.\n"
        "Text: Thank you for your kind comment. Do you have a suggestion where the portals should be placed?\n"
        "Important words: thank you, suggestion\n"
        "Polite or Impolite:";
    const std::string task = "Decide whether the following text is Polite or Impolite.";
    std::vector<FewShotItem> items{
        {"q", "Thank you for your kind comment. Do you have a suggestion where the portals should be placed?", "Polite"}};
    const std::map<std::string, std::vector<std::string>> important{{"q", {"thank you", "suggestion"}},
                                                                     {"d", {"nonsense"}}};
    PromptSpec spec;
    const bool query_exact = build_fewshot_prompts(items, important, spec, 1)[0].text == literal;

    items.push_back({"d", "What nonsense.", "Impolite"});
    spec.k_shots = 1;
    const auto k1 = build_fewshot_prompts(items, important, spec, 1)[0].text;
    const std::string demo = "\nText: What nonsense.\nImportant words: nonsense\nPolite or Impolite: Impolite";
    const bool k1_exact = k1 == task + demo + literal.substr(task.size());

    std::vector<RoundCompletions> rounds(5);
    const int correct[] = {18, 19, 18, 19, 18};
    for (std::size_t r = 0; r < 5; ++r) {
        for (int i = 0; i < 20; ++i) {
            const auto id = "p" + std::to_string(i);
            rounds[r].gold[id] = "Polite";
            rounds[r].completions[id] = i < correct[r] ? "polite." : "Impolite";
        }
    }
    const auto formatted = score_fewshot_runs(rounds).formatted();
    const bool ok = query_exact && k1_exact && formatted == "0.92 (0.034)";
    return {ok ? Verdict::pass : Verdict::fail,
            std::string("reference prompt block ") + (query_exact ? "byte-identical" : "differs") +
                ", k=1 prompt = task line + demonstration + that block " + (k1_exact ? "yes" : "no") +
                ", accuracy report \"" + formatted + "\""};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"metric identity suite", metric_identity},
        {"segmentation suite", segmentation},
        {"saliency suite", saliency},
        {"statistics suite", statistics},
        {"comparison suite", comparison},
        {"dataset-dependent reproduction (optional)", dataset_dependent},
        {"few-shot harness", fewshot},
    };
    int failures = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {Verdict::fail, std::string("exception: ") + e.what()};
        }
        const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::fail ? "FAIL" : "SKIPPED";
        if (o.verdict == Verdict::fail) ++failures;
        std::printf("%-7s %s: %s\n", tag, name.c_str(), o.detail.c_str());
    }
    return failures == 0 ? 0 : 1;
}
