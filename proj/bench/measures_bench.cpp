// Times the serial reference against the OpenMP measure-table kernel on a
// synthetic corpus and checks that both produce identical tables.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>

#include "eyesal/ingest.hpp"
#include "eyesal/metrics.hpp"
#include "eyesal/stimulus.hpp"

using namespace eyesal;

namespace {

Stimulus make_stimulus(const std::string& id, std::size_t n_ias) {
    Stimulus s;
    s.stimulus_id = id;
    for (std::size_t i = 0; i < n_ias; ++i) {
        Token t;
        t.text = "w" + std::to_string(i);
        t.char_start = s.text.size() + (i == 0 ? 0 : 1);
        s.text += (i == 0 ? "" : " ") + t.text;
        t.char_end = s.text.size();
        s.tokens.push_back(t);
        s.ias.push_back({i, {i}, t.text});
    }
    return s;
}

TrialRecord make_trial(std::mt19937_64& gen, const std::string& pid, const Stimulus& stim, std::size_t trial_no) {
    TrialRecord t;
    t.participant_id = pid;
    t.trial_id = "T" + std::to_string(trial_no);
    t.stimulus_id = stim.stimulus_id;
    t.condition = trial_no % 2 == 0 ? Condition::congruent : Condition::incongruent;
    std::uniform_int_distribution<std::int64_t> dur(80, 500);
    std::uniform_real_distribution<double> pupil(800.0, 1200.0);
    std::uniform_int_distribution<int> move(0, 9);
    const std::size_t n = stim.ias.size();
    std::size_t pos = 0;
    std::int64_t clock = 0;
    for (std::size_t k = 0; k < 3 * n; ++k) {
        FixationEvent f;
        f.fixation_index = k;
        f.start_ms = clock;
        f.end_ms = clock + dur(gen);
        f.pupil = pupil(gen);
        const int m = move(gen);
        if (m == 0) {
            f.ia_index.reset();
        } else {
            if (m < 7 && pos + 1 < n) ++pos;
            else if (m == 9) pos = static_cast<std::size_t>(gen() % n);
            f.ia_index = pos;
        }
        clock = f.end_ms + 30;
        t.fixations.push_back(f);
    }
    return t;
}

template <class F>
double best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Serial vs OpenMP measure-table benchmark"};
    int participants = 60, stimuli = 90, ias = 12, reps = 5;
    std::uint64_t seed = 1;
    app.add_option("--participants", participants)->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--stimuli", stimuli)->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--ias", ias, "interest areas per stimulus")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--reps", reps, "timed repetitions; the best is reported")->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--seed", seed)->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    std::mt19937_64 gen(seed);
    std::vector<Stimulus> stims;
    for (int s = 0; s < stimuli; ++s) stims.push_back(make_stimulus("s" + std::to_string(s), static_cast<std::size_t>(ias)));
    std::vector<TrialRecord> trials;
    for (int p = 0; p < participants; ++p) {
        for (int s = 0; s < stimuli; ++s) {
            trials.push_back(make_trial(gen, "P" + std::to_string(p), stims[static_cast<std::size_t>(s)],
                                        static_cast<std::size_t>(s)));
        }
    }
    const auto index = index_stimuli(stims);

    MeasureTable serial, parallel;
    const double t_serial = best_of(reps, [&] { serial = compute_measure_table_serial(trials, index); });
    const double t_parallel = best_of(reps, [&] { parallel = compute_measure_table(trials, index); });
    const bool same = serial.rows == parallel.rows;

    std::printf("trials %zu, rows %zu, threads %d\n", trials.size(), serial.rows.size(), omp_get_max_threads());
    std::printf("%-10s %12s %10s\n", "kernel", "best (ms)", "speedup");
    std::printf("%-10s %12.2f %10.2f\n", "serial", 1e3 * t_serial, 1.0);
    std::printf("%-10s %12.2f %10.2f\n", "openmp", 1e3 * t_parallel, t_serial / t_parallel);
    std::printf("tables identical: %s\n", same ? "yes" : "NO");
    return same ? 0 : 1;
}
