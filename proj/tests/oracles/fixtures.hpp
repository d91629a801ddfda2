#pragma once

#include <string>
#include <vector>

#include "eyesal/ingest.hpp"
#include "eyesal/metrics.hpp"
#include "eyesal/stimulus.hpp"

namespace eyesal::testgen {

/// Stimulus with one single-token IA per word "w0 w1 ...", all on line 0.
inline Stimulus simple_stimulus(const std::string& id, std::size_t n_ias) {
    Stimulus s;
    s.stimulus_id = id;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n_ias; ++i) {
        Token t;
        t.text = "w" + std::to_string(i);
        t.char_start = pos;
        t.char_end = pos + t.text.size();
        t.pos_tag = i % 2 == 0 ? "NN" : "VBG";
        t.log_freq = 5.0 + static_cast<double>(i % 3);
        pos = t.char_end + 1;
        s.text += (i == 0 ? "" : " ") + t.text;
        s.tokens.push_back(t);
        s.ias.push_back({i, {i}, t.text});
    }
    return s;
}

/// Trial whose in-IA fixations follow `seq` back to back.
inline TrialRecord trial_from_sequence(const std::string& pid, const std::string& tid, const std::string& stim,
                                       std::span<const GazeStep> seq, Condition cond = Condition::congruent) {
    TrialRecord t;
    t.participant_id = pid;
    t.trial_id = tid;
    t.stimulus_id = stim;
    t.condition = cond;
    std::int64_t clock = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        FixationEvent f;
        f.fixation_index = i;
        f.start_ms = clock;
        f.end_ms = clock + seq[i].duration_ms;
        f.pupil = seq[i].pupil;
        f.ia_index = seq[i].ia;
        clock = f.end_ms + 25;
        t.fixations.push_back(f);
    }
    return t;
}

}  // namespace eyesal::testgen
