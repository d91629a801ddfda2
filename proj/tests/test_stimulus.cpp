#include <doctest.h>

#include <memory>

#include <random>
#include <sstream>

#include "eyesal/stimulus.hpp"
#include "oracles/generators.hpp"

using namespace eyesal;

namespace {

std::vector<std::string> ia_texts(const std::vector<InterestArea>& ias) {
    std::vector<std::string> out;
    for (const auto& ia : ias) out.push_back(ia.text);
    return out;
}

std::string record(const std::string& id, const std::string& tokens_json, const std::string& text = "Thank you") {
    return R"({"stimulus_id":")" + id + R"(","style":"polite","source":"forum","text":")" + text +
           R"(","tokens":)" + tokens_json + "}";
}

const std::string kTwoTokens =
    R"([{"text":"Thank","char_start":0,"char_end":5,"line_index":0,"pos_tag":"VB","log_freq":9.1},)"
    R"({"text":"you","char_start":6,"char_end":9,"line_index":0,"pos_tag":"PRP","log_freq":12.0}])";

}  // namespace

TEST_SUITE("stimulus") {

TEST_CASE("stopwords merge with the nearest content word, ties go right") {
    const auto tokens = testgen::tokenize("Thank you for your kind comment");
    const StopwordSet stop{"you", "for", "your"};
    const auto ias = segment_interest_areas(tokens, stop);
    CHECK(ia_texts(ias) == std::vector<std::string>{"Thank you", "for your kind", "comment"});
    for (std::size_t i = 0; i < ias.size(); ++i) CHECK(ias[i].ia_index == i);
}

TEST_CASE("no stopwords gives one IA per token") {
    const auto tokens = testgen::tokenize("Great acting wonderful score");
    const auto ias = segment_interest_areas(tokens, StopwordSet{});
    REQUIRE(ias.size() == tokens.size());
    for (std::size_t i = 0; i < ias.size(); ++i) CHECK(ias[i].token_indices == std::vector<std::size_t>{i});
}

TEST_CASE("a stopword at line end stays on its own line") {
    // "the" is one token from "plot" on its line and one token from "ending" across the break.
    const auto tokens = testgen::tokenize("great plot the | ending");
    const auto ias = segment_interest_areas(tokens, StopwordSet{"the"});
    CHECK(ia_texts(ias) == std::vector<std::string>{"great", "plot the", "ending"});
}

TEST_CASE("an all-stopword line forms one degenerate IA with a warning") {
    const auto tokens = testgen::tokenize("reply | to it | soon");
    Diagnostics diag;
    const auto ias = segment_interest_areas(tokens, default_stopwords(), &diag);
    CHECK(ia_texts(ias) == std::vector<std::string>{"reply", "to it", "soon"});
    CHECK(diag.warnings().size() == 1);
}

TEST_CASE("punctuation attaches like a stopword, ties going right") {
    const auto tokens = testgen::tokenize("Thanks , friend !");
    const auto ias = segment_interest_areas(tokens, StopwordSet{});
    CHECK(ia_texts(ias) == std::vector<std::string>{"Thanks", ", friend !"});
}

TEST_CASE("empty token list is an error") {
    CHECK_THROWS_AS(segment_interest_areas(std::vector<Token>{}, StopwordSet{}), ValidationError);
}

TEST_CASE("stopword matching is case-insensitive") {
    CHECK(is_stopword("The", default_stopwords()));
    CHECK(is_stopword("YOU", default_stopwords()));
    CHECK_FALSE(is_stopword("Thank", default_stopwords()));
    CHECK(default_stopwords().size() == 179);
}

TEST_CASE("segmentation invariants on random token lists") {
    std::mt19937_64 gen(7);
    for (int iter = 0; iter < 300; ++iter) {
        std::vector<bool> mask_v;
        const auto tokens = testgen::random_tokens(gen, mask_v);
        std::unique_ptr<bool[]> mask(new bool[mask_v.size()]);
        for (std::size_t i = 0; i < mask_v.size(); ++i) mask[i] = mask_v[i];
        const auto ias = segment_interest_areas(tokens, std::span<const bool>(mask.get(), mask_v.size()));
        CHECK_NOTHROW(validate_interest_areas(tokens, ias, "random"));

        // Idempotence: segmenting the content-only projection gives singletons.
        std::vector<Token> content;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (!mask_v[i]) content.push_back(tokens[i]);
        }
        if (!content.empty()) {
            std::unique_ptr<bool[]> none(new bool[content.size()]());
            const auto single = segment_interest_areas(content, std::span<const bool>(none.get(), content.size()));
            CHECK(single.size() == content.size());
        }
    }
}

TEST_CASE("load_stimuli parses, segments and reports bad records by line") {
    std::istringstream in(record("s1", kTwoTokens) + "\n\n" + record("s2", kTwoTokens) + "\n");
    const auto stims = load_stimuli(in, default_stopwords());
    REQUIRE(stims.size() == 2);
    CHECK(stims[0].ias.size() == 1);
    CHECK(stims[0].ias[0].text == "Thank you");
    CHECK(stims[0].tokens[1].is_stopword);
    CHECK(stims[0].ia_length(0) == 9);
    CHECK(stims[0].ia_log_freq(0) == doctest::Approx(9.1));

    std::istringstream empty("");
    CHECK(load_stimuli(empty, default_stopwords()).empty());

    const std::string overlapping =
        R"([{"text":"Thank","char_start":0,"char_end":5,"line_index":0,"pos_tag":"VB","log_freq":1},)"
        R"({"text":"you","char_start":4,"char_end":9,"line_index":0,"pos_tag":"PRP","log_freq":1}])";
    std::istringstream bad(record("s1", kTwoTokens) + "\n" + record("s3", overlapping) + "\n");
    try {
        load_stimuli(bad, default_stopwords(), nullptr, "stimuli.jsonl");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("stimuli.jsonl:2") != std::string::npos);
    }

    std::istringstream missing(R"({"stimulus_id":"x","style":"polite","source":"forum","text":"a"})");
    try {
        load_stimuli(missing, default_stopwords());
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("'tokens'") != std::string::npos);
    }

    std::istringstream bad_style(R"({"stimulus_id":"x","style":"rude","source":"forum","text":"Thank you","tokens":)" +
                                 kTwoTokens + "}");
    CHECK_THROWS_AS(load_stimuli(bad_style, default_stopwords()), ValidationError);
}

TEST_CASE("a file of 90 stimuli loads as 90 values and round-trips") {
    std::string file;
    for (int i = 0; i < 90; ++i) file += record("item" + std::to_string(i), kTwoTokens) + "\n";
    std::istringstream in(file);
    const auto stims = load_stimuli(in, default_stopwords());
    CHECK(stims.size() == 90);

    std::ostringstream out;
    write_stimuli(out, stims);
    std::istringstream again(out.str());
    const auto reloaded = load_stimuli(again, StopwordSet{});
    REQUIRE(reloaded.size() == 90);
    CHECK(reloaded[5].ias[0].token_indices == stims[5].ias[0].token_indices);
}

TEST_CASE("explicit interest areas are validated") {
    const std::string tokens =
        R"([{"text":"Thank","char_start":0,"char_end":5,"line_index":0,"pos_tag":"VB","log_freq":1},)"
        R"({"text":"you","char_start":6,"char_end":9,"line_index":1,"pos_tag":"PRP","log_freq":1}])";
    std::istringstream ok(R"({"stimulus_id":"x","style":"polite","source":"forum","text":"Thank you","tokens":)" +
                          tokens + R"(,"ias":[[0],[1]]})");
    CHECK(load_stimuli(ok, default_stopwords())[0].ias.size() == 2);
    std::istringstream crosses(R"({"stimulus_id":"x","style":"polite","source":"forum","text":"Thank you","tokens":)" +
                               tokens + R"(,"ias":[[0,1]]})");
    CHECK_THROWS_AS(load_stimuli(crosses, default_stopwords()), ValidationError);
}

TEST_CASE("utf8 offsets count code points") {
    CHECK(utf8_length("café") == 4);
    CHECK(utf8_substr("café ok", 0, 4) == "café");
    CHECK(utf8_substr("café ok", 5, 7) == "ok");
}

}
