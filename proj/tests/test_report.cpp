#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "eyesal/report.hpp"
#include "oracles/fixtures.hpp"

using namespace eyesal;

namespace {

SaliencyMap map_for(const std::string& stim, const std::vector<double>& v, const std::string& source = "dt/zscore/all") {
    SaliencyMap m;
    m.source = source;
    for (std::size_t i = 0; i < v.size(); ++i) m.scores[{stim, i}] = v[i];
    return m;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("opacity normalization") {
    const auto stim = testgen::simple_stimulus("s", 4);
    for (const auto& o : heatmap_opacity(stim, map_for("s", {2, 2, 2, 2}))) CHECK(*o == 0.5);
    const auto o = heatmap_opacity(stim, map_for("s", {0.1, -1.0, 3.0, 1.0}));
    CHECK(*o[2] == 1.0);
    CHECK(*o[1] == 0.0);
    CHECK(*o[0] < 1.0);
    CHECK(*o[3] == doctest::Approx(0.5));
    auto partial = map_for("s", {1, 2, 3, 4});
    partial.scores.erase({"s", 1});
    CHECK_FALSE(heatmap_opacity(stim, partial)[1].has_value());
}

TEST_CASE("escaping and unscored IAs") {
    CHECK(html_escape("a<b & \"c\">'") == "a&lt;b &amp; &quot;c&quot;&gt;&#39;");
    auto stim = testgen::simple_stimulus("s", 3);
    stim.tokens[1].text = "<b>";
    stim.ias[1].text = "<b>";
    auto m = map_for("s", {1, 2, 3});
    m.scores.erase({"s", 1});
    const auto html = render_heatmap_html(stim, m);
    CHECK(html.find("&lt;b&gt;") != std::string::npos);
    CHECK(html.find("<b>") == std::string::npos);
    CHECK(html.find("no score") != std::string::npos);
    CHECK(render_heatmap_html(stim, m) == html);
}

TEST_CASE("golden heatmap document") {
    auto stim = testgen::simple_stimulus("golden", 5);
    stim.tokens[3].line_index = 1;
    stim.tokens[4].line_index = 1;
    const auto m = map_for("golden", {0.25, -1.5, 2.0, 0.0, 1.0});
    auto ref = map_for("golden", {1, 0, 1, 0, 0}, "human");
    const auto html = render_heatmap_html(stim, m, &ref);
    const std::string path = std::string(EYESAL_TEST_DIR) + "/golden/heatmap.html";
    if (std::getenv("EYESAL_UPDATE_GOLDEN") != nullptr) {
        std::ofstream(path, std::ios::binary) << html;
        MESSAGE("recorded golden file " << path);
    }
    const auto expected = read_file(path);
    REQUIRE_FALSE(expected.empty());
    CHECK(html == expected);
}

}
