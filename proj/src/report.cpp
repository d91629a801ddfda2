#include "eyesal/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace eyesal {

std::string html_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&#39;"; break;
            default: out += c;
        }
    }
    return out;
}

std::vector<std::optional<double>> heatmap_opacity(const Stimulus& stimulus, const SaliencyMap& map) {
    std::vector<std::optional<double>> scores(stimulus.ias.size());
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto it = map.scores.find({stimulus.stimulus_id, i});
        if (it == map.scores.end()) continue;
        scores[i] = it->second;
        lo = any ? std::min(lo, it->second) : it->second;
        hi = any ? std::max(hi, it->second) : it->second;
        any = true;
    }
    for (auto& s : scores) {
        if (!s) continue;
        s = hi == lo ? 0.5 : (*s - lo) / (hi - lo);
    }
    return scores;
}

namespace {

constexpr const char* kStyle =
    "body{font-family:Georgia,serif;max-width:52em;margin:2em auto;line-height:1.9}"
    "h1{font-size:1.2em}h2{font-size:1em;margin-top:2em}"
    ".row{margin:.4em 0}.label{font:.75em sans-serif;color:#555;display:block}"
    ".ia{padding:.1em .15em;border-radius:3px}"
    ".gaze .ia{background:rgba(230,97,0,var(--a))}"
    ".ref .ia{background:rgba(31,119,180,var(--a))}"
    ".none{outline:1px dashed #aaa}";

std::string fmt(const char* spec, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

void render_row(std::ostringstream& out, const Stimulus& stim, const SaliencyMap& map, const char* css_class) {
    const auto opacity = heatmap_opacity(stim, map);
    out << "<div class=\"row " << css_class << "\"><span class=\"label\">" << html_escape(map.source)
        << "</span>";
    std::size_t prev_line = stim.ias.empty() ? 0 : stim.tokens[stim.ias.front().token_indices.front()].line_index;
    for (std::size_t i = 0; i < stim.ias.size(); ++i) {
        const auto line = stim.tokens[stim.ias[i].token_indices.front()].line_index;
        if (i > 0) out << (line != prev_line ? "<br>\n" : " ");
        prev_line = line;
        const auto it = map.scores.find({stim.stimulus_id, i});
        if (opacity[i]) {
            out << "<span class=\"ia\" style=\"--a:" << fmt("%.3f", *opacity[i]) << "\" title=\"IA " << i
                << ": " << fmt("%.4g", it->second) << "\">";
        } else {
            out << "<span class=\"ia none\" title=\"IA " << i << ": no score\">";
        }
        out << html_escape(stim.ias[i].text) << "</span>";
    }
    out << "</div>\n";
}

void render_section(std::ostringstream& out, const Stimulus& stim, const SaliencyMap& map,
                    const SaliencyMap* reference) {
    out << "<section id=\"" << html_escape(stim.stimulus_id) << "\">\n<h2>" << html_escape(stim.stimulus_id)
        << " <small>(" << to_string(stim.style) << ", " << to_string(stim.source) << ")</small></h2>\n";
    render_row(out, stim, map, "gaze");
    if (reference != nullptr) render_row(out, stim, *reference, "ref");
    out << "</section>\n";
}

std::string document(const std::string& title, const std::string& body) {
    std::ostringstream out;
    out << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>"
        << html_escape(title) << "</title>\n<style>" << kStyle << "</style>\n</head>\n<body>\n<h1>"
        << html_escape(title) << "</h1>\n"
        << body << "</body>\n</html>\n";
    return out.str();
}

}  // namespace

std::string render_heatmap_html(const Stimulus& stimulus, const SaliencyMap& map, const SaliencyMap* reference) {
    std::ostringstream body;
    render_section(body, stimulus, map, reference);
    return document("Saliency: " + map.source, body.str());
}

std::string render_heatmap_html(std::span<const Stimulus> stimuli, const SaliencyMap& map,
                                const SaliencyMap* reference) {
    std::ostringstream body;
    for (const auto& stim : stimuli) render_section(body, stim, map, reference);
    return document("Saliency: " + map.source, body.str());
}

}  // namespace eyesal
