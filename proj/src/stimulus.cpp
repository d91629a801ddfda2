#include "eyesal/stimulus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace eyesal {

using nlohmann::json;

Style parse_style(std::string_view s) {
    if (s == "polite") return Style::polite;
    if (s == "impolite") return Style::impolite;
    if (s == "positive") return Style::positive;
    if (s == "negative") return Style::negative;
    throw ValidationError("unknown style '" + std::string(s) + "'");
}

std::string_view to_string(Style s) {
    switch (s) {
        case Style::polite: return "polite";
        case Style::impolite: return "impolite";
        case Style::positive: return "positive";
        case Style::negative: return "negative";
    }
    return "?";
}

TextSource parse_text_source(std::string_view s) {
    if (s == "twitter") return TextSource::twitter;
    if (s == "imdb") return TextSource::imdb;
    if (s == "forum") return TextSource::forum;
    throw ValidationError("unknown source '" + std::string(s) + "'");
}

std::string_view to_string(TextSource s) {
    switch (s) {
        case TextSource::twitter: return "twitter";
        case TextSource::imdb: return "imdb";
        case TextSource::forum: return "forum";
    }
    return "?";
}

std::size_t utf8_length(std::string_view s) {
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
        return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
    }));
}

std::string utf8_substr(std::string_view s, std::size_t begin, std::size_t end) {
    std::size_t cp = 0;
    std::size_t byte_begin = s.size();
    std::size_t byte_end = s.size();
    for (std::size_t i = 0; i < s.size(); ++i) {
        if ((static_cast<unsigned char>(s[i]) & 0xC0) == 0x80) continue;
        if (cp == begin) byte_begin = i;
        if (cp == end) {
            byte_end = i;
            break;
        }
        ++cp;
    }
    if (byte_begin >= byte_end) return {};
    return std::string(s.substr(byte_begin, byte_end - byte_begin));
}

std::size_t Stimulus::ia_length(std::size_t ia) const {
    const auto& members = ias.at(ia).token_indices;
    return tokens.at(members.back()).char_end - tokens.at(members.front()).char_start;
}

double Stimulus::ia_log_freq(std::size_t ia) const {
    const auto& members = ias.at(ia).token_indices;
    double sum = 0.0;
    std::size_t n = 0;
    for (auto t : members) {
        if (!tokens[t].is_stopword) {
            sum += tokens[t].log_freq;
            ++n;
        }
    }
    if (n == 0) {
        for (auto t : members) sum += tokens[t].log_freq;
        n = members.size();
    }
    return sum / static_cast<double>(n);
}

namespace {

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

StopwordSet load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open stopword list " + path);
    StopwordSet words;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        words.insert(to_lower(line));
    }
    return words;
}

const StopwordSet& default_stopwords() {
    static const StopwordSet words = load_stopwords(EYESAL_DEFAULT_STOPWORDS);
    return words;
}

bool is_punctuation(std::string_view token_text) {
    return std::none_of(token_text.begin(), token_text.end(), [](char c) {
        const auto u = static_cast<unsigned char>(c);
        return u >= 0x80 || std::isalnum(u);
    });
}

bool is_stopword(std::string_view token_text, const StopwordSet& stopwords) {
    return is_punctuation(token_text) || stopwords.contains(to_lower(token_text));
}

std::vector<InterestArea> segment_interest_areas(std::span<const Token> tokens,
                                                 const StopwordSet& stopwords,
                                                 Diagnostics* diag) {
    std::unique_ptr<bool[]> mask(new bool[tokens.size()]);
    for (std::size_t i = 0; i < tokens.size(); ++i) mask[i] = is_stopword(tokens[i].text, stopwords);
    return segment_interest_areas(tokens, std::span<const bool>(mask.get(), tokens.size()), diag);
}

std::vector<InterestArea> segment_interest_areas(std::span<const Token> tokens,
                                                 std::span<const bool> stopword_mask,
                                                 Diagnostics* diag) {
    if (tokens.empty()) throw ValidationError("cannot segment an empty token list");
    if (stopword_mask.size() != tokens.size()) {
        throw ValidationError("stopword mask size does not match token count");
    }

    // anchor[t] = token index of the non-stopword that owns token t
    std::vector<std::size_t> anchor(tokens.size());
    std::size_t line_begin = 0;
    while (line_begin < tokens.size()) {
        std::size_t line_end = line_begin;
        while (line_end < tokens.size() && tokens[line_end].line_index == tokens[line_begin].line_index) {
            ++line_end;
        }

        std::vector<std::size_t> content;
        for (std::size_t t = line_begin; t < line_end; ++t) {
            if (!stopword_mask[t]) content.push_back(t);
        }

        if (content.empty()) {
            for (std::size_t t = line_begin; t < line_end; ++t) anchor[t] = line_begin;
            warn(diag, "line " + std::to_string(tokens[line_begin].line_index) +
                           " has no non-stopword; tokens " + std::to_string(line_begin) + ".." +
                           std::to_string(line_end - 1) + " form one interest area");
        } else {
            std::size_t next = 0;  // first content position >= t
            for (std::size_t t = line_begin; t < line_end; ++t) {
                while (next < content.size() && content[next] < t) ++next;
                if (next < content.size() && content[next] == t) {
                    anchor[t] = t;
                    continue;
                }
                const bool has_right = next < content.size();
                const bool has_left = next > 0;
                if (!has_left) {
                    anchor[t] = content[next];
                } else if (!has_right) {
                    anchor[t] = content[next - 1];
                } else {
                    const std::size_t right = content[next];
                    const std::size_t left = content[next - 1];
                    anchor[t] = (right - t <= t - left) ? right : left;
                }
            }
        }
        line_begin = line_end;
    }

    std::vector<InterestArea> ias;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (ias.empty() || anchor[t] != anchor[ias.back().token_indices.back()]) {
            InterestArea ia;
            ia.ia_index = ias.size();
            ias.push_back(std::move(ia));
        }
        auto& ia = ias.back();
        if (!ia.token_indices.empty()) ia.text += ' ';
        ia.text += tokens[t].text;
        ia.token_indices.push_back(t);
    }
    return ias;
}

void validate_tokens(std::span<const Token> tokens, std::size_t text_length,
                     const std::string& context) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& tok = tokens[i];
        const std::string where = context + ": token " + std::to_string(i);
        if (tok.char_start >= tok.char_end) throw ValidationError(where + ": char_start must be < char_end");
        if (tok.char_end > text_length) throw ValidationError(where + ": char_end beyond end of text");
        if (i > 0) {
            if (tok.char_start < tokens[i - 1].char_end) {
                throw ValidationError(where + ": char_start overlaps the previous token");
            }
            if (tok.line_index < tokens[i - 1].line_index) {
                throw ValidationError(where + ": line_index decreases");
            }
        }
    }
}

void validate_interest_areas(std::span<const Token> tokens, std::span<const InterestArea> ias,
                             const std::string& context) {
    std::size_t expected = 0;
    for (std::size_t i = 0; i < ias.size(); ++i) {
        const auto& ia = ias[i];
        const std::string where = context + ": interest area " + std::to_string(i);
        if (ia.ia_index != i) throw ValidationError(where + ": ia_index out of sequence");
        if (ia.token_indices.empty()) throw ValidationError(where + ": no tokens");
        for (auto t : ia.token_indices) {
            if (t != expected) throw ValidationError(where + ": tokens are not a contiguous partition");
            if (t >= tokens.size()) throw ValidationError(where + ": token index out of range");
            if (tokens[t].line_index != tokens[ia.token_indices.front()].line_index) {
                throw ValidationError(where + ": spans a line break");
            }
            ++expected;
        }
    }
    if (expected != tokens.size()) {
        throw ValidationError(context + ": interest areas do not cover every token");
    }
}

namespace {

template <typename T>
T required(const json& rec, const char* field, const std::string& where) {
    if (!rec.contains(field)) throw ValidationError(where + ": missing field '" + field + "'");
    try {
        return rec.at(field).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(where + ": field '" + field + "' has the wrong type");
    }
}

Stimulus parse_stimulus_record(const json& rec, const StopwordSet& stopwords, Diagnostics* diag,
                               const std::string& where) {
    if (!rec.is_object()) throw ValidationError(where + ": record is not an object");
    Stimulus stim;
    stim.stimulus_id = required<std::string>(rec, "stimulus_id", where);
    try {
        stim.style = parse_style(required<std::string>(rec, "style", where));
        stim.source = parse_text_source(required<std::string>(rec, "source", where));
    } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
    }
    stim.text = required<std::string>(rec, "text", where);
    if (!rec.contains("tokens") || !rec["tokens"].is_array()) {
        throw ValidationError(where + ": missing field 'tokens'");
    }
    const auto& toks = rec["tokens"];
    std::vector<char> mask;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const std::string tw = where + ": tokens[" + std::to_string(i) + "]";
        const auto& tj = toks[i];
        if (!tj.is_object()) throw ValidationError(tw + ": not an object");
        Token tok;
        tok.text = required<std::string>(tj, "text", tw);
        tok.char_start = required<std::size_t>(tj, "char_start", tw);
        tok.char_end = required<std::size_t>(tj, "char_end", tw);
        tok.line_index = required<std::size_t>(tj, "line_index", tw);
        tok.pos_tag = required<std::string>(tj, "pos_tag", tw);
        tok.log_freq = required<double>(tj, "log_freq", tw);
        if (tj.contains("is_stopword")) {
            tok.is_stopword = required<bool>(tj, "is_stopword", tw);
        } else {
            tok.is_stopword = stopwords.contains(to_lower(tok.text));
        }
        mask.push_back(tok.is_stopword || is_punctuation(tok.text));
        stim.tokens.push_back(std::move(tok));
    }
    if (stim.tokens.empty()) throw ValidationError(where + ": field 'tokens' is empty");
    validate_tokens(stim.tokens, utf8_length(stim.text), where);

    if (rec.contains("ias")) {
        const auto& ias = rec["ias"];
        if (!ias.is_array()) throw ValidationError(where + ": field 'ias' must be an array");
        for (std::size_t i = 0; i < ias.size(); ++i) {
            InterestArea ia;
            ia.ia_index = i;
            try {
                ia.token_indices = ias[i].get<std::vector<std::size_t>>();
            } catch (const json::exception&) {
                throw ValidationError(where + ": field 'ias' entry " + std::to_string(i) +
                                      " must be a list of token indices");
            }
            stim.ias.push_back(std::move(ia));
        }
        validate_interest_areas(stim.tokens, stim.ias, where);
    } else {
        std::unique_ptr<bool[]> m(new bool[mask.size()]);
        for (std::size_t i = 0; i < mask.size(); ++i) m[i] = mask[i] != 0;
        Diagnostics local;
        stim.ias = segment_interest_areas(stim.tokens, std::span<const bool>(m.get(), mask.size()), &local);
        for (const auto& w : local.warnings()) warn(diag, stim.stimulus_id + ": " + w);
    }
    for (auto& ia : stim.ias) {
        const auto& first = stim.tokens[ia.token_indices.front()];
        const auto& last = stim.tokens[ia.token_indices.back()];
        ia.text = utf8_substr(stim.text, first.char_start, last.char_end);
    }
    return stim;
}

}  // namespace

std::vector<Stimulus> load_stimuli(std::istream& in, const StopwordSet& stopwords, Diagnostics* diag,
                                   const std::string& source_name) {
    std::vector<Stimulus> out;
    std::string line;
    std::size_t line_no = 0;
    std::set<std::string, std::less<>> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = source_name + ":" + std::to_string(line_no);
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError(where + ": malformed JSON record");
        }
        auto stim = parse_stimulus_record(rec, stopwords, diag, where);
        if (!seen.insert(stim.stimulus_id).second) {
            throw ValidationError(where + ": duplicate stimulus_id '" + stim.stimulus_id + "'");
        }
        out.push_back(std::move(stim));
    }
    return out;
}

std::vector<Stimulus> load_stimuli(const std::string& path, const StopwordSet& stopwords,
                                   Diagnostics* diag) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    return load_stimuli(in, stopwords, diag, path);
}

void write_stimuli(std::ostream& out, std::span<const Stimulus> stimuli) {
    for (const auto& s : stimuli) {
        json rec;
        rec["stimulus_id"] = s.stimulus_id;
        rec["style"] = std::string(to_string(s.style));
        rec["source"] = std::string(to_string(s.source));
        rec["text"] = s.text;
        json toks = json::array();
        for (const auto& t : s.tokens) {
            toks.push_back({{"text", t.text},
                            {"char_start", t.char_start},
                            {"char_end", t.char_end},
                            {"line_index", t.line_index},
                            {"pos_tag", t.pos_tag},
                            {"is_stopword", t.is_stopword},
                            {"log_freq", t.log_freq}});
        }
        rec["tokens"] = std::move(toks);
        json ias = json::array();
        for (const auto& ia : s.ias) ias.push_back(ia.token_indices);
        rec["ias"] = std::move(ias);
        out << rec.dump() << '\n';
    }
}

}  // namespace eyesal
