#pragma once

#include <cstddef>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eyesal/error.hpp"

namespace eyesal {

enum class Style { polite, impolite, positive, negative };
enum class TextSource { twitter, imdb, forum };

Style parse_style(std::string_view s);
std::string_view to_string(Style s);
TextSource parse_text_source(std::string_view s);
std::string_view to_string(TextSource s);

struct Token {
    std::string text;
    std::size_t char_start = 0;  // code-point offsets into Stimulus::text
    std::size_t char_end = 0;
    std::size_t line_index = 0;
    std::string pos_tag;
    bool is_stopword = false;
    double log_freq = 0.0;
};

struct InterestArea {
    std::size_t ia_index = 0;
    std::vector<std::size_t> token_indices;
    std::string text;
};

struct Stimulus {
    std::string stimulus_id;
    Style style = Style::polite;
    TextSource source = TextSource::twitter;
    std::string text;
    std::vector<Token> tokens;
    std::vector<InterestArea> ias;

    /// Number of characters spanned by an IA (first token start to last token end).
    std::size_t ia_length(std::size_t ia) const;
    /// Mean log frequency of the IA's non-stopword tokens, or of all its
    /// tokens when every member is a stopword.
    double ia_log_freq(std::size_t ia) const;
};

/// Lower-case stopword set. Tokens are compared case-insensitively.
using StopwordSet = std::set<std::string, std::less<>>;

StopwordSet load_stopwords(const std::string& path);
/// The vendored English list shipped in data/.
const StopwordSet& default_stopwords();

/// True for tokens with no letter or digit; these merge like stopwords.
bool is_punctuation(std::string_view token_text);
bool is_stopword(std::string_view token_text, const StopwordSet& stopwords);

/// Merges each stopword into the nearest non-stopword on the same line,
/// measured in token-index distance, preferring the right neighbour on ties.
/// A line with no non-stopword becomes one IA and a warning is emitted.
/// Membership comes from the stopword set plus the punctuation rule.
std::vector<InterestArea> segment_interest_areas(std::span<const Token> tokens,
                                                 const StopwordSet& stopwords,
                                                 Diagnostics* diag = nullptr);

/// Same rule with an explicit per-token stopword mask.
std::vector<InterestArea> segment_interest_areas(std::span<const Token> tokens,
                                                 std::span<const bool> stopword_mask,
                                                 Diagnostics* diag = nullptr);

/// Checks the token invariants against a text of `text_length` code points.
void validate_tokens(std::span<const Token> tokens, std::size_t text_length,
                     const std::string& context);
/// Checks that `ias` partition the tokens into contiguous single-line runs.
void validate_interest_areas(std::span<const Token> tokens, std::span<const InterestArea> ias,
                             const std::string& context);

/// Reads the JSON-lines stimulus format. Records without an "ias" field are
/// segmented with `stopwords`.
std::vector<Stimulus> load_stimuli(std::istream& in, const StopwordSet& stopwords,
                                   Diagnostics* diag = nullptr,
                                   const std::string& source_name = "<stream>");
std::vector<Stimulus> load_stimuli(const std::string& path, const StopwordSet& stopwords,
                                   Diagnostics* diag = nullptr);

/// Writes stimuli in the same format, including the "ias" field.
void write_stimuli(std::ostream& out, std::span<const Stimulus> stimuli);

/// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view s);
/// Substring by code-point offsets.
std::string utf8_substr(std::string_view s, std::size_t begin, std::size_t end);

}  // namespace eyesal
