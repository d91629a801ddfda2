#pragma once

#include <span>
#include <string>

#include "eyesal/saliency.hpp"
#include "eyesal/stimulus.hpp"

namespace eyesal {

std::string html_escape(std::string_view s);

/// Background opacity per IA of one stimulus: min-max normalized score, 0.5
/// for every IA when all scores are equal, empty for unscored IAs.
std::vector<std::optional<double>> heatmap_opacity(const Stimulus& stimulus, const SaliencyMap& map);

/// Standalone HTML document shading each interest area by its score. With
/// a reference map a second row shows the reference shading below.
/// Output bytes depend only on the inputs.
std::string render_heatmap_html(const Stimulus& stimulus, const SaliencyMap& map,
                                const SaliencyMap* reference = nullptr);

/// One document with a section per stimulus.
std::string render_heatmap_html(std::span<const Stimulus> stimuli, const SaliencyMap& map,
                                const SaliencyMap* reference = nullptr);

}  // namespace eyesal
