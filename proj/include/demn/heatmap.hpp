#pragma once
// Per-turn memory dumps for one story ending, as CSV matrices and SVG heatmaps.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "demn/model.hpp"

namespace demn {

struct HeatmapDump {
    std::string story_id;
    int ending = 1;
    std::vector<std::string> tokens;              // option tokens, one per memory row
    std::vector<Tensor> memories;                 // m¹ … mᵀ, each |o| × 2h
    std::vector<std::vector<double>> salience;    // per turn, L2 norm of each memory row
};

/// Evaluation-mode forward over one ending, keeping every turn's memory.
HeatmapDump make_heatmap(const Model& model, const data::LabeledStory& story, const data::FeaturizedStory& features,
                         int ending);

/// Header "token,d0,…,d{2h−1},salience"; one row per option token.
void write_heatmap_csv(std::ostream& out, const HeatmapDump& dump, std::size_t turn);
/// Rows are option tokens, columns memory dimensions, colour the value on a
/// diverging scale shared by all turns; a salience strip follows each row.
std::string heatmap_svg(const HeatmapDump& dump, std::size_t turn);

/// Writes <dir>/<id>_ending<k>_turn<t>.{csv,svg} for every turn; returns the
/// paths written.
std::vector<std::filesystem::path> write_heatmaps(const std::filesystem::path& dir, const HeatmapDump& dump);

}  // namespace demn
