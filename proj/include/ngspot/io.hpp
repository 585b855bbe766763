#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "ngspot/core.hpp"
#include "ngspot/fusion.hpp"
#include "ngspot/grid.hpp"
#include "ngspot/metrics.hpp"
#include "ngspot/synth.hpp"

namespace ngspot {

/// Serialization failure with a category and a location-bearing message.
class IoError : public std::runtime_error {
public:
    enum class Kind {
        File,           // unreadable/unwritable path
        Syntax,         // malformed content or missing/mistyped field
        SchemaVersion,  // unrecognized schema_version
        Invariant,      // well-formed content violating a domain invariant
    };

    IoError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

inline constexpr const char* kSchemaVersion = "1";

// All structured files are UTF-8 JSON with a top-level "schema_version": "1".
// Savers emit canonical form: alphabetically ordered keys, records sorted by
// line id, shortest-round-trip floating point. Loaders validate every domain
// invariant and report violations with record and field locations.

DetectionCorpus load_detections(const std::string& path);
void save_detections(const DetectionCorpus& corpus, const std::string& path);

std::vector<GroundTruthLine> load_ground_truth(const std::string& path);
void save_ground_truth(const std::vector<GroundTruthLine>& lines, const std::string& path);

Vocabulary load_vocabulary(const std::string& path);
void save_vocabulary(const Vocabulary& vocab, const std::string& path);

std::vector<LineResult> load_results(const std::string& path);
void save_results(const std::vector<LineResult>& results, const std::string& path);

CorpusReport load_report(const std::string& path);
void save_report(const CorpusReport& report, const std::string& path);

/// CSV of one row per cell: w1, w2, then each metric column; every numeric
/// field fixed at 6 decimals; header like "w1,w2,p@1,r@1,r@1_InVoc,...".
void save_grid_csv(const std::vector<GridCell>& cells, const std::string& path);

/// Deterministic standalone SVG heatmap of matrix[w1 index][w2 index].
void save_heatmap_svg(const std::vector<std::vector<double>>& matrix,
                      const std::vector<double>& w1_values, const std::vector<double>& w2_values,
                      const std::string& title, const std::string& path);

/// Binary portable graymap (P5, maxval 255).
Raster read_pgm(const std::string& path);
void write_pgm(const Raster& raster, const std::string& path);

/// Loads a glyph directory: one subdirectory per symbol, each holding that
/// symbol's variants as .pgm files (sorted by filename).
GlyphSet load_glyph_set(const std::string& dir);

/// Text file as a list of lines (trailing carriage returns stripped).
std::vector<std::string> read_lines(const std::string& path);

}  // namespace ngspot
