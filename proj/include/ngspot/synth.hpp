#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ngspot/core.hpp"

namespace ngspot {

/// 8-bit grayscale raster, row-major; 0 is ink, 255 is paper.
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // width * height entries

    static Raster blank(int w, int h, std::uint8_t value = 255);

    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
    bool empty() const { return width == 0 || height == 0; }

    friend bool operator==(const Raster& a, const Raster& b) {
        return a.width == b.width && a.height == b.height && a.pixels == b.pixels;
    }
};

/// Glyph variants per symbol (one UTF-8 code point each).
struct GlyphSet {
    std::map<std::string, std::vector<Raster>> glyphs;

    void validate() const;
};

/// Layout and length parameters for synthetic line composition.
struct LineSpec {
    int symbols_min = 12;  // target symbols per assembled line, inclusive range
    int symbols_max = 24;
    double overlap_probability = 0.7;   // chance the next glyph backs into the previous
    double overlap_fraction_min = 0.1;  // backup distance, fraction of previous glyph width
    double overlap_fraction_max = 0.4;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Detector error model for the simulator.
struct NoiseModel {
    double miss_rate = 0.0;                // chance an in-vocabulary occurrence is dropped
    double false_positives_per_line = 0.0; // Poisson mean of spurious detections
    double tp_score_mean = 0.8;
    double tp_score_spread = 0.15;  // scores drawn uniformly in mean +/- spread, clamped
    double fp_score_mean = 0.3;
    double fp_score_spread = 0.15;
    double box_jitter = 0.0;  // uniform coordinate jitter in [-box_jitter, +box_jitter] px
    std::uint64_t seed = 0;

    void validate() const;
};

/// Output of compose_line: the rendered image plus its annotations.
struct ComposedLine {
    Raster image;
    std::vector<std::string> symbols;  // placed symbols, whitespace excluded
    std::vector<Box> symbol_boxes;     // one per placed symbol
    std::vector<GroundTruthOccurrence> occurrences;  // all n-grams of the requested sizes
};

/// One synthesized corpus line with its identity.
struct SynthLine {
    QueryLineId line;
    std::string text;
    ComposedLine composed;
};

/// Extracts every contiguous n-gram of each requested size from each
/// whitespace-separated token, counts them corpus-wide, and keeps classes
/// seen at least min_count times.
Vocabulary build_vocabulary(const std::vector<std::string>& transcripts,
                            const std::set<int>& n_sizes, int min_count);

/// Renders `text` left to right from glyph rasters. With probability
/// spec.overlap_probability the next glyph backs into the previous one by a
/// fraction of its width, otherwise it advances by a small random gap;
/// whitespace only widens the gap and is never drawn. Ink composes by
/// per-pixel minimum. Ground-truth boxes for the requested n-gram sizes are
/// exact unions of the member symbol boxes; n-grams never span whitespace.
/// Deterministic in spec.seed.
ComposedLine compose_line(const GlyphSet& glyphs, const std::string& text, const LineSpec& spec,
                          const std::set<int>& n_sizes);

/// Simulated detector output for one line: each in-vocabulary ground-truth
/// occurrence is detected with probability 1 - miss_rate (jittered box,
/// tp-distribution score), followed by a Poisson number of false positives
/// with random in-vocabulary classes and random boxes. Out-of-vocabulary
/// occurrences never produce detections. The stream is derived from
/// (noise.seed, modality name), so branches decorrelate.
std::vector<Detection> simulate_detector(const GroundTruthLine& gt, const Vocabulary& vocab,
                                         const NoiseModel& noise, const ModalityId& modality);

/// Assembles `count` lines of text by drawing random words from `words`
/// until the per-line symbol target is met, then composes each line.
/// Line ids are "<id_prefix>_0000" style; per-line RNG streams are derived
/// from (spec.seed, line index), so any `jobs` value gives identical output.
std::vector<SynthLine> synth_corpus(const GlyphSet& glyphs, const std::vector<std::string>& words,
                                    int count, const LineSpec& spec, const std::set<int>& n_sizes,
                                    const std::string& id_prefix = "line", int jobs = 0);

/// Simulates one detector branch over a whole corpus; every ground-truth
/// line gets a record (possibly with no detections). Per-line streams are
/// derived from (noise.seed, line id), so output is independent of order
/// and parallelism.
DetectionCorpus simulate_corpus(const std::vector<GroundTruthLine>& gts, const Vocabulary& vocab,
                                const NoiseModel& noise, const ModalityId& modality,
                                int jobs = 0);

GroundTruthLine to_ground_truth(const SynthLine& line);

}  // namespace ngspot
