#pragma once

#include <utility>
#include <vector>

#include "ngspot/core.hpp"

namespace ngspot {

/// A detection after weighting and (possibly) fusion across modalities.
/// Provenance lists each contributing branch with its raw, pre-weight score.
struct FusedSolution {
    NGramClass cls;
    Box box;
    double score;  // in [0,1]
    std::vector<std::pair<ModalityId, double>> provenance;

    friend bool operator==(const FusedSolution& a, const FusedSolution& b) {
        return a.cls == b.cls && a.box == b.box && a.score == b.score &&
               a.provenance == b.provenance;
    }
};

/// A maximal group of mutually overlapping solutions on a line. Options are
/// sorted by score descending (ties by class label ascending) and carry at
/// most one entry per n-gram class.
struct Area {
    int area_id;
    Box extent;  // bounding union of member boxes
    std::vector<FusedSolution> options;
};

struct LineResult {
    QueryLineId line;
    std::vector<Area> areas;
};

/// Weighted concatenation of two branches: branch-1 scores are multiplied by
/// cfg.w1, branch-2 scores by cfg.w2, entries whose weighted score falls
/// below cfg.epsilon_prune are dropped, and branch order is preserved with
/// branch 1 first. Each input list must be modality-uniform.
std::vector<Detection> weighted_concat(const std::vector<Detection>& y1,
                                       const std::vector<Detection>& y2,
                                       const FusionConfig& cfg);

/// Agreement gain for two overlapping same-class scores:
///   gain = delta * (1 - |s1 - s2| / max(s1, s2)),
/// in [0, delta], symmetric, equal to delta exactly when s1 == s2.
/// Undefined (throws) when both scores are zero.
double gain(double s1, double s2, double delta);

/// Fuses two overlapping same-class solutions. The fused score is
/// max(s1, s2) + gain, clamped to 1; the second element is the amount
/// clamped away (0 when no clamping occurred). The fused box is the
/// higher-scoring member's box, or the union of both on an exact tie.
std::pair<FusedSolution, double> fuse_pair(const FusedSolution& a, const FusedSolution& b,
                                           const FusionConfig& cfg);

/// Subtracts `excess` from the score of every member other than `fused`,
/// flooring at zero. Members are expected to overlap the fused box at
/// >= tau_overlap; the caller selects them.
std::vector<FusedSolution> redistribute_excess(const std::vector<FusedSolution>& members,
                                               const FusedSolution& fused, double excess);

/// Full per-line combination pipeline: weighted concatenation, same-class
/// fusion with gain and excess redistribution, then grouping of the
/// surviving solutions into Areas with one ranked option per class.
LineResult fuse_line(const QueryLineId& line, const std::vector<Detection>& y1,
                     const std::vector<Detection>& y2, const FusionConfig& cfg);

/// Fuses every line of two branch corpora, aligned by line id (a line may be
/// missing from either branch). Results are ordered by line id. `jobs`
/// bounds the OpenMP thread count (0 = hardware default); any value yields
/// bit-identical results.
std::vector<LineResult> fuse_corpus(const DetectionCorpus& branch1, const DetectionCorpus& branch2,
                                    const FusionConfig& cfg, int jobs = 0);

/// Serial reference implementation of fuse_corpus.
std::vector<LineResult> fuse_corpus_serial(const DetectionCorpus& branch1,
                                           const DetectionCorpus& branch2,
                                           const FusionConfig& cfg);

}  // namespace ngspot
