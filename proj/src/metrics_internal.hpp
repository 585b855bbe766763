#pragma once

#include <vector>

#include "ngspot/core.hpp"
#include "ngspot/fusion.hpp"
#include "ngspot/metrics.hpp"

namespace ngspot::detail {

// Lean multi-k line evaluation for hot loops (one LineCounts per entry of
// ks, no per-line report structures). Inputs are assumed pre-validated
// except for line identity, which is always checked.
std::vector<LineCounts> line_counts_multi_k(const LineResult& result, const GroundTruthLine& gt,
                                            const Vocabulary& vocab, const std::vector<int>& ks,
                                            const FusionConfig& cfg);

}  // namespace ngspot::detail
