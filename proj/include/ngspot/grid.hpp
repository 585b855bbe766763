#pragma once

#include <map>
#include <string>
#include <vector>

#include "ngspot/core.hpp"
#include "ngspot/fusion.hpp"
#include "ngspot/metrics.hpp"

namespace ngspot {

/// Inclusive weight lattice searched by run_grid. Defaults give the
/// 11 x 11 = 121 cell search over [0,1] x [0,1] in steps of 0.1.
struct GridSpec {
    double w_min = 0.0;
    double w_max = 1.0;
    double step = 0.1;

    void validate() const;

    /// Lattice points per axis.
    int size() const;

    /// The i-th lattice value. The last index returns w_max exactly, so the
    /// degenerate single-branch cells sit at exact 0.0 and 1.0.
    double value_at(int i) const;

    std::vector<double> points() const;
};

/// One evaluated lattice point; the report is corpus scope.
struct GridCell {
    double w1 = 0.0;
    double w2 = 0.0;
    MetricsReport report;
};

struct BestRow {
    double value = 0.0;
    double w1 = 0.0;
    double w2 = 0.0;
};

/// Best cell per metric column; ties go to the smallest (w1, w2) pair.
struct BestTable {
    std::map<std::string, BestRow> rows;  // keyed by metric name, e.g. "r@5_InVoc"
};

/// Evaluates the full fusion + metrics pipeline at every (w1, w2) lattice
/// point. Cells come back in w1-major, w2-minor order. The union of branch
/// line ids must equal the ground-truth line ids. `jobs` bounds the OpenMP
/// thread count (0 = hardware default); any value yields identical cells.
std::vector<GridCell> run_grid(const DetectionCorpus& branch1, const DetectionCorpus& branch2,
                               const std::vector<GroundTruthLine>& gts, const Vocabulary& vocab,
                               const std::vector<int>& ks, const FusionConfig& base_cfg,
                               const GridSpec& spec, int jobs = 0);

/// Serial reference implementation of run_grid.
std::vector<GridCell> run_grid_serial(const DetectionCorpus& branch1,
                                      const DetectionCorpus& branch2,
                                      const std::vector<GroundTruthLine>& gts,
                                      const Vocabulary& vocab, const std::vector<int>& ks,
                                      const FusionConfig& base_cfg, const GridSpec& spec);

/// Maximum value per metric column over all cells, with the weights that
/// attain it (ties resolved to the lexicographically smallest (w1, w2)).
BestTable best_per_metric(const std::vector<GridCell>& cells);

/// Dense matrix[w1 index][w2 index] of one metric over a full lattice of
/// cells (any order); rejects incomplete or duplicated lattices.
std::vector<std::vector<double>> heatmap_matrix(const std::vector<GridCell>& cells,
                                                MetricKind kind, int k);

}  // namespace ngspot
