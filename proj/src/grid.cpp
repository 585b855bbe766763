#include "ngspot/grid.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "metrics_internal.hpp"
#include "parallel_for.hpp"

namespace ngspot {

namespace {

// Sorted ground-truth pointers, positionally aligned with the (id-sorted)
// output of fuse_corpus. Throws when branch ids and ground-truth ids differ.
std::vector<const GroundTruthLine*> align_ground_truth(const DetectionCorpus& branch1,
                                                       const DetectionCorpus& branch2,
                                                       const std::vector<GroundTruthLine>& gts) {
    std::map<std::string, const GroundTruthLine*> by_id;
    for (const auto& gt : gts) {
        if (!by_id.emplace(gt.line.id, &gt).second) {
            throw ContractError("run_grid: duplicate line id '" + gt.line.id +
                                "' in ground truth");
        }
    }

    std::set<std::string> branch_ids;
    for (const auto& [id, line] : branch1) branch_ids.insert(id);
    for (const auto& [id, line] : branch2) branch_ids.insert(id);

    std::vector<std::string> branch_only;
    std::vector<std::string> gt_only;
    for (const auto& id : branch_ids) {
        if (by_id.find(id) == by_id.end()) branch_only.push_back(id);
    }
    for (const auto& [id, gt] : by_id) {
        if (branch_ids.find(id) == branch_ids.end()) gt_only.push_back(id);
    }
    if (!branch_only.empty() || !gt_only.empty()) {
        std::ostringstream msg;
        msg << "run_grid: branch corpora and ground truth do not align";
        if (!branch_only.empty()) {
            msg << "; detections without ground truth:";
            for (const auto& id : branch_only) msg << " '" << id << "'";
        }
        if (!gt_only.empty()) {
            msg << "; ground truth without detections:";
            for (const auto& id : gt_only) msg << " '" << id << "'";
        }
        throw ContractError(msg.str());
    }

    std::vector<const GroundTruthLine*> sorted;
    sorted.reserve(by_id.size());
    for (const auto& [id, gt] : by_id) sorted.push_back(gt);
    return sorted;
}

MetricsReport cell_report(const DetectionCorpus& branch1, const DetectionCorpus& branch2,
                          const std::vector<const GroundTruthLine*>& gts_sorted,
                          const Vocabulary& vocab, const std::vector<int>& ks,
                          const FusionConfig& cfg) {
    const auto results = fuse_corpus_serial(branch1, branch2, cfg);
    std::vector<LineCounts> sums(ks.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto counts = detail::line_counts_multi_k(results[i], *gts_sorted[i], vocab, ks, cfg);
        for (std::size_t j = 0; j < ks.size(); ++j) sums[j] = sums[j] + counts[j];
    }

    MetricsReport report;
    report.scope = ReportScope::Corpus;
    for (std::size_t j = 0; j < ks.size(); ++j) {
        KMetrics m;
        m.counts = sums[j];
        m.p_at_k = precision_at_k(sums[j]);
        m.r_at_k = recall_at_k(sums[j]);
        m.r_at_k_invoc = recall_at_k_invoc(sums[j]);
        report.per_k[ks[j]] = m;
    }
    return report;
}

std::vector<GridCell> run_grid_impl(const DetectionCorpus& branch1, const DetectionCorpus& branch2,
                                    const std::vector<GroundTruthLine>& gts,
                                    const Vocabulary& vocab, const std::vector<int>& ks,
                                    const FusionConfig& base_cfg, const GridSpec& spec, int jobs,
                                    bool serial) {
    spec.validate();
    base_cfg.validate();
    vocab.validate();
    if (ks.empty()) {
        throw ContractError("run_grid: at least one k cutoff is required");
    }
    for (int k : ks) {
        if (k < 1) throw ContractError("run_grid: k must be >= 1, got " + std::to_string(k));
    }
    const auto gts_sorted = align_ground_truth(branch1, branch2, gts);

    const int n = spec.size();
    const auto total = static_cast<std::int64_t>(n) * n;
    std::vector<GridCell> cells(static_cast<std::size_t>(total));
    auto body = [&](std::int64_t idx) {
        const int i1 = static_cast<int>(idx / n);
        const int i2 = static_cast<int>(idx % n);
        FusionConfig cfg = base_cfg;
        cfg.w1 = spec.value_at(i1);
        cfg.w2 = spec.value_at(i2);
        GridCell& cell = cells[static_cast<std::size_t>(idx)];
        cell.w1 = cfg.w1;
        cell.w2 = cfg.w2;
        cell.report = cell_report(branch1, branch2, gts_sorted, vocab, ks, cfg);
    };
    if (serial) {
        for (std::int64_t idx = 0; idx < total; ++idx) body(idx);
    } else {
        detail::parallel_index_for(total, jobs, body);
    }
    return cells;
}

}  // namespace

void GridSpec::validate() const {
    if (!(w_min <= w_max)) {
        throw ContractError("GridSpec: w_min must be <= w_max");
    }
    if (!(w_min >= 0.0) || !(w_max <= 1.0)) {
        throw ContractError("GridSpec: weights must lie in [0, 1]");
    }
    if (!(step > 0.0)) {
        throw ContractError("GridSpec: step must be > 0");
    }
    const double cells = (w_max - w_min) / step;
    if (std::abs(cells - std::round(cells)) > 1e-9) {
        throw ContractError("GridSpec: (w_max - w_min) / step must be an integer");
    }
}

int GridSpec::size() const {
    return static_cast<int>(std::llround((w_max - w_min) / step)) + 1;
}

double GridSpec::value_at(int i) const {
    const int n = size();
    if (i < 0 || i >= n) {
        throw ContractError("GridSpec: lattice index " + std::to_string(i) + " out of range");
    }
    if (i == n - 1) return w_max;
    return w_min + static_cast<double>(i) * step;
}

std::vector<double> GridSpec::points() const {
    validate();
    std::vector<double> values;
    const int n = size();
    values.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) values.push_back(value_at(i));
    return values;
}

std::vector<GridCell> run_grid(const DetectionCorpus& branch1, const DetectionCorpus& branch2,
                               const std::vector<GroundTruthLine>& gts, const Vocabulary& vocab,
                               const std::vector<int>& ks, const FusionConfig& base_cfg,
                               const GridSpec& spec, int jobs) {
    return run_grid_impl(branch1, branch2, gts, vocab, ks, base_cfg, spec, jobs,
                         /*serial=*/false);
}

std::vector<GridCell> run_grid_serial(const DetectionCorpus& branch1,
                                      const DetectionCorpus& branch2,
                                      const std::vector<GroundTruthLine>& gts,
                                      const Vocabulary& vocab, const std::vector<int>& ks,
                                      const FusionConfig& base_cfg, const GridSpec& spec) {
    return run_grid_impl(branch1, branch2, gts, vocab, ks, base_cfg, spec, /*jobs=*/1,
                         /*serial=*/true);
}

BestTable best_per_metric(const std::vector<GridCell>& cells) {
    if (cells.empty()) {
        throw ContractError("best_per_metric: cell list is empty");
    }

    std::vector<int> ks;
    for (const auto& [k, m] : cells.front().report.per_k) ks.push_back(k);
    for (const auto& cell : cells) {
        std::vector<int> cell_ks;
        for (const auto& [k, m] : cell.report.per_k) cell_ks.push_back(k);
        if (cell_ks != ks) {
            throw ContractError("best_per_metric: cells report different k cutoffs");
        }
    }

    BestTable table;
    for (int k : ks) {
        for (MetricKind kind :
             {MetricKind::Precision, MetricKind::Recall, MetricKind::RecallInVoc}) {
            const GridCell* best = nullptr;
            double best_value = 0.0;
            for (const auto& cell : cells) {
                const double value = metric_value(cell.report, kind, k);
                const bool better =
                    best == nullptr || value > best_value ||
                    (value == best_value &&
                     (cell.w1 < best->w1 || (cell.w1 == best->w1 && cell.w2 < best->w2)));
                if (better) {
                    best = &cell;
                    best_value = value;
                }
            }
            table.rows[metric_name(kind, k)] = BestRow{best_value, best->w1, best->w2};
        }
    }
    return table;
}

std::vector<std::vector<double>> heatmap_matrix(const std::vector<GridCell>& cells,
                                                MetricKind kind, int k) {
    if (cells.empty()) {
        throw ContractError("heatmap_matrix: cell list is empty");
    }

    std::set<double> w1_values;
    std::set<double> w2_values;
    for (const auto& cell : cells) {
        w1_values.insert(cell.w1);
        w2_values.insert(cell.w2);
    }
    const std::vector<double> w1s(w1_values.begin(), w1_values.end());
    const std::vector<double> w2s(w2_values.begin(), w2_values.end());
    if (cells.size() != w1s.size() * w2s.size()) {
        throw ContractError("heatmap_matrix: cells do not form a full lattice");
    }

    auto index_of = [](const std::vector<double>& axis, double value) {
        return static_cast<std::size_t>(
            std::lower_bound(axis.begin(), axis.end(), value) - axis.begin());
    };

    std::vector<std::vector<double>> matrix(w1s.size(), std::vector<double>(w2s.size()));
    std::vector<std::vector<char>> filled(w1s.size(), std::vector<char>(w2s.size(), 0));
    for (const auto& cell : cells) {
        const std::size_t i = index_of(w1s, cell.w1);
        const std::size_t j = index_of(w2s, cell.w2);
        if (filled[i][j]) {
            throw ContractError("heatmap_matrix: duplicate cell at (w1, w2) lattice point");
        }
        filled[i][j] = 1;
        matrix[i][j] = metric_value(cell.report, kind, k);
    }
    // Full-lattice check above plus no duplicates implies every slot is
    // filled, but verify to keep the rejection explicit.
    for (const auto& row : filled) {
        for (char f : row) {
            if (!f) throw ContractError("heatmap_matrix: cells do not form a full lattice");
        }
    }
    return matrix;
}

}  // namespace ngspot
