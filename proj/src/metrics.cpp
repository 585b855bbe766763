#include "ngspot/metrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>

#include "metrics_internal.hpp"
#include "parallel_for.hpp"

namespace ngspot {

namespace {

constexpr int kNoMatch = std::numeric_limits<int>::max();
const std::vector<char> kNoBan;

void check_k(int k) {
    if (k < 1) {
        throw ContractError("metrics: k must be >= 1, got " + std::to_string(k));
    }
}

void check_same_line(const char* op, const LineResult& result, const GroundTruthLine& gt) {
    if (result.line.id != gt.line.id) {
        throw ContractError(std::string(op) + ": line id mismatch (result '" + result.line.id +
                            "' vs ground truth '" + gt.line.id + "')");
    }
    if (!(result.line == gt.line)) {
        throw ContractError(std::string(op) + ": line dimensions disagree for '" +
                            result.line.id + "'");
    }
}

// ranks[a * n_gt + g] holds the 1-based rank of the first option of area a
// that carries occurrence g's class and overlaps its box at tau_match or
// more; kNoMatch when no option qualifies. Computing the full matrix once
// lets every k cutoff reuse it.
std::vector<int> min_match_ranks(const LineResult& result, const GroundTruthLine& gt,
                                 const FusionConfig& cfg) {
    const std::size_t na = result.areas.size();
    const std::size_t ng = gt.occurrences.size();
    std::vector<int> ranks(na * ng, kNoMatch);
    for (std::size_t a = 0; a < na; ++a) {
        const auto& options = result.areas[a].options;
        for (std::size_t g = 0; g < ng; ++g) {
            const auto& occ = gt.occurrences[g];
            for (std::size_t r = 0; r < options.size(); ++r) {
                if (options[r].cls == occ.cls &&
                    overlap(options[r].box, occ.box, cfg.overlap_measure) >= cfg.tau_match) {
                    ranks[a * ng + g] = static_cast<int>(r) + 1;
                    break;
                }
            }
        }
    }
    return ranks;
}

// Augmenting-path (Kuhn) matcher over the rank matrix, restricted to entries
// with rank <= k and to vertices not banned. Instances are a handful of areas
// and occurrences per line, so the quadratic bound never bites.
class RankMatcher {
public:
    RankMatcher(const std::vector<int>& ranks, int n_areas, int n_gts, int k)
        : ranks_(ranks), na_(n_areas), ng_(n_gts), k_(k) {}

    int size(const std::vector<char>& area_banned, const std::vector<char>& gt_banned) {
        match_gt_.assign(static_cast<std::size_t>(ng_), -1);
        int total = 0;
        for (int a = 0; a < na_; ++a) {
            if (!area_banned.empty() && area_banned[static_cast<std::size_t>(a)]) continue;
            seen_.assign(static_cast<std::size_t>(ng_), 0);
            if (augment(a, gt_banned)) ++total;
        }
        return total;
    }

private:
    bool augment(int a, const std::vector<char>& gt_banned) {
        for (int g = 0; g < ng_; ++g) {
            const auto gi = static_cast<std::size_t>(g);
            if (ranks_[static_cast<std::size_t>(a) * static_cast<std::size_t>(ng_) + gi] > k_ ||
                seen_[gi]) {
                continue;
            }
            if (!gt_banned.empty() && gt_banned[gi]) continue;
            seen_[gi] = 1;
            if (match_gt_[gi] < 0 || augment(match_gt_[gi], gt_banned)) {
                match_gt_[gi] = a;
                return true;
            }
        }
        return false;
    }

    const std::vector<int>& ranks_;
    int na_;
    int ng_;
    int k_;
    std::vector<int> match_gt_;
    std::vector<char> seen_;
};

std::int64_t retrieved_count(const LineResult& result, const FusionConfig& cfg) {
    if (cfg.retrieved_count == RetrievedCount::Areas) {
        return static_cast<std::int64_t>(result.areas.size());
    }
    std::int64_t total = 0;
    for (const auto& area : result.areas) {
        total += static_cast<std::int64_t>(area.options.size());
    }
    return total;
}

LineReport eval_line(const LineResult& result, const GroundTruthLine& gt, const Vocabulary& vocab,
                     const std::vector<int>& ks, const FusionConfig& cfg) {
    const auto counts = detail::line_counts_multi_k(result, gt, vocab, ks, cfg);

    LineReport line;
    line.line_id = result.line.id;
    line.report.scope = ReportScope::Line;
    for (std::size_t j = 0; j < ks.size(); ++j) {
        KMetrics m;
        m.counts = counts[j];
        m.p_at_k = precision_at_k(m.counts);
        m.r_at_k = recall_at_k(m.counts);
        m.r_at_k_invoc = recall_at_k_invoc(m.counts);
        line.report.per_k[ks[j]] = m;
    }
    // The denominators do not depend on k, so one flag set covers all ks.
    const LineCounts& base = counts.front();
    if (base.retrieved == 0) line.flags.push_back("retrieved=0");
    if (base.relevant == 0) line.flags.push_back("relevant=0");
    if (base.relevant_invoc == 0) line.flags.push_back("relevant_invoc=0");
    return line;
}

CorpusReport evaluate_impl(const std::vector<LineResult>& results,
                           const std::vector<GroundTruthLine>& gts, const Vocabulary& vocab,
                           const std::vector<int>& ks, const FusionConfig& cfg, int jobs,
                           bool serial) {
    cfg.validate();
    vocab.validate();
    if (ks.empty()) {
        throw ContractError("evaluate_corpus: at least one k cutoff is required");
    }
    for (int k : ks) check_k(k);

    std::map<std::string, const LineResult*> by_result;
    for (const auto& r : results) {
        if (!by_result.emplace(r.line.id, &r).second) {
            throw ContractError("evaluate_corpus: duplicate line id '" + r.line.id +
                                "' in results");
        }
    }
    std::map<std::string, const GroundTruthLine*> by_gt;
    for (const auto& g : gts) {
        if (!by_gt.emplace(g.line.id, &g).second) {
            throw ContractError("evaluate_corpus: duplicate line id '" + g.line.id +
                                "' in ground truth");
        }
    }

    std::vector<std::string> res_only;
    std::vector<std::string> gt_only;
    for (const auto& [id, res] : by_result) {
        if (by_gt.find(id) == by_gt.end()) res_only.push_back(id);
    }
    for (const auto& [id, line] : by_gt) {
        if (by_result.find(id) == by_result.end()) gt_only.push_back(id);
    }
    if (!res_only.empty() || !gt_only.empty()) {
        std::ostringstream msg;
        msg << "evaluate_corpus: results and ground truth do not align one-to-one";
        if (!res_only.empty()) {
            msg << "; results without ground truth:";
            for (const auto& id : res_only) msg << " '" << id << "'";
        }
        if (!gt_only.empty()) {
            msg << "; ground truth without results:";
            for (const auto& id : gt_only) msg << " '" << id << "'";
        }
        throw ContractError(msg.str());
    }

    struct Task {
        const LineResult* res;
        const GroundTruthLine* gt;
    };
    std::vector<Task> tasks;
    tasks.reserve(by_result.size());
    for (const auto& [id, res] : by_result) {
        tasks.push_back(Task{res, by_gt.at(id)});
    }

    std::vector<LineReport> lines(tasks.size());
    auto body = [&](std::int64_t i) {
        const auto idx = static_cast<std::size_t>(i);
        lines[idx] = eval_line(*tasks[idx].res, *tasks[idx].gt, vocab, ks, cfg);
    };
    if (serial) {
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(tasks.size()); ++i) body(i);
    } else {
        detail::parallel_index_for(static_cast<std::int64_t>(tasks.size()), jobs, body);
    }

    CorpusReport out;
    out.corpus.scope = ReportScope::Corpus;
    for (int k : ks) {
        LineCounts sum;
        for (const auto& line : lines) {
            sum = sum + line.report.per_k.at(k).counts;
        }
        KMetrics m;
        m.counts = sum;
        m.p_at_k = precision_at_k(sum);
        m.r_at_k = recall_at_k(sum);
        m.r_at_k_invoc = recall_at_k_invoc(sum);
        out.corpus.per_k[k] = m;
    }
    out.lines = std::move(lines);
    return out;
}

}  // namespace

std::vector<std::pair<int, int>> match_at_k(const LineResult& result, const GroundTruthLine& gt,
                                            int k, const FusionConfig& cfg) {
    check_same_line("match_at_k", result, gt);
    check_k(k);
    cfg.validate();

    const int na = static_cast<int>(result.areas.size());
    const int ng = static_cast<int>(gt.occurrences.size());
    const auto ranks = min_match_ranks(result, gt, cfg);
    RankMatcher matcher(ranks, na, ng, k);

    // Scan areas in area_id order so the forced pairs come out sorted.
    std::vector<int> order(static_cast<std::size_t>(na));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return result.areas[static_cast<std::size_t>(a)].area_id <
               result.areas[static_cast<std::size_t>(b)].area_id;
    });

    std::vector<char> area_banned(static_cast<std::size_t>(na), 0);
    std::vector<char> gt_banned(static_cast<std::size_t>(ng), 0);
    int need = matcher.size(area_banned, gt_banned);

    // Greedy lexicographic construction: force the smallest (area_id, gt)
    // pair that still extends to a maximum matching, then repeat.
    std::vector<std::pair<int, int>> out;
    out.reserve(static_cast<std::size_t>(need));
    for (int pos : order) {
        if (need == 0) break;
        const auto row = static_cast<std::size_t>(pos) * static_cast<std::size_t>(ng);
        for (int g = 0; g < ng; ++g) {
            const auto gi = static_cast<std::size_t>(g);
            if (ranks[row + gi] > k || gt_banned[gi]) continue;
            area_banned[static_cast<std::size_t>(pos)] = 1;
            gt_banned[gi] = 1;
            if (matcher.size(area_banned, gt_banned) >= need - 1) {
                out.emplace_back(result.areas[static_cast<std::size_t>(pos)].area_id, g);
                --need;
                break;
            }
            area_banned[static_cast<std::size_t>(pos)] = 0;
            gt_banned[gi] = 0;
        }
    }
    return out;
}

LineCounts line_counts(const LineResult& result, const GroundTruthLine& gt,
                       const Vocabulary& vocab, int k, const FusionConfig& cfg) {
    check_same_line("line_counts", result, gt);
    check_k(k);
    cfg.validate();

    const auto ranks = min_match_ranks(result, gt, cfg);
    RankMatcher matcher(ranks, static_cast<int>(result.areas.size()),
                        static_cast<int>(gt.occurrences.size()), k);
    LineCounts counts;
    counts.true_relevant_at_k = matcher.size(kNoBan, kNoBan);
    counts.retrieved = retrieved_count(result, cfg);
    counts.relevant = static_cast<std::int64_t>(gt.occurrences.size());
    for (const auto& occ : gt.occurrences) {
        if (vocab.contains(occ.cls)) ++counts.relevant_invoc;
    }
    return counts;
}

double precision_at_k(const LineCounts& counts) {
    if (counts.retrieved == 0) return 0.0;
    return static_cast<double>(counts.true_relevant_at_k) / static_cast<double>(counts.retrieved);
}

double recall_at_k(const LineCounts& counts) {
    if (counts.relevant == 0) return 0.0;
    return static_cast<double>(counts.true_relevant_at_k) / static_cast<double>(counts.relevant);
}

double recall_at_k_invoc(const LineCounts& counts) {
    if (counts.relevant_invoc == 0) return 0.0;
    return static_cast<double>(counts.true_relevant_at_k) /
           static_cast<double>(counts.relevant_invoc);
}

CorpusReport evaluate_corpus(const std::vector<LineResult>& results,
                             const std::vector<GroundTruthLine>& gts, const Vocabulary& vocab,
                             const std::vector<int>& ks, const FusionConfig& cfg, int jobs) {
    return evaluate_impl(results, gts, vocab, ks, cfg, jobs, /*serial=*/false);
}

CorpusReport evaluate_corpus_serial(const std::vector<LineResult>& results,
                                    const std::vector<GroundTruthLine>& gts,
                                    const Vocabulary& vocab, const std::vector<int>& ks,
                                    const FusionConfig& cfg) {
    return evaluate_impl(results, gts, vocab, ks, cfg, /*jobs=*/1, /*serial=*/true);
}

std::string metric_name(MetricKind kind, int k) {
    switch (kind) {
        case MetricKind::Precision:
            return "p@" + std::to_string(k);
        case MetricKind::Recall:
            return "r@" + std::to_string(k);
        case MetricKind::RecallInVoc:
            return "r@" + std::to_string(k) + "_InVoc";
    }
    throw ContractError("metric_name: unknown metric kind");
}

std::vector<std::string> metric_names(const std::vector<int>& ks) {
    std::vector<std::string> names;
    names.reserve(ks.size() * 3);
    for (int k : ks) {
        names.push_back(metric_name(MetricKind::Precision, k));
        names.push_back(metric_name(MetricKind::Recall, k));
        names.push_back(metric_name(MetricKind::RecallInVoc, k));
    }
    return names;
}

double metric_value(const MetricsReport& report, MetricKind kind, int k) {
    const auto it = report.per_k.find(k);
    if (it == report.per_k.end()) {
        throw ContractError("metric_value: report has no entry for k=" + std::to_string(k));
    }
    switch (kind) {
        case MetricKind::Precision:
            return it->second.p_at_k;
        case MetricKind::Recall:
            return it->second.r_at_k;
        case MetricKind::RecallInVoc:
            return it->second.r_at_k_invoc;
    }
    throw ContractError("metric_value: unknown metric kind");
}

namespace detail {

std::vector<LineCounts> line_counts_multi_k(const LineResult& result, const GroundTruthLine& gt,
                                            const Vocabulary& vocab, const std::vector<int>& ks,
                                            const FusionConfig& cfg) {
    check_same_line("evaluate_corpus", result, gt);
    const int na = static_cast<int>(result.areas.size());
    const int ng = static_cast<int>(gt.occurrences.size());
    const auto ranks = min_match_ranks(result, gt, cfg);

    LineCounts base;
    base.retrieved = retrieved_count(result, cfg);
    base.relevant = ng;
    for (const auto& occ : gt.occurrences) {
        if (vocab.contains(occ.cls)) ++base.relevant_invoc;
    }

    std::vector<LineCounts> out(ks.size(), base);
    for (std::size_t j = 0; j < ks.size(); ++j) {
        RankMatcher matcher(ranks, na, ng, ks[j]);
        out[j].true_relevant_at_k = matcher.size(kNoBan, kNoBan);
    }
    return out;
}

}  // namespace detail

}  // namespace ngspot
