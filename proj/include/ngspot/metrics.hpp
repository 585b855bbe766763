#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ngspot/core.hpp"
#include "ngspot/fusion.hpp"

namespace ngspot {

/// Raw counts behind the modified precision/recall metrics for one rank
/// cutoff k.
struct LineCounts {
    std::int64_t true_relevant_at_k = 0;  // matched ground-truth occurrences at k
    std::int64_t retrieved = 0;           // proposal regions (or options, per config)
    std::int64_t relevant = 0;            // n-grams that make up the line
    std::int64_t relevant_invoc = 0;      // relevant occurrences whose class is in vocabulary

    friend LineCounts operator+(const LineCounts& a, const LineCounts& b) {
        return LineCounts{a.true_relevant_at_k + b.true_relevant_at_k,
                          a.retrieved + b.retrieved, a.relevant + b.relevant,
                          a.relevant_invoc + b.relevant_invoc};
    }
    friend bool operator==(const LineCounts& a, const LineCounts& b) {
        return a.true_relevant_at_k == b.true_relevant_at_k && a.retrieved == b.retrieved &&
               a.relevant == b.relevant && a.relevant_invoc == b.relevant_invoc;
    }
};

struct KMetrics {
    LineCounts counts;
    double p_at_k = 0.0;
    double r_at_k = 0.0;
    double r_at_k_invoc = 0.0;
};

enum class ReportScope { Line, Corpus };

struct MetricsReport {
    ReportScope scope = ReportScope::Corpus;
    std::map<int, KMetrics> per_k;
};

struct LineReport {
    std::string line_id;
    MetricsReport report;
    std::vector<std::string> flags;  // zero-denominator markers
};

struct CorpusReport {
    MetricsReport corpus;
    std::vector<LineReport> lines;  // sorted by line id
};

enum class MetricKind { Precision, Recall, RecallInVoc };

/// Column label, e.g. metric_name(MetricKind::RecallInVoc, 5) == "r@5_InVoc".
std::string metric_name(MetricKind kind, int k);

/// Canonical column order: for each k in ks, p@k then r@k then r@k_InVoc.
std::vector<std::string> metric_names(const std::vector<int>& ks);

/// Reads one metric out of a report; throws when the report lacks that k.
double metric_value(const MetricsReport& report, MetricKind kind, int k);

/// Matches proposal areas to ground-truth occurrences at rank cutoff k.
/// Area A is eligible for occurrence g when one of A's top-k options has
/// g's class and overlaps g's box at >= cfg.tau_match. Returns a
/// maximum-cardinality matching as sorted (area_id, occurrence index) pairs;
/// among maximum matchings, the lexicographically smallest one.
std::vector<std::pair<int, int>> match_at_k(const LineResult& result, const GroundTruthLine& gt,
                                            int k, const FusionConfig& cfg);

LineCounts line_counts(const LineResult& result, const GroundTruthLine& gt,
                       const Vocabulary& vocab, int k, const FusionConfig& cfg);

/// p@k = true_relevant_at_k / retrieved (0 when nothing was retrieved).
double precision_at_k(const LineCounts& counts);

/// r@k = true_relevant_at_k / relevant (0 when the line holds no n-grams).
double recall_at_k(const LineCounts& counts);

/// r@k restricted to in-vocabulary n-grams (0 when none occur).
double recall_at_k_invoc(const LineCounts& counts);

/// Micro-averaged corpus evaluation: counts are summed over all lines before
/// division. Results and ground truth must align one-to-one by line id.
/// `jobs` bounds the OpenMP thread count; any value yields identical output.
CorpusReport evaluate_corpus(const std::vector<LineResult>& results,
                             const std::vector<GroundTruthLine>& gts, const Vocabulary& vocab,
                             const std::vector<int>& ks, const FusionConfig& cfg, int jobs = 0);

/// Serial reference implementation of evaluate_corpus.
CorpusReport evaluate_corpus_serial(const std::vector<LineResult>& results,
                                    const std::vector<GroundTruthLine>& gts,
                                    const Vocabulary& vocab, const std::vector<int>& ks,
                                    const FusionConfig& cfg);

}  // namespace ngspot
