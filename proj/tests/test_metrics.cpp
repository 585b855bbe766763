#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "ngspot/metrics.hpp"
#include "ngspot/rng.hpp"
#include "ngspot/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ngspot;
using testutil::sol;
using testutil::worked_scenario;

namespace {

const FusionConfig kCfg;

/// A random matching instance: areas with positional ids, one option each at
/// a random box/class, against `ng` single-class occurrences. Dense enough
/// to exercise augmenting paths, sparse enough for the enumerator.
struct Instance {
    LineResult result;
    GroundTruthLine gt;
};

Instance random_instance(Rng& rng, int max_areas, int max_gt) {
    Instance inst;
    inst.result.line = inst.gt.line = QueryLineId{"inst", 1000, 40};
    const int na = static_cast<int>(rng.uniform_int(0, max_areas));
    const int ng = static_cast<int>(rng.uniform_int(0, max_gt));
    for (int j = 0; j < ng; ++j) {
        const double x0 = rng.uniform_real(0, 900);
        const std::string cls(1, static_cast<char>('a' + rng.uniform_int(0, 2)));
        inst.gt.occurrences.push_back(
            GroundTruthOccurrence{NGramClass(cls), Box(x0, 0, x0 + 60, 40)});
    }
    for (int i = 0; i < na; ++i) {
        const int options = static_cast<int>(rng.uniform_int(1, 3));
        std::vector<FusedSolution> opts;
        for (int o = 0; o < options; ++o) {
            // Half the options aim at a ground-truth box, the rest are noise.
            Box box = [&] {
                if (!inst.gt.occurrences.empty() && rng.uniform_double() < 0.55) {
                    const auto& target =
                        inst.gt.occurrences[static_cast<std::size_t>(rng.uniform_int(
                            0, static_cast<std::int64_t>(inst.gt.occurrences.size()) - 1))];
                    const double shift = rng.uniform_real(-20, 20);
                    const double x0 = std::max(0.0, target.box.x0() + shift);
                    return Box(x0, 0, x0 + target.box.width(), 40);
                }
                const double x0 = rng.uniform_real(0, 900);
                return Box(x0, 0, x0 + rng.uniform_real(30, 90), 40);
            }();
            const std::string cls(1, static_cast<char>('a' + rng.uniform_int(0, 2)));
            opts.push_back(sol(cls, box, rng.uniform_real(0.05, 1.0)));
        }
        std::sort(opts.begin(), opts.end(), [](const FusedSolution& a, const FusedSolution& b) {
            return a.score > b.score;
        });
        // Collapse duplicate classes to honor the one-per-class area rule.
        std::set<std::string> seen;
        std::vector<FusedSolution> unique;
        for (const auto& o : opts) {
            if (seen.insert(o.cls.label()).second) unique.push_back(o);
        }
        Box extent = unique.front().box;
        for (const auto& o : unique) extent = bounding_union(extent, o.box);
        inst.result.areas.push_back(Area{i, extent, std::move(unique)});
    }
    return inst;
}

}  // namespace

TEST_CASE("match_at_k on the worked scenario") {
    const auto s = worked_scenario();

    const auto at1 = match_at_k(s.result, s.gt, 1, kCfg);
    REQUIRE(at1.size() == 1);
    CHECK(at1[0] == std::pair<int, int>{0, 0});

    const auto at5 = match_at_k(s.result, s.gt, 5, kCfg);
    REQUIRE(at5.size() == 2);
    CHECK(at5[0] == std::pair<int, int>{0, 0});
    CHECK(at5[1] == std::pair<int, int>{1, 1});
}

TEST_CASE("match_at_k trivial cases and contract errors") {
    const auto s = worked_scenario();

    SUBCASE("no areas gives an empty matching") {
        LineResult empty{s.result.line, {}};
        CHECK(match_at_k(empty, s.gt, 1, kCfg).empty());
    }
    SUBCASE("one exact hit") {
        LineResult one{s.result.line, {s.result.areas[0]}};
        GroundTruthLine gt{s.gt.line, {s.gt.occurrences[0]}};
        const auto m = match_at_k(one, gt, 1, kCfg);
        REQUIRE(m.size() == 1);
        CHECK(m[0] == std::pair<int, int>{0, 0});
    }
    SUBCASE("line identity mismatch") {
        GroundTruthLine other = s.gt;
        other.line.id = "other";
        CHECK_THROWS_AS(match_at_k(s.result, other, 1, kCfg), ContractError);
        GroundTruthLine resized = s.gt;
        resized.line.width = 999;
        CHECK_THROWS_AS(match_at_k(s.result, resized, 1, kCfg), ContractError);
    }
    SUBCASE("k must be positive") {
        CHECK_THROWS_AS(match_at_k(s.result, s.gt, 0, kCfg), ContractError);
        CHECK_THROWS_AS(match_at_k(s.result, s.gt, -2, kCfg), ContractError);
    }
}

TEST_CASE("maximum matching recovers pairs a greedy-by-score pass strands") {
    // Area 0 can only take g0; area 1's strongest option also points at g0
    // but it alone can reach g1. Score-greedy would give g0 to area 1.
    const Box b0(0, 0, 50, 40), b1(100, 0, 150, 40);
    LineResult result{QueryLineId{"greedy", 400, 40}, {}};
    result.areas.push_back(Area{0, b0, {sol("A", b0, 0.5)}});
    result.areas.push_back(Area{1, bounding_union(b0, b1), {sol("A", b0, 0.9), sol("B", b1, 0.4)}});
    GroundTruthLine gt{QueryLineId{"greedy", 400, 40},
                       {GroundTruthOccurrence{NGramClass("A"), b0},
                        GroundTruthOccurrence{NGramClass("B"), b1}}};

    const auto m = match_at_k(result, gt, 2, kCfg);
    REQUIRE(m.size() == 2);
    CHECK(m[0] == std::pair<int, int>{0, 0});
    CHECK(m[1] == std::pair<int, int>{1, 1});

    const auto best = oracle::best_matching(result, gt, 2, kCfg);
    CHECK(best.size == 2);
    CHECK(best.pairs == m);
}

TEST_CASE("match_at_k equals exhaustive enumeration on random instances") {
    Rng rng(2024);
    for (int trial = 0; trial < 150; ++trial) {
        const Instance inst = random_instance(rng, 6, 6);
        for (const int k : {1, 2, 5}) {
            const auto got = match_at_k(inst.result, inst.gt, k, kCfg);
            const auto want = oracle::best_matching(inst.result, inst.gt, k, kCfg);
            REQUIRE(static_cast<int>(got.size()) == want.size);
            CHECK(got == want.pairs);  // lexicographically smallest maximum matching
        }
    }
}

TEST_CASE("line_counts on the worked scenario") {
    const auto s = worked_scenario();

    const LineCounts at1 = line_counts(s.result, s.gt, s.vocab, 1, kCfg);
    CHECK(at1 == LineCounts{1, 3, 4, 3});

    const LineCounts at5 = line_counts(s.result, s.gt, s.vocab, 5, kCfg);
    CHECK(at5 == LineCounts{2, 3, 4, 3});

    SUBCASE("empty prediction keeps the denominators") {
        const LineResult empty{s.result.line, {}};
        CHECK(line_counts(empty, s.gt, s.vocab, 1, kCfg) == LineCounts{0, 0, 4, 3});
    }
    SUBCASE("retrieved can count options instead of areas") {
        FusionConfig cfg = kCfg;
        cfg.retrieved_count = RetrievedCount::Options;
        CHECK(line_counts(s.result, s.gt, s.vocab, 1, cfg) == LineCounts{1, 5, 4, 3});
    }
}

TEST_CASE("metric ratios and zero guards") {
    CHECK(precision_at_k(LineCounts{1, 3, 4, 3}) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(recall_at_k(LineCounts{1, 3, 4, 3}) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(recall_at_k_invoc(LineCounts{1, 3, 4, 3}) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(precision_at_k(LineCounts{2, 3, 4, 3}) == doctest::Approx(2.0 / 3).epsilon(1e-12));
    CHECK(recall_at_k(LineCounts{2, 3, 4, 3}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(recall_at_k_invoc(LineCounts{2, 3, 4, 3}) == doctest::Approx(2.0 / 3).epsilon(1e-12));

    CHECK(precision_at_k(LineCounts{1, 1, 1, 1}) == 1.0);
    CHECK(precision_at_k(LineCounts{0, 0, 4, 3}) == 0.0);
    CHECK(recall_at_k(LineCounts{0, 3, 0, 0}) == 0.0);
    CHECK(recall_at_k_invoc(LineCounts{0, 3, 4, 0}) == 0.0);
}

TEST_CASE("evaluate_corpus micro-averages counts") {
    // Line 1 yields counts (1,2,2,2) at k=1, line 2 yields (0,2,2,2):
    // corpus p@1 must be the summed ratio 1/4, not the mean of 1/2 and 0.
    const Box g0(0, 0, 50, 40), g1(100, 0, 150, 40);
    Vocabulary vocab;
    for (const char* label : {"A", "B"}) {
        vocab.classes.insert(NGramClass(label));
        vocab.support_counts.emplace(NGramClass(label), 1);
    }

    auto make_line = [&](const std::string& id, bool hit) {
        const QueryLineId line{id, 400, 40};
        LineResult result{line, {}};
        // Area 0 matches g0 only in the "hit" line; area 1 never matches.
        result.areas.push_back(Area{0, g0, {sol(hit ? "A" : "B", g0, 0.9)}});
        result.areas.push_back(Area{1, g1, {sol("A", g1, 0.8)}});
        GroundTruthLine gt{line,
                           {GroundTruthOccurrence{NGramClass("A"), g0},
                            GroundTruthOccurrence{NGramClass("B"), g1}}};
        return std::pair{result, gt};
    };
    auto [r1, g1_] = make_line("line_a", true);
    auto [r2, g2_] = make_line("line_b", false);

    const auto report = evaluate_corpus_serial({r1, r2}, {g1_, g2_}, vocab, {1}, kCfg);
    CHECK(report.corpus.per_k.at(1).counts == LineCounts{1, 4, 4, 4});
    CHECK(report.corpus.per_k.at(1).p_at_k == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(report.corpus.per_k.at(1).r_at_k == doctest::Approx(0.25).epsilon(1e-12));
    REQUIRE(report.lines.size() == 2);
    CHECK(report.lines[0].line_id == "line_a");
    CHECK(report.lines[0].report.per_k.at(1).counts == LineCounts{1, 2, 2, 2});
    CHECK(report.lines[1].report.per_k.at(1).counts == LineCounts{0, 2, 2, 2});
    CHECK(report.lines[0].flags.empty());

    SUBCASE("singleton corpus equals its line") {
        const auto solo = evaluate_corpus_serial({r1}, {g1_}, vocab, {1}, kCfg);
        CHECK(solo.corpus.per_k.at(1).counts == solo.lines[0].report.per_k.at(1).counts);
        CHECK(solo.corpus.per_k.at(1).p_at_k == solo.lines[0].report.per_k.at(1).p_at_k);
    }
    SUBCASE("duplicating a line leaves the ratios unchanged") {
        auto [r1b, g1b] = make_line("line_c", true);
        const auto once = evaluate_corpus_serial({r1}, {g1_}, vocab, {1}, kCfg);
        const auto twice = evaluate_corpus_serial({r1, r1b}, {g1_, g1b}, vocab, {1}, kCfg);
        CHECK(once.corpus.per_k.at(1).p_at_k ==
              doctest::Approx(twice.corpus.per_k.at(1).p_at_k).epsilon(1e-15));
        CHECK(once.corpus.per_k.at(1).r_at_k ==
              doctest::Approx(twice.corpus.per_k.at(1).r_at_k).epsilon(1e-15));
    }
}

TEST_CASE("evaluate_corpus flags zero-denominator lines") {
    const QueryLineId line{"bare", 200, 40};
    const LineResult result{line, {}};
    const GroundTruthLine gt{line, {}};
    Vocabulary vocab;
    vocab.classes.insert(NGramClass("A"));

    const auto report = evaluate_corpus_serial({result}, {gt}, vocab, {1, 5}, kCfg);
    REQUIRE(report.lines.size() == 1);
    const auto& flags = report.lines[0].flags;
    CHECK(std::count(flags.begin(), flags.end(), "retrieved=0") == 1);
    CHECK(std::count(flags.begin(), flags.end(), "relevant=0") == 1);
    CHECK(std::count(flags.begin(), flags.end(), "relevant_invoc=0") == 1);
    CHECK(report.corpus.per_k.at(1).p_at_k == 0.0);
    CHECK(report.corpus.per_k.at(5).r_at_k == 0.0);
    CHECK(report.corpus.per_k.at(5).r_at_k_invoc == 0.0);
}

TEST_CASE("evaluate_corpus rejects misaligned and duplicate line ids") {
    const auto s = worked_scenario();
    Vocabulary vocab = s.vocab;

    SUBCASE("missing ground truth") {
        CHECK_THROWS_WITH_AS(evaluate_corpus_serial({s.result}, {}, vocab, {1}, kCfg),
                             doctest::Contains("results without ground truth"), ContractError);
    }
    SUBCASE("missing results") {
        CHECK_THROWS_WITH_AS(evaluate_corpus_serial({}, {s.gt}, vocab, {1}, kCfg),
                             doctest::Contains("ground truth without results"), ContractError);
    }
    SUBCASE("duplicate result ids") {
        CHECK_THROWS_AS(evaluate_corpus_serial({s.result, s.result}, {s.gt}, vocab, {1}, kCfg),
                        ContractError);
    }
    SUBCASE("empty k list") {
        CHECK_THROWS_AS(evaluate_corpus_serial({s.result}, {s.gt}, vocab, {}, kCfg),
                        ContractError);
    }
}

TEST_CASE("evaluate_corpus is permutation invariant and parallel-exact") {
    // A simulated corpus provides irregular instances.
    const auto glyphs = testutil::make_glyphs();
    LineSpec spec;
    spec.seed = 31;
    const auto lines = synth_corpus(glyphs, testutil::word_pool(), 24, spec, {3});
    std::vector<std::string> texts;
    std::vector<GroundTruthLine> gts;
    for (const auto& l : lines) {
        texts.push_back(l.text);
        gts.push_back(to_ground_truth(l));
    }
    const Vocabulary vocab = build_vocabulary(texts, {3}, 1);
    NoiseModel noise;
    noise.miss_rate = 0.25;
    noise.false_positives_per_line = 1.5;
    noise.box_jitter = 3.0;
    noise.seed = 5;
    const auto corpus_a = simulate_corpus(gts, vocab, noise, ModalityId("visual"));
    noise.seed = 6;
    const auto corpus_b = simulate_corpus(gts, vocab, noise, ModalityId("phoc"));
    FusionConfig cfg;
    cfg.w1 = 0.8;
    cfg.w2 = 0.7;
    const auto results = fuse_corpus_serial(corpus_a, corpus_b, cfg);

    const std::vector<int> ks{1, 2, 5};
    const auto serial = evaluate_corpus_serial(results, gts, vocab, ks, cfg);
    const auto parallel = evaluate_corpus(results, gts, vocab, ks, cfg, 4);

    for (int k : ks) {
        CHECK(serial.corpus.per_k.at(k).counts == parallel.corpus.per_k.at(k).counts);
        CHECK(serial.corpus.per_k.at(k).p_at_k == parallel.corpus.per_k.at(k).p_at_k);
    }
    REQUIRE(serial.lines.size() == parallel.lines.size());
    for (std::size_t i = 0; i < serial.lines.size(); ++i) {
        CHECK(serial.lines[i].line_id == parallel.lines[i].line_id);
        CHECK(serial.lines[i].flags == parallel.lines[i].flags);
    }

    // Shuffle both inputs the same way: the corpus totals must not move.
    std::vector<std::size_t> order(results.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937 shuffle_rng(99);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    std::vector<LineResult> shuffled_results;
    std::vector<GroundTruthLine> shuffled_gts;
    for (std::size_t idx : order) {
        shuffled_results.push_back(results[idx]);
        shuffled_gts.push_back(gts[idx]);
    }
    const auto shuffled = evaluate_corpus_serial(shuffled_results, shuffled_gts, vocab, ks, cfg);
    for (int k : ks) {
        CHECK(shuffled.corpus.per_k.at(k).counts == serial.corpus.per_k.at(k).counts);
    }
    for (std::size_t i = 0; i < serial.lines.size(); ++i) {
        CHECK(shuffled.lines[i].line_id == serial.lines[i].line_id);  // sorted by id
    }

    // Count invariants on every line and cutoff.
    for (const auto& line : serial.lines) {
        for (int k : ks) {
            const LineCounts& c = line.report.per_k.at(k).counts;
            CHECK(c.true_relevant_at_k <= std::min(c.retrieved, c.relevant));
            CHECK(c.relevant_invoc <= c.relevant);
        }
        for (std::size_t ki = 1; ki < ks.size(); ++ki) {
            // true counts never drop when k grows; denominators stay fixed.
            CHECK(line.report.per_k.at(ks[ki]).counts.true_relevant_at_k >=
                  line.report.per_k.at(ks[ki - 1]).counts.true_relevant_at_k);
            CHECK(line.report.per_k.at(ks[ki]).counts.retrieved ==
                  line.report.per_k.at(ks[ki - 1]).counts.retrieved);
        }
        for (int k : ks) {
            CHECK(line.report.per_k.at(k).r_at_k_invoc >= line.report.per_k.at(k).r_at_k);
        }
    }
}

TEST_CASE("metric names and report access") {
    CHECK(metric_name(MetricKind::Precision, 1) == "p@1");
    CHECK(metric_name(MetricKind::Recall, 5) == "r@5");
    CHECK(metric_name(MetricKind::RecallInVoc, 5) == "r@5_InVoc");
    CHECK(metric_names({1, 5}) ==
          std::vector<std::string>{"p@1", "r@1", "r@1_InVoc", "p@5", "r@5", "r@5_InVoc"});

    const auto s = worked_scenario();
    const auto report = evaluate_corpus_serial({s.result}, {s.gt}, s.vocab, {1, 5}, kCfg);
    CHECK(metric_value(report.corpus, MetricKind::Precision, 1) ==
          doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(metric_value(report.corpus, MetricKind::RecallInVoc, 5) ==
          doctest::Approx(2.0 / 3).epsilon(1e-12));
    CHECK_THROWS_AS(metric_value(report.corpus, MetricKind::Recall, 3), ContractError);
}
