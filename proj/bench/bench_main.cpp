// Serial vs OpenMP throughput for the corpus-level kernels on a synthetic
// mid-size workload. Run: build/bench/ngspot_bench

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "ngspot/fusion.hpp"
#include "ngspot/grid.hpp"
#include "ngspot/metrics.hpp"
#include "ngspot/rng.hpp"
#include "ngspot/synth.hpp"

namespace {

using namespace ngspot;

GlyphSet make_glyphs() {
    GlyphSet set;
    const std::string alphabet = "abcdefghij";
    for (char c : alphabet) {
        const std::string symbol(1, c);
        Rng rng(fnv1a64(symbol));
        std::vector<Raster> variants;
        for (int v = 0; v < 3; ++v) {
            Raster r = Raster::blank(8 + static_cast<int>(rng.uniform_int(0, 3)), 12);
            for (int y = 0; y < r.height; ++y) {
                r.at(static_cast<int>(rng.uniform_int(0, r.width - 1)), y) = 0;
            }
            for (int x = 0; x < r.width; ++x) {
                r.at(x, static_cast<int>(rng.uniform_int(0, r.height - 1))) = 0;
            }
            variants.push_back(std::move(r));
        }
        set.glyphs.emplace(symbol, std::move(variants));
    }
    return set;
}

struct BenchData {
    std::vector<GroundTruthLine> gts;
    DetectionCorpus branch_a;
    DetectionCorpus branch_b;
    Vocabulary vocab;
    std::vector<LineResult> results;
    FusionConfig cfg;
    std::vector<int> ks{1, 5};
};

const BenchData& data() {
    static const BenchData d = [] {
        BenchData out;
        const GlyphSet glyphs = make_glyphs();
        const std::vector<std::string> words{"abcde", "bcdef", "cdefg", "defgh",
                                             "efghi", "fghij", "acegi", "bdfhj"};
        LineSpec spec;
        spec.seed = 42;
        const auto lines = synth_corpus(glyphs, words, 300, spec, {3});

        std::vector<std::string> texts;
        for (const auto& line : lines) {
            texts.push_back(line.text);
            out.gts.push_back(to_ground_truth(line));
        }
        out.vocab = build_vocabulary(texts, {3}, 2);

        NoiseModel noise;
        noise.miss_rate = 0.2;
        noise.false_positives_per_line = 2.0;
        noise.box_jitter = 2.0;
        noise.seed = 7;
        out.branch_a = simulate_corpus(out.gts, out.vocab, noise, ModalityId("visual"));
        noise.seed = 8;
        out.branch_b = simulate_corpus(out.gts, out.vocab, noise, ModalityId("phoc"));

        out.cfg.w1 = 0.6;
        out.cfg.w2 = 0.7;
        out.results = fuse_corpus_serial(out.branch_a, out.branch_b, out.cfg);
        return out;
    }();
    return d;
}

void BM_FuseCorpusSerial(benchmark::State& state) {
    const auto& d = data();
    for (auto _ : state) {
        benchmark::DoNotOptimize(fuse_corpus_serial(d.branch_a, d.branch_b, d.cfg));
    }
}
BENCHMARK(BM_FuseCorpusSerial);

void BM_FuseCorpusOpenMP(benchmark::State& state) {
    const auto& d = data();
    for (auto _ : state) {
        benchmark::DoNotOptimize(fuse_corpus(d.branch_a, d.branch_b, d.cfg));
    }
}
BENCHMARK(BM_FuseCorpusOpenMP);

void BM_EvaluateCorpusSerial(benchmark::State& state) {
    const auto& d = data();
    for (auto _ : state) {
        benchmark::DoNotOptimize(evaluate_corpus_serial(d.results, d.gts, d.vocab, d.ks, d.cfg));
    }
}
BENCHMARK(BM_EvaluateCorpusSerial);

void BM_EvaluateCorpusOpenMP(benchmark::State& state) {
    const auto& d = data();
    for (auto _ : state) {
        benchmark::DoNotOptimize(evaluate_corpus(d.results, d.gts, d.vocab, d.ks, d.cfg));
    }
}
BENCHMARK(BM_EvaluateCorpusOpenMP);

void BM_RunGridSerial(benchmark::State& state) {
    const auto& d = data();
    GridSpec spec;
    spec.step = 0.25;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_grid_serial(d.branch_a, d.branch_b, d.gts, d.vocab, d.ks,
                                                 d.cfg, spec));
    }
}
BENCHMARK(BM_RunGridSerial);

void BM_RunGridOpenMP(benchmark::State& state) {
    const auto& d = data();
    GridSpec spec;
    spec.step = 0.25;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            run_grid(d.branch_a, d.branch_b, d.gts, d.vocab, d.ks, d.cfg, spec));
    }
}
BENCHMARK(BM_RunGridOpenMP);

}  // namespace

BENCHMARK_MAIN();
