#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ngspot/fusion.hpp"
#include "ngspot/grid.hpp"
#include "ngspot/io.hpp"
#include "ngspot/metrics.hpp"
#include "ngspot/synth.hpp"

namespace {

using namespace ngspot;

std::vector<int> dedupe_ks(const std::vector<int>& ks) {
    std::vector<int> out;
    for (int k : ks) {
        if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    }
    return out;
}

OverlapMeasure parse_measure(const std::string& name) {
    return name == "iou" ? OverlapMeasure::Iou : OverlapMeasure::Horizontal;
}

// Flag combinations that violate a config contract are usage errors (exit 2),
// not data errors.
template <class T>
void validate_flags(const T& cfg) {
    try {
        cfg.validate();
    } catch (const ContractError& e) {
        throw CLI::ValidationError(e.what());
    }
}

std::string metric_filename(const std::string& metric) {
    std::string out;
    for (char c : metric) {
        if (c == '@') {
            out += "_at_";
        } else {
            out += c;
        }
    }
    return out + ".svg";
}

void print_metrics(std::ostream& out, const MetricsReport& report) {
    char buf[64];
    for (const auto& [k, m] : report.per_k) {
        for (MetricKind kind :
             {MetricKind::Precision, MetricKind::Recall, MetricKind::RecallInVoc}) {
            std::snprintf(buf, sizeof(buf), "%.6f", metric_value(report, kind, k));
            out << ' ' << metric_name(kind, k) << '=' << buf;
        }
    }
    out << '\n';
}

struct FuseOpts {
    std::string branch_a, branch_b, out;
    FusionConfig cfg;
    std::string measure = "horizontal";
    int jobs = 0;
};

struct EvalOpts {
    std::string pred, gt, vocab, out;
    std::vector<int> ks{1, 5};
    FusionConfig cfg;
    std::string measure = "horizontal";
    std::string retrieved = "areas";
    int jobs = 0;
};

struct GridOpts {
    std::string branch_a, branch_b, gt, vocab, out_csv, heatmaps;
    std::vector<int> ks{1, 5};
    double step = 0.1;
    FusionConfig cfg;
    std::string measure = "horizontal";
    int jobs = 0;
};

struct SynthOpts {
    std::string glyphs, text_source, out;
    int lines = 100;
    std::vector<int> n{3};
    LineSpec spec;
    int jobs = 0;
};

struct VocabOpts {
    std::string transcripts, out;
    std::vector<int> n{3};
    int min_count = 1;
};

struct SimulateOpts {
    std::string gt, vocab, modality, out;
    NoiseModel noise;
    int jobs = 0;
};

struct ReportOpts {
    std::string in;
    bool lines = false;
};

void run_fuse(FuseOpts& o) {
    o.cfg.overlap_measure = parse_measure(o.measure);
    validate_flags(o.cfg);
    const auto a = load_detections(o.branch_a);
    const auto b = load_detections(o.branch_b);
    const auto results = fuse_corpus(a, b, o.cfg, o.jobs);
    save_results(results, o.out);
    std::cerr << "fused " << results.size() << " lines -> " << o.out << '\n';
}

void run_eval(EvalOpts& o) {
    o.cfg.overlap_measure = parse_measure(o.measure);
    o.cfg.retrieved_count =
        o.retrieved == "options" ? RetrievedCount::Options : RetrievedCount::Areas;
    validate_flags(o.cfg);
    const auto results = load_results(o.pred);
    const auto gts = load_ground_truth(o.gt);
    const auto vocab = load_vocabulary(o.vocab);
    const auto report = evaluate_corpus(results, gts, vocab, dedupe_ks(o.ks), o.cfg, o.jobs);
    if (!o.out.empty()) save_report(report, o.out);
    std::cout << "corpus:";
    print_metrics(std::cout, report.corpus);
}

void run_grid(GridOpts& o) {
    o.cfg.overlap_measure = parse_measure(o.measure);
    GridSpec spec;
    spec.step = o.step;
    try {
        spec.validate();
    } catch (const ContractError& e) {
        throw CLI::ValidationError(e.what());
    }
    // Lattice cells override the weights; validate the rest at a valid point.
    FusionConfig probe = o.cfg;
    probe.w1 = 0.0;
    probe.w2 = 0.0;
    validate_flags(probe);

    const auto a = load_detections(o.branch_a);
    const auto b = load_detections(o.branch_b);
    const auto gts = load_ground_truth(o.gt);
    const auto vocab = load_vocabulary(o.vocab);
    const auto ks = dedupe_ks(o.ks);
    const auto cells = ngspot::run_grid(a, b, gts, vocab, ks, o.cfg, spec, o.jobs);
    save_grid_csv(cells, o.out_csv);
    std::cerr << "evaluated " << cells.size() << " cells -> " << o.out_csv << '\n';

    const auto best = best_per_metric(cells);
    char buf[64];
    for (const auto& name : metric_names(ks)) {
        const auto& row = best.rows.at(name);
        std::snprintf(buf, sizeof(buf), "%.6f", row.value);
        std::cout << name << " best=" << buf;
        std::snprintf(buf, sizeof(buf), "%g", row.w1);
        std::cout << " w1=" << buf;
        std::snprintf(buf, sizeof(buf), "%g", row.w2);
        std::cout << " w2=" << buf << '\n';
    }

    if (!o.heatmaps.empty()) {
        std::filesystem::create_directories(o.heatmaps);
        const auto points = spec.points();
        for (int k : ks) {
            for (MetricKind kind :
                 {MetricKind::Precision, MetricKind::Recall, MetricKind::RecallInVoc}) {
                const auto name = metric_name(kind, k);
                const auto matrix = heatmap_matrix(cells, kind, k);
                save_heatmap_svg(matrix, points, points, name,
                                 o.heatmaps + "/" + metric_filename(name));
            }
        }
        std::cerr << "wrote " << ks.size() * 3 << " heatmaps -> " << o.heatmaps << '\n';
    }
}

void run_synth(SynthOpts& o) {
    validate_flags(o.spec);
    const auto glyph_set = load_glyph_set(o.glyphs);
    std::vector<std::string> words;
    for (const auto& line : read_lines(o.text_source)) {
        std::istringstream in(line);
        std::string word;
        while (in >> word) words.push_back(word);
    }
    const std::set<int> n_sizes(o.n.begin(), o.n.end());
    const auto lines = synth_corpus(glyph_set, words, o.lines, o.spec, n_sizes, "line", o.jobs);

    namespace fs = std::filesystem;
    fs::create_directories(fs::path(o.out) / "images");
    std::vector<GroundTruthLine> gts;
    gts.reserve(lines.size());
    std::ostringstream transcripts;
    for (const auto& line : lines) {
        write_pgm(line.composed.image,
                  (fs::path(o.out) / "images" / (line.line.id + ".pgm")).string());
        gts.push_back(to_ground_truth(line));
        transcripts << line.text << '\n';
    }
    save_ground_truth(gts, (fs::path(o.out) / "ground_truth.json").string());
    std::ofstream tf(fs::path(o.out) / "transcripts.txt", std::ios::binary);
    tf << transcripts.str();
    if (!tf) throw IoError(IoError::Kind::File, o.out + "/transcripts.txt: write failed");
    std::cerr << "synthesized " << lines.size() << " lines -> " << o.out << '\n';
}

void run_vocab(VocabOpts& o) {
    const auto transcripts = read_lines(o.transcripts);
    const std::set<int> n_sizes(o.n.begin(), o.n.end());
    const auto vocab = build_vocabulary(transcripts, n_sizes, o.min_count);
    save_vocabulary(vocab, o.out);
    std::cerr << "kept " << vocab.classes.size() << " classes -> " << o.out << '\n';
}

void run_simulate(SimulateOpts& o) {
    validate_flags(o.noise);
    const auto gts = load_ground_truth(o.gt);
    const auto vocab = load_vocabulary(o.vocab);
    const auto corpus = simulate_corpus(gts, vocab, o.noise, ModalityId(o.modality), o.jobs);
    save_detections(corpus, o.out);
    std::size_t total = 0;
    for (const auto& [id, line] : corpus) total += line.detections.size();
    std::cerr << "simulated " << total << " detections over " << corpus.size() << " lines -> "
              << o.out << '\n';
}

void run_report(ReportOpts& o) {
    const auto report = load_report(o.in);
    std::cout << "corpus:";
    print_metrics(std::cout, report.corpus);
    if (o.lines) {
        for (const auto& line : report.lines) {
            std::cout << line.line_id << ':';
            print_metrics(std::cout, line.report);
            if (!line.flags.empty()) {
                std::cout << "  flags:";
                for (const auto& flag : line.flags) std::cout << ' ' << flag;
                std::cout << '\n';
            }
        }
    }
}

void add_jobs_flag(CLI::App* cmd, int& jobs) {
    cmd->add_option("--jobs", jobs, "Worker threads (0 = hardware default)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Few-shot n-gram spotting: fusion, evaluation, weight search, synthesis"};
    app.require_subcommand(1);

    FuseOpts fuse_opts;
    auto* fuse = app.add_subcommand("fuse", "Fuse two detection branches into ranked areas");
    fuse->add_option("--branch-a", fuse_opts.branch_a, "Branch 1 detection file")
        ->required()
        ->check(CLI::ExistingFile);
    fuse->add_option("--branch-b", fuse_opts.branch_b, "Branch 2 detection file")
        ->required()
        ->check(CLI::ExistingFile);
    fuse->add_option("--w1", fuse_opts.cfg.w1, "Branch 1 weight")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    fuse->add_option("--w2", fuse_opts.cfg.w2, "Branch 2 weight")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    fuse->add_option("--delta", fuse_opts.cfg.delta, "Maximum agreement gain")
        ->capture_default_str();
    fuse->add_option("--tau", fuse_opts.cfg.tau_overlap, "Same-class fusion overlap threshold")
        ->capture_default_str();
    fuse->add_option("--overlap-measure", fuse_opts.measure, "horizontal or iou")
        ->check(CLI::IsMember({"horizontal", "iou"}))
        ->capture_default_str();
    fuse->add_option("--out", fuse_opts.out, "Output result file")->required();
    add_jobs_flag(fuse, fuse_opts.jobs);
    fuse->callback([&] { run_fuse(fuse_opts); });

    EvalOpts eval_opts;
    auto* eval = app.add_subcommand("eval", "Score fused results against ground truth");
    eval->add_option("--pred", eval_opts.pred, "Result file from fuse")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--gt", eval_opts.gt, "Ground truth file")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--vocab", eval_opts.vocab, "Vocabulary file")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--k", eval_opts.ks, "Rank cutoffs, comma separated")
        ->delimiter(',')
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    eval->add_option("--tau-match", eval_opts.cfg.tau_match, "Matching overlap threshold")
        ->capture_default_str();
    eval->add_option("--overlap-measure", eval_opts.measure, "horizontal or iou")
        ->check(CLI::IsMember({"horizontal", "iou"}))
        ->capture_default_str();
    eval->add_option("--retrieved", eval_opts.retrieved,
                     "Count retrieved as areas or options")
        ->check(CLI::IsMember({"areas", "options"}))
        ->capture_default_str();
    eval->add_option("--out", eval_opts.out, "Report file (optional)");
    add_jobs_flag(eval, eval_opts.jobs);
    eval->callback([&] { run_eval(eval_opts); });

    GridOpts grid_opts;
    auto* grid = app.add_subcommand("grid", "Search fusion weights over the full lattice");
    grid->add_option("--branch-a", grid_opts.branch_a, "Branch 1 detection file")
        ->required()
        ->check(CLI::ExistingFile);
    grid->add_option("--branch-b", grid_opts.branch_b, "Branch 2 detection file")
        ->required()
        ->check(CLI::ExistingFile);
    grid->add_option("--gt", grid_opts.gt, "Ground truth file")
        ->required()
        ->check(CLI::ExistingFile);
    grid->add_option("--vocab", grid_opts.vocab, "Vocabulary file")
        ->required()
        ->check(CLI::ExistingFile);
    grid->add_option("--k", grid_opts.ks, "Rank cutoffs, comma separated")
        ->delimiter(',')
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    grid->add_option("--step", grid_opts.step, "Weight lattice step")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    grid->add_option("--delta", grid_opts.cfg.delta, "Maximum agreement gain")
        ->capture_default_str();
    grid->add_option("--tau", grid_opts.cfg.tau_overlap, "Same-class fusion overlap threshold")
        ->capture_default_str();
    grid->add_option("--tau-match", grid_opts.cfg.tau_match, "Matching overlap threshold")
        ->capture_default_str();
    grid->add_option("--overlap-measure", grid_opts.measure, "horizontal or iou")
        ->check(CLI::IsMember({"horizontal", "iou"}))
        ->capture_default_str();
    grid->add_option("--out-csv", grid_opts.out_csv, "Output CSV path")->required();
    grid->add_option("--heatmaps", grid_opts.heatmaps, "Directory for SVG heatmaps");
    add_jobs_flag(grid, grid_opts.jobs);
    grid->callback([&] { run_grid(grid_opts); });

    SynthOpts synth_opts;
    auto* synth = app.add_subcommand("synth", "Compose synthetic line images with ground truth");
    synth->add_option("--glyphs", synth_opts.glyphs, "Glyph directory (one subdir per symbol)")
        ->required()
        ->check(CLI::ExistingDirectory);
    synth->add_option("--lines", synth_opts.lines, "Number of lines to compose")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    synth->add_option("--text-source", synth_opts.text_source, "Word pool text file")
        ->required()
        ->check(CLI::ExistingFile);
    synth->add_option("--n", synth_opts.n, "N-gram sizes for ground truth")
        ->delimiter(',')
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    synth->add_option("--overlap-prob", synth_opts.spec.overlap_probability,
                      "Chance adjacent glyphs overlap")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    synth->add_option("--symbols-min", synth_opts.spec.symbols_min, "Minimum symbols per line")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    synth->add_option("--symbols-max", synth_opts.spec.symbols_max, "Maximum symbols per line")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    synth->add_option("--seed", synth_opts.spec.seed, "Master seed")->capture_default_str();
    synth->add_option("--out", synth_opts.out, "Output directory")->required();
    add_jobs_flag(synth, synth_opts.jobs);
    synth->callback([&] { run_synth(synth_opts); });

    VocabOpts vocab_opts;
    auto* vocab = app.add_subcommand("vocab", "Extract an n-gram vocabulary from transcripts");
    vocab->add_option("--transcripts", vocab_opts.transcripts, "Transcript text file")
        ->required()
        ->check(CLI::ExistingFile);
    vocab->add_option("--n", vocab_opts.n, "N-gram sizes, comma separated")
        ->delimiter(',')
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    vocab->add_option("--min-count", vocab_opts.min_count, "Minimum occurrences to keep a class")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    vocab->add_option("--out", vocab_opts.out, "Output vocabulary file")->required();
    vocab->callback([&] { run_vocab(vocab_opts); });

    SimulateOpts sim_opts;
    auto* simulate = app.add_subcommand("simulate", "Simulate one detector branch from ground truth");
    simulate->add_option("--gt", sim_opts.gt, "Ground truth file")
        ->required()
        ->check(CLI::ExistingFile);
    simulate->add_option("--vocab", sim_opts.vocab, "Vocabulary file")
        ->required()
        ->check(CLI::ExistingFile);
    simulate->add_option("--modality", sim_opts.modality, "Branch name, e.g. visual")
        ->required();
    simulate->add_option("--miss-rate", sim_opts.noise.miss_rate, "Chance a true n-gram is missed")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    simulate->add_option("--fp-rate", sim_opts.noise.false_positives_per_line,
                         "Mean false positives per line")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    simulate->add_option("--jitter", sim_opts.noise.box_jitter, "Box jitter in pixels")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    simulate->add_option("--tp-mean", sim_opts.noise.tp_score_mean, "True-positive score mean")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    simulate->add_option("--tp-spread", sim_opts.noise.tp_score_spread,
                         "True-positive score half-width")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    simulate->add_option("--fp-mean", sim_opts.noise.fp_score_mean, "False-positive score mean")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    simulate->add_option("--fp-spread", sim_opts.noise.fp_score_spread,
                         "False-positive score half-width")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    simulate->add_option("--seed", sim_opts.noise.seed, "Master seed")->capture_default_str();
    simulate->add_option("--out", sim_opts.out, "Output detection file")->required();
    add_jobs_flag(simulate, sim_opts.jobs);
    simulate->callback([&] { run_simulate(sim_opts); });

    ReportOpts report_opts;
    auto* report = app.add_subcommand("report", "Pretty-print a report file");
    report->add_option("--in", report_opts.in, "Report file")
        ->required()
        ->check(CLI::ExistingFile);
    report->add_flag("--lines", report_opts.lines, "Also print per-line metrics");
    report->callback([&] { run_report(report_opts); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
