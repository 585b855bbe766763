#include "ngspot/synth.hpp"

#include <algorithm>
#include <cctype>
#include <iomanip>
#include <sstream>

#include "ngspot/rng.hpp"
#include "parallel_for.hpp"

namespace ngspot {

namespace {

bool is_space_symbol(const std::string& s) {
    return s.size() == 1 && std::isspace(static_cast<unsigned char>(s[0])) != 0;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::istringstream in(text);
    std::string token;
    while (in >> token) tokens.push_back(token);
    return tokens;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

Raster Raster::blank(int w, int h, std::uint8_t value) {
    Raster r;
    r.width = w;
    r.height = h;
    r.pixels.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), value);
    return r;
}

void GlyphSet::validate() const {
    for (const auto& [symbol, variants] : glyphs) {
        if (symbol.empty() || symbol_count(symbol) != 1) {
            throw ContractError("GlyphSet: key \"" + symbol + "\" is not a single symbol");
        }
        if (variants.empty()) {
            throw ContractError("GlyphSet: symbol \"" + symbol + "\" has no glyph images");
        }
        for (const auto& glyph : variants) {
            if (glyph.width < 1 || glyph.height < 1 ||
                glyph.pixels.size() != static_cast<std::size_t>(glyph.width) *
                                           static_cast<std::size_t>(glyph.height)) {
                throw ContractError("GlyphSet: symbol \"" + symbol +
                                    "\" has an empty or malformed raster");
            }
        }
    }
}

void LineSpec::validate() const {
    if (symbols_min < 1 || symbols_min > symbols_max) {
        throw ContractError("LineSpec: requires 1 <= symbols_min <= symbols_max");
    }
    if (!(overlap_probability >= 0.0 && overlap_probability <= 1.0)) {
        throw ContractError("LineSpec: overlap_probability must lie in [0,1]");
    }
    if (!(overlap_fraction_min > 0.0 && overlap_fraction_min <= overlap_fraction_max &&
          overlap_fraction_max < 1.0)) {
        throw ContractError("LineSpec: requires 0 < overlap_fraction_min <= "
                            "overlap_fraction_max < 1");
    }
}

void NoiseModel::validate() const {
    if (!(miss_rate >= 0.0 && miss_rate <= 1.0)) {
        throw ContractError("NoiseModel: miss_rate must lie in [0,1]");
    }
    if (!(false_positives_per_line >= 0.0)) {
        throw ContractError("NoiseModel: false_positives_per_line must be >= 0");
    }
    for (double v : {tp_score_mean, tp_score_spread, fp_score_mean, fp_score_spread}) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ContractError("NoiseModel: score parameters must lie in [0,1]");
        }
    }
    if (!(box_jitter >= 0.0)) {
        throw ContractError("NoiseModel: box_jitter must be >= 0");
    }
}

Vocabulary build_vocabulary(const std::vector<std::string>& transcripts,
                            const std::set<int>& n_sizes, int min_count) {
    if (transcripts.empty()) {
        throw ContractError("build_vocabulary: transcript list is empty");
    }
    if (n_sizes.empty()) {
        throw ContractError("build_vocabulary: n_sizes is empty");
    }
    for (int n : n_sizes) {
        if (n < 1) {
            throw ContractError("build_vocabulary: n must be >= 1, got " + std::to_string(n));
        }
    }
    if (min_count < 1) {
        throw ContractError("build_vocabulary: min_count must be >= 1");
    }

    std::map<std::string, std::int64_t> counts;
    for (const auto& line : transcripts) {
        for (const auto& token : tokenize(line)) {
            const auto symbols = utf8_symbols(token);
            for (int n : n_sizes) {
                if (static_cast<int>(symbols.size()) < n) continue;
                for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= symbols.size(); ++i) {
                    std::string label;
                    for (std::size_t j = 0; j < static_cast<std::size_t>(n); ++j) {
                        label += symbols[i + j];
                    }
                    ++counts[label];
                }
            }
        }
    }

    Vocabulary vocab;
    for (const auto& [label, count] : counts) {
        if (count >= min_count) {
            NGramClass cls(label);
            vocab.classes.insert(cls);
            vocab.support_counts.emplace(cls, count);
        }
    }
    return vocab;
}

ComposedLine compose_line(const GlyphSet& glyphs, const std::string& text, const LineSpec& spec,
                          const std::set<int>& n_sizes) {
    spec.validate();
    glyphs.validate();
    for (int n : n_sizes) {
        if (n < 1) {
            throw ContractError("compose_line: n must be >= 1, got " + std::to_string(n));
        }
    }

    const auto symbols = utf8_symbols(text);
    for (const auto& s : symbols) {
        if (!is_space_symbol(s) && glyphs.glyphs.find(s) == glyphs.glyphs.end()) {
            throw ContractError("compose_line: no glyphs for symbol \"" + s + "\"");
        }
    }

    // Pass 1: pick variants and x-origins; the raster size depends on them.
    struct Placement {
        std::string symbol;
        const Raster* glyph;
        int x0;
    };
    Rng rng(spec.seed);
    std::vector<Placement> placements;
    std::vector<std::vector<std::size_t>> tokens;  // runs of placement indices
    bool token_open = false;
    int pen = 2;  // left margin
    int prev_width = 0;
    for (const auto& s : symbols) {
        if (is_space_symbol(s)) {
            if (token_open) pen += static_cast<int>(rng.uniform_int(4, 8));
            token_open = false;
            prev_width = 0;
            continue;
        }
        const auto& variants = glyphs.glyphs.at(s);
        const auto variant = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(variants.size()) - 1));
        const Raster& glyph = variants[variant];

        int x0 = pen;
        if (token_open) {
            if (rng.uniform_double() < spec.overlap_probability) {
                const double frac =
                    rng.uniform_real(spec.overlap_fraction_min, spec.overlap_fraction_max);
                int back = static_cast<int>(std::lround(frac * prev_width));
                back = std::clamp(back, 0, prev_width - 1);
                x0 = pen - back;
            } else {
                x0 = pen + static_cast<int>(rng.uniform_int(1, 4));
            }
        }

        if (!token_open) {
            tokens.emplace_back();
            token_open = true;
        }
        tokens.back().push_back(placements.size());
        placements.push_back(Placement{s, &glyph, x0});
        pen = x0 + glyph.width;
        prev_width = glyph.width;
    }

    ComposedLine out;
    if (placements.empty()) return out;

    int max_height = 0;
    int max_x1 = 0;
    for (const auto& p : placements) {
        max_height = std::max(max_height, p.glyph->height);
        max_x1 = std::max(max_x1, p.x0 + p.glyph->width);
    }
    const int height = max_height + 4;
    const int width = max_x1 + 2;

    // Pass 2: draw (per-pixel darkest value wins) and record boxes.
    out.image = Raster::blank(width, height);
    for (const auto& p : placements) {
        const int y0 = 2 + (max_height - p.glyph->height) / 2;
        for (int y = 0; y < p.glyph->height; ++y) {
            for (int x = 0; x < p.glyph->width; ++x) {
                auto& dst = out.image.at(p.x0 + x, y0 + y);
                dst = std::min(dst, p.glyph->at(x, y));
            }
        }
        out.symbols.push_back(p.symbol);
        out.symbol_boxes.emplace_back(p.x0, y0, p.x0 + p.glyph->width, y0 + p.glyph->height);
    }

    for (int n : n_sizes) {
        const auto nn = static_cast<std::size_t>(n);
        for (const auto& token : tokens) {
            if (token.size() < nn) continue;
            for (std::size_t i = 0; i + nn <= token.size(); ++i) {
                std::string label;
                Box box = out.symbol_boxes[token[i]];
                for (std::size_t j = 0; j < nn; ++j) {
                    label += out.symbols[token[i + j]];
                    box = bounding_union(box, out.symbol_boxes[token[i + j]]);
                }
                out.occurrences.push_back(GroundTruthOccurrence{NGramClass(label), box});
            }
        }
    }
    return out;
}

std::vector<Detection> simulate_detector(const GroundTruthLine& gt, const Vocabulary& vocab,
                                         const NoiseModel& noise, const ModalityId& modality) {
    noise.validate();
    gt.validate();
    vocab.validate();
    Rng rng(derive_seed(noise.seed, fnv1a64(modality.name())));

    const double line_w = gt.line.width;
    const double line_h = gt.line.height;
    const double j = noise.box_jitter;

    auto jittered = [&](const Box& b) {
        double x0 = b.x0() + rng.uniform_real(-j, j);
        double x1 = b.x1() + rng.uniform_real(-j, j);
        double y0 = b.y0() + rng.uniform_real(-j, j);
        double y1 = b.y1() + rng.uniform_real(-j, j);
        x0 = std::max(0.0, x0);
        y0 = std::max(0.0, y0);
        x1 = std::min(line_w, x1);
        y1 = std::min(line_h, y1);
        if (!(x0 < x1)) {  // jitter collapsed the axis; keep the original span
            x0 = b.x0();
            x1 = b.x1();
        }
        if (!(y0 < y1)) {
            y0 = b.y0();
            y1 = b.y1();
        }
        return Box(x0, y0, x1, y1);
    };
    auto draw_score = [&](double mean, double spread) {
        return clamp01(mean + rng.uniform_real(-spread, spread));
    };

    std::vector<Detection> out;
    for (const auto& occ : gt.occurrences) {
        if (!vocab.contains(occ.cls)) continue;  // unknown classes are never recognized
        if (rng.uniform_double() < noise.miss_rate) continue;
        const Box box = jittered(occ.box);
        out.push_back(Detection{occ.cls, box, draw_score(noise.tp_score_mean,
                                                         noise.tp_score_spread), modality});
    }

    const std::vector<NGramClass> pool(vocab.classes.begin(), vocab.classes.end());
    int n_fp = rng.poisson(noise.false_positives_per_line);
    if (pool.empty()) n_fp = 0;
    for (int i = 0; i < n_fp; ++i) {
        const auto& cls =
            pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
        const auto x0 = rng.uniform_int(0, gt.line.width - 1);
        const auto x1 = rng.uniform_int(x0 + 1, gt.line.width);
        const auto y0 = rng.uniform_int(0, gt.line.height - 1);
        const auto y1 = rng.uniform_int(y0 + 1, gt.line.height);
        out.push_back(Detection{cls,
                                Box(static_cast<double>(x0), static_cast<double>(y0),
                                    static_cast<double>(x1), static_cast<double>(y1)),
                                draw_score(noise.fp_score_mean, noise.fp_score_spread),
                                modality});
    }
    return out;
}

std::vector<SynthLine> synth_corpus(const GlyphSet& glyphs, const std::vector<std::string>& words,
                                    int count, const LineSpec& spec, const std::set<int>& n_sizes,
                                    const std::string& id_prefix, int jobs) {
    spec.validate();
    glyphs.validate();
    if (count < 0) {
        throw ContractError("synth_corpus: count must be >= 0");
    }
    if (words.empty()) {
        throw ContractError("synth_corpus: word list is empty");
    }
    for (const auto& word : words) {
        if (symbol_count(word) < 1) {
            throw ContractError("synth_corpus: word list contains an empty word");
        }
    }

    int id_digits = 4;
    for (std::int64_t v = count; v > 9999; v /= 10) ++id_digits;

    std::vector<SynthLine> out(static_cast<std::size_t>(count));
    auto body = [&](std::int64_t i) {
        const std::uint64_t line_master = derive_seed(spec.seed, static_cast<std::uint64_t>(i));
        Rng text_rng(derive_seed(line_master, 0));
        const auto target = static_cast<int>(text_rng.uniform_int(spec.symbols_min,
                                                                  spec.symbols_max));
        std::string text;
        int total = 0;
        while (total < target) {
            const auto& word = words[static_cast<std::size_t>(
                text_rng.uniform_int(0, static_cast<std::int64_t>(words.size()) - 1))];
            if (!text.empty()) text += ' ';
            text += word;
            total += symbol_count(word);
        }

        LineSpec line_spec = spec;
        line_spec.seed = derive_seed(line_master, 1);
        ComposedLine composed = compose_line(glyphs, text, line_spec, n_sizes);

        std::ostringstream id;
        id << id_prefix << '_' << std::setw(id_digits) << std::setfill('0') << i;
        SynthLine& line = out[static_cast<std::size_t>(i)];
        line.line = QueryLineId{id.str(), composed.image.width, composed.image.height};
        line.text = text;
        line.composed = std::move(composed);
    };
    detail::parallel_index_for(count, jobs, body);
    return out;
}

DetectionCorpus simulate_corpus(const std::vector<GroundTruthLine>& gts, const Vocabulary& vocab,
                                const NoiseModel& noise, const ModalityId& modality, int jobs) {
    noise.validate();
    vocab.validate();

    std::map<std::string, const GroundTruthLine*> by_id;
    for (const auto& gt : gts) {
        if (!by_id.emplace(gt.line.id, &gt).second) {
            throw ContractError("simulate_corpus: duplicate line id '" + gt.line.id + "'");
        }
    }
    std::vector<const GroundTruthLine*> tasks;
    tasks.reserve(by_id.size());
    for (const auto& [id, gt] : by_id) tasks.push_back(gt);

    std::vector<std::vector<Detection>> detections(tasks.size());
    auto body = [&](std::int64_t i) {
        const auto idx = static_cast<std::size_t>(i);
        NoiseModel line_noise = noise;
        line_noise.seed = derive_seed(noise.seed, fnv1a64(tasks[idx]->line.id));
        detections[idx] = simulate_detector(*tasks[idx], vocab, line_noise, modality);
    };
    detail::parallel_index_for(static_cast<std::int64_t>(tasks.size()), jobs, body);

    DetectionCorpus corpus;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        corpus.emplace(tasks[i]->line.id,
                       LineDetections{tasks[i]->line, modality, std::move(detections[i])});
    }
    return corpus;
}

GroundTruthLine to_ground_truth(const SynthLine& line) {
    GroundTruthLine gt{line.line, line.composed.occurrences};
    gt.validate();
    return gt;
}

}  // namespace ngspot
