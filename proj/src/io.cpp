#include "ngspot/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

namespace ngspot {

namespace {

using nlohmann::json;

json parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(IoError::Kind::File, path + ": cannot open for reading");
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw IoError(IoError::Kind::Syntax, path + ": " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError(IoError::Kind::File, path + ": cannot open for writing");
    }
    out << text;
    out.flush();
    if (!out) {
        throw IoError(IoError::Kind::File, path + ": write failed");
    }
}

void check_schema(const json& root, const std::string& path) {
    if (!root.is_object()) {
        throw IoError(IoError::Kind::Syntax, path + ": top level must be an object");
    }
    const auto it = root.find("schema_version");
    if (it == root.end() || !it->is_string()) {
        throw IoError(IoError::Kind::Syntax,
                      path + ": missing string field \"schema_version\"");
    }
    if (it->get<std::string>() != kSchemaVersion) {
        throw IoError(IoError::Kind::SchemaVersion,
                      path + ": unsupported schema_version \"" + it->get<std::string>() +
                          "\", expected \"" + kSchemaVersion + "\"");
    }
}

const json& field(const json& obj, const char* name, const std::string& where) {
    if (!obj.is_object()) {
        throw IoError(IoError::Kind::Syntax, where + ": expected an object");
    }
    const auto it = obj.find(name);
    if (it == obj.end()) {
        throw IoError(IoError::Kind::Syntax,
                      where + ": missing field \"" + std::string(name) + "\"");
    }
    return *it;
}

std::string str_field(const json& obj, const char* name, const std::string& where) {
    const json& v = field(obj, name, where);
    if (!v.is_string()) {
        throw IoError(IoError::Kind::Syntax,
                      where + ": field \"" + std::string(name) + "\" must be a string");
    }
    return v.get<std::string>();
}

double num_field(const json& obj, const char* name, const std::string& where) {
    const json& v = field(obj, name, where);
    if (!v.is_number()) {
        throw IoError(IoError::Kind::Syntax,
                      where + ": field \"" + std::string(name) + "\" must be a number");
    }
    return v.get<double>();
}

std::int64_t i64_field(const json& obj, const char* name, const std::string& where) {
    const json& v = field(obj, name, where);
    if (!v.is_number_integer()) {
        throw IoError(IoError::Kind::Syntax,
                      where + ": field \"" + std::string(name) + "\" must be an integer");
    }
    return v.get<std::int64_t>();
}

int int_field(const json& obj, const char* name, const std::string& where) {
    return static_cast<int>(i64_field(obj, name, where));
}

const json& array_field(const json& obj, const char* name, const std::string& where) {
    const json& v = field(obj, name, where);
    if (!v.is_array()) {
        throw IoError(IoError::Kind::Syntax,
                      where + ": field \"" + std::string(name) + "\" must be an array");
    }
    return v;
}

// Reruns domain constructors/validators, converting their contract errors
// into located invariant errors.
template <class F>
decltype(auto) checked(const std::string& where, F&& f) {
    try {
        return f();
    } catch (const ContractError& e) {
        throw IoError(IoError::Kind::Invariant, where + ": " + e.what());
    }
}

Box box_from(const json& obj, const std::string& where) {
    const double x0 = num_field(obj, "x0", where);
    const double y0 = num_field(obj, "y0", where);
    const double x1 = num_field(obj, "x1", where);
    const double y1 = num_field(obj, "y1", where);
    return checked(where, [&] { return Box(x0, y0, x1, y1); });
}

json box_to(const Box& box) {
    return json{{"x0", box.x0()}, {"y0", box.y0()}, {"x1", box.x1()}, {"y1", box.y1()}};
}

NGramClass class_from(const json& obj, const std::string& where) {
    const std::string label = str_field(obj, "cls", where);
    const int n = int_field(obj, "n", where);
    return checked(where, [&] { return NGramClass(label, n); });
}

QueryLineId line_id_from(const json& rec, const std::string& where) {
    QueryLineId id{str_field(rec, "line_id", where), int_field(rec, "width", where),
                   int_field(rec, "height", where)};
    checked(where, [&] { id.validate(); });
    return id;
}

void line_id_to(json& rec, const QueryLineId& id) {
    rec["line_id"] = id.id;
    rec["width"] = id.width;
    rec["height"] = id.height;
}

std::string dump(const json& root) { return root.dump(2) + "\n"; }

// --- report serialization helpers ---

json kmetrics_to(const KMetrics& m) {
    return json{{"counts",
                 json{{"true_relevant_at_k", m.counts.true_relevant_at_k},
                      {"retrieved", m.counts.retrieved},
                      {"relevant", m.counts.relevant},
                      {"relevant_invoc", m.counts.relevant_invoc}}},
                {"p_at_k", m.p_at_k},
                {"r_at_k", m.r_at_k},
                {"r_at_k_invoc", m.r_at_k_invoc}};
}

KMetrics kmetrics_from(const json& obj, const std::string& where) {
    KMetrics m;
    const json& counts = field(obj, "counts", where);
    m.counts.true_relevant_at_k = i64_field(counts, "true_relevant_at_k", where + ".counts");
    m.counts.retrieved = i64_field(counts, "retrieved", where + ".counts");
    m.counts.relevant = i64_field(counts, "relevant", where + ".counts");
    m.counts.relevant_invoc = i64_field(counts, "relevant_invoc", where + ".counts");
    m.p_at_k = num_field(obj, "p_at_k", where);
    m.r_at_k = num_field(obj, "r_at_k", where);
    m.r_at_k_invoc = num_field(obj, "r_at_k_invoc", where);
    return m;
}

json per_k_to(const MetricsReport& report) {
    json out = json::object();
    for (const auto& [k, m] : report.per_k) {
        out[std::to_string(k)] = kmetrics_to(m);
    }
    return out;
}

void per_k_from(const json& obj, MetricsReport& report, const std::string& where) {
    if (!obj.is_object()) {
        throw IoError(IoError::Kind::Syntax, where + ": expected an object");
    }
    for (const auto& [key, value] : obj.items()) {
        int k = 0;
        try {
            std::size_t used = 0;
            k = std::stoi(key, &used);
            if (used != key.size()) throw std::invalid_argument(key);
        } catch (const std::exception&) {
            throw IoError(IoError::Kind::Syntax, where + ": key \"" + key + "\" is not a k value");
        }
        report.per_k[k] = kmetrics_from(value, where + "[\"" + key + "\"]");
    }
}

}  // namespace

DetectionCorpus load_detections(const std::string& path) {
    const json root = parse_file(path);
    check_schema(root, path);
    const json& lines = array_field(root, "lines", path);

    DetectionCorpus corpus;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string where = path + ": lines[" + std::to_string(i) + "]";
        const json& rec = lines[i];
        QueryLineId id = line_id_from(rec, where);
        ModalityId modality =
            checked(where, [&] { return ModalityId(str_field(rec, "modality", where)); });

        std::vector<Detection> detections;
        const json& arr = array_field(rec, "detections", where);
        for (std::size_t j = 0; j < arr.size(); ++j) {
            const std::string dw = where + ".detections[" + std::to_string(j) + "]";
            const json& d = arr[j];
            Detection det{class_from(d, dw), box_from(d, dw), num_field(d, "score", dw),
                          modality};
            checked(dw, [&] { det.validate(); });
            detections.push_back(std::move(det));
        }

        if (!corpus.emplace(id.id, LineDetections{id, modality, std::move(detections)}).second) {
            throw IoError(IoError::Kind::Invariant,
                          where + ": duplicate line_id \"" + id.id + "\"");
        }
    }
    return corpus;
}

void save_detections(const DetectionCorpus& corpus, const std::string& path) {
    json lines = json::array();
    for (const auto& [id, line] : corpus) {
        json rec;
        line_id_to(rec, line.line);
        rec["modality"] = line.modality.name();
        json dets = json::array();
        for (const auto& det : line.detections) {
            json d = box_to(det.box);
            d["cls"] = det.cls.label();
            d["n"] = det.cls.n();
            d["score"] = det.score;
            dets.push_back(std::move(d));
        }
        rec["detections"] = std::move(dets);
        lines.push_back(std::move(rec));
    }
    write_text(path, dump(json{{"schema_version", kSchemaVersion}, {"lines", std::move(lines)}}));
}

std::vector<GroundTruthLine> load_ground_truth(const std::string& path) {
    const json root = parse_file(path);
    check_schema(root, path);
    const json& lines = array_field(root, "lines", path);

    std::vector<GroundTruthLine> out;
    std::map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string where = path + ": lines[" + std::to_string(i) + "]";
        const json& rec = lines[i];
        GroundTruthLine gt;
        gt.line = line_id_from(rec, where);
        const json& arr = array_field(rec, "occurrences", where);
        for (std::size_t j = 0; j < arr.size(); ++j) {
            const std::string ow = where + ".occurrences[" + std::to_string(j) + "]";
            gt.occurrences.push_back(
                GroundTruthOccurrence{class_from(arr[j], ow), box_from(arr[j], ow)});
        }
        checked(where, [&] { gt.validate(); });
        if (!seen.emplace(gt.line.id, i).second) {
            throw IoError(IoError::Kind::Invariant,
                          where + ": duplicate line_id \"" + gt.line.id + "\"");
        }
        out.push_back(std::move(gt));
    }
    return out;
}

void save_ground_truth(const std::vector<GroundTruthLine>& lines, const std::string& path) {
    std::vector<const GroundTruthLine*> sorted;
    sorted.reserve(lines.size());
    for (const auto& line : lines) sorted.push_back(&line);
    std::sort(sorted.begin(), sorted.end(),
              [](const GroundTruthLine* a, const GroundTruthLine* b) {
                  return a->line.id < b->line.id;
              });

    json records = json::array();
    for (const GroundTruthLine* gt : sorted) {
        json rec;
        line_id_to(rec, gt->line);
        json occs = json::array();
        for (const auto& occ : gt->occurrences) {
            json o = box_to(occ.box);
            o["cls"] = occ.cls.label();
            o["n"] = occ.cls.n();
            occs.push_back(std::move(o));
        }
        rec["occurrences"] = std::move(occs);
        records.push_back(std::move(rec));
    }
    write_text(path,
               dump(json{{"schema_version", kSchemaVersion}, {"lines", std::move(records)}}));
}

Vocabulary load_vocabulary(const std::string& path) {
    const json root = parse_file(path);
    check_schema(root, path);
    const json& classes = array_field(root, "classes", path);

    Vocabulary vocab;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const std::string where = path + ": classes[" + std::to_string(i) + "]";
        NGramClass cls = class_from(classes[i], where);
        const std::int64_t count = i64_field(classes[i], "count", where);
        if (!vocab.classes.insert(cls).second) {
            throw IoError(IoError::Kind::Invariant,
                          where + ": duplicate class \"" + cls.label() + "\"");
        }
        vocab.support_counts.emplace(cls, count);
    }
    checked(path, [&] { vocab.validate(); });
    return vocab;
}

void save_vocabulary(const Vocabulary& vocab, const std::string& path) {
    json classes = json::array();
    for (const auto& cls : vocab.classes) {
        const auto it = vocab.support_counts.find(cls);
        json c{{"cls", cls.label()}, {"n", cls.n()}};
        c["count"] = it == vocab.support_counts.end() ? std::int64_t{1} : it->second;
        classes.push_back(std::move(c));
    }
    write_text(path,
               dump(json{{"schema_version", kSchemaVersion}, {"classes", std::move(classes)}}));
}

std::vector<LineResult> load_results(const std::string& path) {
    const json root = parse_file(path);
    check_schema(root, path);
    const json& lines = array_field(root, "lines", path);

    std::vector<LineResult> out;
    std::map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string where = path + ": lines[" + std::to_string(i) + "]";
        const json& rec = lines[i];
        LineResult result;
        result.line = line_id_from(rec, where);

        const json& areas = array_field(rec, "areas", where);
        for (std::size_t a = 0; a < areas.size(); ++a) {
            const std::string aw = where + ".areas[" + std::to_string(a) + "]";
            const json& arec = areas[a];
            const int area_id = int_field(arec, "area_id", aw);
            if (area_id != static_cast<int>(a)) {
                throw IoError(IoError::Kind::Invariant,
                              aw + ": area_id " + std::to_string(area_id) +
                                  " must equal the area's position " + std::to_string(a));
            }
            Area area{area_id, box_from(field(arec, "extent", aw), aw + ".extent"), {}};

            const json& options = array_field(arec, "options", aw);
            if (options.empty()) {
                throw IoError(IoError::Kind::Invariant, aw + ": area has no options");
            }
            for (std::size_t o = 0; o < options.size(); ++o) {
                const std::string ow = aw + ".options[" + std::to_string(o) + "]";
                const json& orec = options[o];
                FusedSolution sol{class_from(orec, ow), box_from(orec, ow),
                                  num_field(orec, "score", ow), {}};
                if (!(sol.score >= 0.0 && sol.score <= 1.0)) {
                    throw IoError(IoError::Kind::Invariant,
                                  ow + ": score " + std::to_string(sol.score) +
                                      " outside [0,1]");
                }
                const json& prov = array_field(orec, "provenance", ow);
                for (std::size_t p = 0; p < prov.size(); ++p) {
                    const std::string pw = ow + ".provenance[" + std::to_string(p) + "]";
                    ModalityId modality = checked(
                        pw, [&] { return ModalityId(str_field(prov[p], "modality", pw)); });
                    sol.provenance.emplace_back(std::move(modality),
                                                num_field(prov[p], "score", pw));
                }
                area.options.push_back(std::move(sol));
            }
            result.areas.push_back(std::move(area));
        }

        if (!seen.emplace(result.line.id, i).second) {
            throw IoError(IoError::Kind::Invariant,
                          where + ": duplicate line_id \"" + result.line.id + "\"");
        }
        out.push_back(std::move(result));
    }
    return out;
}

void save_results(const std::vector<LineResult>& results, const std::string& path) {
    std::vector<const LineResult*> sorted;
    sorted.reserve(results.size());
    for (const auto& result : results) sorted.push_back(&result);
    std::sort(sorted.begin(), sorted.end(),
              [](const LineResult* a, const LineResult* b) { return a->line.id < b->line.id; });

    json records = json::array();
    for (const LineResult* result : sorted) {
        json rec;
        line_id_to(rec, result->line);
        json areas = json::array();
        for (const auto& area : result->areas) {
            json arec{{"area_id", area.area_id}, {"extent", box_to(area.extent)}};
            json options = json::array();
            for (const auto& sol : area.options) {
                json orec = box_to(sol.box);
                orec["cls"] = sol.cls.label();
                orec["n"] = sol.cls.n();
                orec["score"] = sol.score;
                json prov = json::array();
                for (const auto& [modality, score] : sol.provenance) {
                    prov.push_back(json{{"modality", modality.name()}, {"score", score}});
                }
                orec["provenance"] = std::move(prov);
                options.push_back(std::move(orec));
            }
            arec["options"] = std::move(options);
            areas.push_back(std::move(arec));
        }
        rec["areas"] = std::move(areas);
        records.push_back(std::move(rec));
    }
    write_text(path,
               dump(json{{"schema_version", kSchemaVersion}, {"lines", std::move(records)}}));
}

CorpusReport load_report(const std::string& path) {
    const json root = parse_file(path);
    check_schema(root, path);

    CorpusReport report;
    report.corpus.scope = ReportScope::Corpus;
    per_k_from(field(field(root, "corpus", path), "per_k", path + ".corpus"), report.corpus,
               path + ".corpus.per_k");

    const json& lines = array_field(root, "lines", path);
    std::map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string where = path + ": lines[" + std::to_string(i) + "]";
        const json& rec = lines[i];
        LineReport line;
        line.line_id = str_field(rec, "line_id", where);
        line.report.scope = ReportScope::Line;
        per_k_from(field(rec, "per_k", where), line.report, where + ".per_k");
        const json& flags = array_field(rec, "flags", where);
        for (const auto& flag : flags) {
            if (!flag.is_string()) {
                throw IoError(IoError::Kind::Syntax, where + ".flags: entries must be strings");
            }
            line.flags.push_back(flag.get<std::string>());
        }
        if (!seen.emplace(line.line_id, i).second) {
            throw IoError(IoError::Kind::Invariant,
                          where + ": duplicate line_id \"" + line.line_id + "\"");
        }
        report.lines.push_back(std::move(line));
    }
    return report;
}

void save_report(const CorpusReport& report, const std::string& path) {
    std::vector<const LineReport*> sorted;
    sorted.reserve(report.lines.size());
    for (const auto& line : report.lines) sorted.push_back(&line);
    std::sort(sorted.begin(), sorted.end(),
              [](const LineReport* a, const LineReport* b) { return a->line_id < b->line_id; });

    json lines = json::array();
    for (const LineReport* line : sorted) {
        json rec{{"line_id", line->line_id}, {"per_k", per_k_to(line->report)}};
        json flags = json::array();
        for (const auto& flag : line->flags) flags.push_back(flag);
        rec["flags"] = std::move(flags);
        lines.push_back(std::move(rec));
    }
    json root{{"schema_version", kSchemaVersion},
              {"corpus", json{{"per_k", per_k_to(report.corpus)}}},
              {"lines", std::move(lines)}};
    write_text(path, dump(root));
}

void save_grid_csv(const std::vector<GridCell>& cells, const std::string& path) {
    if (cells.empty()) {
        throw ContractError("save_grid_csv: cell list is empty");
    }
    std::vector<int> ks;
    for (const auto& [k, m] : cells.front().report.per_k) ks.push_back(k);

    std::ostringstream csv;
    csv << "w1,w2";
    for (const auto& name : metric_names(ks)) csv << ',' << name;
    csv << '\n';
    csv << std::fixed << std::setprecision(6);
    for (const auto& cell : cells) {
        csv << cell.w1 << ',' << cell.w2;
        for (int k : ks) {
            for (MetricKind kind :
                 {MetricKind::Precision, MetricKind::Recall, MetricKind::RecallInVoc}) {
                csv << ',' << metric_value(cell.report, kind, k);
            }
        }
        csv << '\n';
    }
    write_text(path, csv.str());
}

void save_heatmap_svg(const std::vector<std::vector<double>>& matrix,
                      const std::vector<double>& w1_values, const std::vector<double>& w2_values,
                      const std::string& title, const std::string& path) {
    if (matrix.empty() || matrix.size() != w1_values.size()) {
        throw ContractError("save_heatmap_svg: matrix rows must match w1_values");
    }
    for (const auto& row : matrix) {
        if (row.size() != w2_values.size() || row.empty()) {
            throw ContractError("save_heatmap_svg: matrix columns must match w2_values");
        }
    }

    double lo = matrix[0][0];
    double hi = matrix[0][0];
    for (const auto& row : matrix) {
        for (double v : row) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    const double range = hi - lo;

    // Two-point linear color map, dark violet to yellow.
    auto color = [&](double v) {
        const double t = range > 0.0 ? (v - lo) / range : 0.5;
        const int r = static_cast<int>(std::lround(68.0 + t * (253.0 - 68.0)));
        const int g = static_cast<int>(std::lround(1.0 + t * (231.0 - 1.0)));
        const int b = static_cast<int>(std::lround(84.0 + t * (37.0 - 84.0)));
        char buf[8];
        std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
        return std::string(buf);
    };
    auto fmt = [](double v, int decimals) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
        return std::string(buf);
    };

    const int cell = 40;
    const int left = 70;
    const int top = 50;
    const auto rows = static_cast<int>(matrix.size());
    const auto cols = static_cast<int>(matrix[0].size());
    const int width = left + cols * cell + 150;
    const int height = top + rows * cell + 60;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "  <rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    svg << "  <text x=\"" << left << "\" y=\"24\" font-size=\"16\">" << title << "</text>\n";
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            const double v = matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            svg << "  <rect x=\"" << left + j * cell << "\" y=\"" << top + i * cell
                << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"" << color(v)
                << "\"><title>w1=" << fmt(w1_values[static_cast<std::size_t>(i)], 2)
                << " w2=" << fmt(w2_values[static_cast<std::size_t>(j)], 2) << " value="
                << fmt(v, 6) << "</title></rect>\n";
        }
    }
    for (int i = 0; i < rows; ++i) {
        svg << "  <text x=\"" << left - 8 << "\" y=\"" << top + i * cell + cell / 2 + 4
            << "\" text-anchor=\"end\">" << fmt(w1_values[static_cast<std::size_t>(i)], 2)
            << "</text>\n";
    }
    for (int j = 0; j < cols; ++j) {
        svg << "  <text x=\"" << left + j * cell + cell / 2 << "\" y=\""
            << top + rows * cell + 18 << "\" text-anchor=\"middle\">"
            << fmt(w2_values[static_cast<std::size_t>(j)], 2) << "</text>\n";
    }
    svg << "  <text x=\"" << left - 40 << "\" y=\"" << top + rows * cell / 2
        << "\" transform=\"rotate(-90 " << left - 40 << ' ' << top + rows * cell / 2
        << ")\" text-anchor=\"middle\">w1</text>\n";
    svg << "  <text x=\"" << left + cols * cell / 2 << "\" y=\"" << top + rows * cell + 42
        << "\" text-anchor=\"middle\">w2</text>\n";
    const int legend_x = left + cols * cell + 20;
    svg << "  <rect x=\"" << legend_x << "\" y=\"" << top << "\" width=\"18\" height=\"18\" fill=\""
        << color(hi) << "\"/>\n";
    svg << "  <text x=\"" << legend_x + 24 << "\" y=\"" << top + 14 << "\">max " << fmt(hi, 6)
        << "</text>\n";
    svg << "  <rect x=\"" << legend_x << "\" y=\"" << top + 26
        << "\" width=\"18\" height=\"18\" fill=\"" << color(lo) << "\"/>\n";
    svg << "  <text x=\"" << legend_x + 24 << "\" y=\"" << top + 40 << "\">min " << fmt(lo, 6)
        << "</text>\n";
    svg << "</svg>\n";
    write_text(path, svg.str());
}

Raster read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(IoError::Kind::File, path + ": cannot open for reading");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string data = buf.str();

    std::size_t pos = 0;
    auto next_token = [&]() -> std::string {
        while (pos < data.size()) {
            const char c = data[pos];
            if (c == '#') {
                while (pos < data.size() && data[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(c)) != 0) {
                ++pos;
            } else {
                break;
            }
        }
        const std::size_t start = pos;
        while (pos < data.size() &&
               std::isspace(static_cast<unsigned char>(data[pos])) == 0) {
            ++pos;
        }
        if (start == pos) {
            throw IoError(IoError::Kind::Syntax, path + ": truncated PGM header");
        }
        return data.substr(start, pos - start);
    };
    auto int_token = [&](const char* what) {
        const std::string tok = next_token();
        try {
            std::size_t used = 0;
            const int value = std::stoi(tok, &used);
            if (used != tok.size() || value < 0) throw std::invalid_argument(tok);
            return value;
        } catch (const std::exception&) {
            throw IoError(IoError::Kind::Syntax,
                          path + ": bad " + std::string(what) + " \"" + tok + "\"");
        }
    };

    if (next_token() != "P5") {
        throw IoError(IoError::Kind::Syntax, path + ": not a binary PGM (expected P5)");
    }
    Raster raster;
    raster.width = int_token("width");
    raster.height = int_token("height");
    const int maxval = int_token("maxval");
    if (raster.width < 1 || raster.height < 1) {
        throw IoError(IoError::Kind::Invariant, path + ": PGM dimensions must be positive");
    }
    if (maxval != 255) {
        throw IoError(IoError::Kind::Invariant, path + ": PGM maxval must be 255");
    }
    ++pos;  // single whitespace byte after the header
    const std::size_t count =
        static_cast<std::size_t>(raster.width) * static_cast<std::size_t>(raster.height);
    if (pos + count > data.size()) {
        throw IoError(IoError::Kind::Syntax, path + ": PGM pixel data truncated");
    }
    raster.pixels.assign(data.begin() + static_cast<std::ptrdiff_t>(pos),
                         data.begin() + static_cast<std::ptrdiff_t>(pos + count));
    return raster;
}

void write_pgm(const Raster& raster, const std::string& path) {
    if (raster.width < 1 || raster.height < 1 ||
        raster.pixels.size() != static_cast<std::size_t>(raster.width) *
                                    static_cast<std::size_t>(raster.height)) {
        throw ContractError("write_pgm: raster is empty or malformed");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError(IoError::Kind::File, path + ": cannot open for writing");
    }
    out << "P5\n" << raster.width << ' ' << raster.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(raster.pixels.data()),
              static_cast<std::streamsize>(raster.pixels.size()));
    out.flush();
    if (!out) {
        throw IoError(IoError::Kind::File, path + ": write failed");
    }
}

GlyphSet load_glyph_set(const std::string& dir) {
    namespace fs = std::filesystem;
    try {
        if (!fs::is_directory(dir)) {
            throw IoError(IoError::Kind::File, dir + ": not a directory");
        }
        std::vector<fs::path> subdirs;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_directory()) subdirs.push_back(entry.path());
        }
        std::sort(subdirs.begin(), subdirs.end());
        if (subdirs.empty()) {
            throw IoError(IoError::Kind::File, dir + ": no symbol subdirectories");
        }

        GlyphSet set;
        for (const auto& sub : subdirs) {
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(sub)) {
                if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
                    files.push_back(entry.path());
                }
            }
            std::sort(files.begin(), files.end());
            std::vector<Raster> variants;
            variants.reserve(files.size());
            for (const auto& file : files) {
                variants.push_back(read_pgm(file.string()));
            }
            set.glyphs.emplace(sub.filename().string(), std::move(variants));
        }
        checked(dir, [&] { set.validate(); });
        return set;
    } catch (const fs::filesystem_error& e) {
        throw IoError(IoError::Kind::File, dir + ": " + e.what());
    }
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(IoError::Kind::File, path + ": cannot open for reading");
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

}  // namespace ngspot
