#include "ngspot/core.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace ngspot {

int symbol_count(const std::string& text) {
    int count = 0;
    for (unsigned char c : text) {
        if ((c & 0xC0) != 0x80) ++count;  // skip UTF-8 continuation bytes
    }
    return count;
}

std::vector<std::string> utf8_symbols(const std::string& text) {
    std::vector<std::string> symbols;
    for (std::size_t i = 0; i < text.size();) {
        std::size_t end = i + 1;
        while (end < text.size() &&
               (static_cast<unsigned char>(text[end]) & 0xC0) == 0x80) {
            ++end;
        }
        symbols.push_back(text.substr(i, end - i));
        i = end;
    }
    return symbols;
}

NGramClass::NGramClass(std::string label) : label_(std::move(label)) {
    if (label_.empty()) throw ContractError("NGramClass: label must be non-empty");
    n_ = symbol_count(label_);
}

NGramClass::NGramClass(std::string label, int n) : NGramClass(std::move(label)) {
    if (n != n_) {
        throw ContractError("NGramClass: n=" + std::to_string(n) + " does not match label \"" +
                            label_ + "\" (" + std::to_string(n_) + " symbols)");
    }
}

ModalityId::ModalityId(std::string name) : name_(std::move(name)) {
    if (name_.empty()) throw ContractError("ModalityId: name must be non-empty");
}

Box::Box(double x0, double y0, double x1, double y1) : x0_(x0), y0_(y0), x1_(x1), y1_(y1) {
    if (!(x0 >= 0.0 && y0 >= 0.0)) throw ContractError("Box: coordinates must be non-negative");
    if (!(x0 < x1) || !(y0 < y1)) throw ContractError("Box: requires x0 < x1 and y0 < y1");
}

Box bounding_union(const Box& a, const Box& b) {
    return Box(std::min(a.x0(), b.x0()), std::min(a.y0(), b.y0()),
               std::max(a.x1(), b.x1()), std::max(a.y1(), b.y1()));
}

bool box_less(const Box& a, const Box& b) {
    return std::make_tuple(a.x0(), a.y0(), a.x1(), a.y1()) <
           std::make_tuple(b.x0(), b.y0(), b.x1(), b.y1());
}

void Detection::validate() const {
    if (!(score >= 0.0 && score <= 1.0)) {
        throw ContractError("Detection: score " + std::to_string(score) + " outside [0,1]");
    }
}

void QueryLineId::validate() const {
    if (id.empty()) throw ContractError("QueryLineId: id must be non-empty");
    if (width <= 0 || height <= 0) {
        throw ContractError("QueryLineId \"" + id + "\": width and height must be positive");
    }
}

void FusionConfig::validate() const {
    auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
    if (!in(w1, 0.0, 1.0) || !in(w2, 0.0, 1.0)) {
        throw ContractError("FusionConfig: weights must lie in [0,1]");
    }
    if (!(delta > 0.0 && delta <= 1.0)) throw ContractError("FusionConfig: delta must lie in (0,1]");
    if (!(tau_overlap > 0.0 && tau_overlap <= 1.0)) {
        throw ContractError("FusionConfig: tau_overlap must lie in (0,1]");
    }
    if (!(tau_match > 0.0 && tau_match <= 1.0)) {
        throw ContractError("FusionConfig: tau_match must lie in (0,1]");
    }
    if (!(epsilon_prune > 0.0)) throw ContractError("FusionConfig: epsilon_prune must be positive");
}

void GroundTruthLine::validate() const {
    line.validate();
    for (std::size_t i = 0; i < occurrences.size(); ++i) {
        const Box& b = occurrences[i].box;
        if (b.x1() > line.width || b.y1() > line.height) {
            throw ContractError("GroundTruthLine \"" + line.id + "\": occurrence " +
                                std::to_string(i) + " exceeds line bounds");
        }
    }
}

void Vocabulary::validate() const {
    for (const auto& [cls, count] : support_counts) {
        if (classes.count(cls) == 0) {
            throw ContractError("Vocabulary: support count for \"" + cls.label() +
                                "\" has no matching class");
        }
        if (count < 1) {
            throw ContractError("Vocabulary: support count for \"" + cls.label() +
                                "\" must be >= 1");
        }
    }
}

double iou(const Box& a, const Box& b) {
    const double ix = std::max(0.0, std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0()));
    const double iy = std::max(0.0, std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0()));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return inter / uni;
}

double horizontal_overlap(const Box& a, const Box& b) {
    const double inter = std::max(0.0, std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0()));
    const double uni = a.width() + b.width() - inter;
    return inter / uni;
}

double overlap(const Box& a, const Box& b, OverlapMeasure measure) {
    return measure == OverlapMeasure::Horizontal ? horizontal_overlap(a, b) : iou(a, b);
}

}  // namespace ngspot
