#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ngspot {

/// Thrown when an operation's input contract is violated.
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An n-gram class: the retrieval unit of the toolkit. `n` is the number of
/// symbols (UTF-8 code points) in the label and is derived from it.
class NGramClass {
public:
    explicit NGramClass(std::string label);
    NGramClass(std::string label, int n);  // n must match the label

    const std::string& label() const { return label_; }
    int n() const { return n_; }

    friend bool operator==(const NGramClass& a, const NGramClass& b) {
        return a.label_ == b.label_;
    }
    friend bool operator!=(const NGramClass& a, const NGramClass& b) { return !(a == b); }
    friend bool operator<(const NGramClass& a, const NGramClass& b) {
        return a.label_ < b.label_;
    }

private:
    std::string label_;
    int n_;
};

/// Counts UTF-8 code points; plain ASCII text counts bytes.
int symbol_count(const std::string& text);

/// Splits text into UTF-8 code points, one string per symbol.
std::vector<std::string> utf8_symbols(const std::string& text);

/// Identifier of one feature-space branch ("visual", "phoc", ...).
class ModalityId {
public:
    explicit ModalityId(std::string name);

    const std::string& name() const { return name_; }

    friend bool operator==(const ModalityId& a, const ModalityId& b) {
        return a.name_ == b.name_;
    }
    friend bool operator!=(const ModalityId& a, const ModalityId& b) { return !(a == b); }
    friend bool operator<(const ModalityId& a, const ModalityId& b) {
        return a.name_ < b.name_;
    }

private:
    std::string name_;
};

/// Axis-aligned box in pixel coordinates, inclusive-exclusive.
/// Invalid extents (x0 >= x1, y0 >= y1, negative coordinates) are rejected
/// at construction.
class Box {
public:
    Box(double x0, double y0, double x1, double y1);

    double x0() const { return x0_; }
    double y0() const { return y0_; }
    double x1() const { return x1_; }
    double y1() const { return y1_; }

    double width() const { return x1_ - x0_; }
    double height() const { return y1_ - y0_; }
    double area() const { return width() * height(); }

    friend bool operator==(const Box& a, const Box& b) {
        return a.x0_ == b.x0_ && a.y0_ == b.y0_ && a.x1_ == b.x1_ && a.y1_ == b.y1_;
    }
    friend bool operator!=(const Box& a, const Box& b) { return !(a == b); }

private:
    double x0_, y0_, x1_, y1_;
};

/// Bounding box of two boxes.
Box bounding_union(const Box& a, const Box& b);

/// Deterministic total order on boxes by (x0, y0, x1, y1).
bool box_less(const Box& a, const Box& b);

/// One candidate interpretation proposed by a detector branch.
struct Detection {
    NGramClass cls;
    Box box;
    double score;  // in [0,1]
    ModalityId modality;

    void validate() const;
};

/// Identity and pixel dimensions of a query line image.
struct QueryLineId {
    std::string id;
    int width = 0;
    int height = 0;

    void validate() const;

    friend bool operator==(const QueryLineId& a, const QueryLineId& b) {
        return a.id == b.id && a.width == b.width && a.height == b.height;
    }
};

enum class OverlapMeasure {
    Horizontal,  // 1-D IoU of the boxes' x-intervals (default for line images)
    Iou,         // full 2-D intersection-over-union
};

/// How retrieved_ngrams is counted when computing precision.
enum class RetrievedCount {
    Areas,    // one proposal region counted once (default)
    Options,  // every ranked option counted
};

/// Knobs shared by the fusion and evaluation stages.
struct FusionConfig {
    double w1 = 1.0;             // branch-1 weight, in [0,1]
    double w2 = 1.0;             // branch-2 weight, in [0,1]
    double delta = 0.1;          // maximum gain increment, in (0,1]
    double tau_overlap = 0.5;    // same-class fusion overlap threshold, in (0,1]
    double tau_match = 0.5;      // ground-truth matching overlap threshold, in (0,1]
    double epsilon_prune = 1e-9; // weighted-score prune floor
    OverlapMeasure overlap_measure = OverlapMeasure::Horizontal;
    RetrievedCount retrieved_count = RetrievedCount::Areas;

    void validate() const;
};

/// An annotated n-gram occurrence inside a line.
struct GroundTruthOccurrence {
    NGramClass cls;
    Box box;
};

struct GroundTruthLine {
    QueryLineId line;
    std::vector<GroundTruthOccurrence> occurrences;

    void validate() const;  // also checks boxes against line bounds
};

/// The set of n-gram classes the system can search for, with the number of
/// support items backing each class.
struct Vocabulary {
    std::set<NGramClass> classes;
    std::map<NGramClass, std::int64_t> support_counts;

    bool contains(const NGramClass& cls) const { return classes.count(cls) != 0; }
    void validate() const;
};

/// All detections of one branch for one line.
struct LineDetections {
    QueryLineId line;
    ModalityId modality;
    std::vector<Detection> detections;
};

/// Per-line detections of one branch, keyed by line id.
using DetectionCorpus = std::map<std::string, LineDetections>;

/// 2-D intersection-over-union of two boxes, in [0,1].
double iou(const Box& a, const Box& b);

/// 1-D IoU of the boxes' [x0,x1) intervals, ignoring y.
double horizontal_overlap(const Box& a, const Box& b);

/// Dispatches to iou or horizontal_overlap.
double overlap(const Box& a, const Box& b, OverlapMeasure measure);

}  // namespace ngspot
