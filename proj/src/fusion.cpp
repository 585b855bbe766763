#include "ngspot/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string_view>

#include "parallel_for.hpp"

namespace ngspot {

namespace {

const ModalityId* check_uniform_modality(const std::vector<Detection>& ys, const char* branch) {
    const ModalityId* id = nullptr;
    for (const Detection& d : ys) {
        if (id == nullptr) {
            id = &d.modality;
        } else if (*id != d.modality) {
            throw ContractError(std::string("weighted_concat: ") + branch +
                                " mixes modalities \"" + id->name() + "\" and \"" +
                                d.modality.name() + "\"");
        }
    }
    return id;
}

// Weighting stage shared by weighted_concat and fuse_line; keeps the raw
// pre-weight score in the provenance.
std::vector<FusedSolution> weighted_solutions(const std::vector<Detection>& y1,
                                              const std::vector<Detection>& y2,
                                              const FusionConfig& cfg) {
    const ModalityId* m1 = check_uniform_modality(y1, "branch 1");
    const ModalityId* m2 = check_uniform_modality(y2, "branch 2");
    if (m1 != nullptr && m2 != nullptr && *m1 == *m2) {
        throw ContractError("weighted_concat: branches carry the same modality \"" + m1->name() +
                            "\"");
    }
    std::vector<FusedSolution> out;
    out.reserve(y1.size() + y2.size());
    auto add = [&](const Detection& d, double w) {
        d.validate();
        const double s = w * d.score;
        if (s < cfg.epsilon_prune) return;
        out.push_back(FusedSolution{d.cls, d.box, s, {{d.modality, d.score}}});
    };
    for (const Detection& d : y1) add(d, cfg.w1);
    for (const Detection& d : y2) add(d, cfg.w2);
    return out;
}

// Merge step used inside a same-class component. Component membership is the
// license to merge, so no pairwise overlap check here; the public fuse_pair
// enforces it. A pair whose scores were both floored to zero by earlier
// redistribution merges with zero gain instead of tripping Eq. 2's 0/0.
std::pair<FusedSolution, double> fuse_members(const FusedSolution& a, const FusedSolution& b,
                                              double delta) {
    FusedSolution fused = a;
    fused.provenance.insert(fused.provenance.end(), b.provenance.begin(), b.provenance.end());
    if (a.score == b.score) {
        fused.box = bounding_union(a.box, b.box);
    } else {
        fused.box = a.score > b.score ? a.box : b.box;
    }
    const double g =
        (a.score == 0.0 && b.score == 0.0) ? 0.0 : gain(a.score, b.score, delta);
    const double raw = std::max(a.score, b.score) + g;
    if (raw <= 1.0) {
        fused.score = raw;
        return {fused, 0.0};
    }
    fused.score = 1.0;
    return {fused, raw - 1.0};
}

struct DisjointSets {
    std::vector<int> parent;

    explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }

    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

std::vector<Detection> weighted_concat(const std::vector<Detection>& y1,
                                       const std::vector<Detection>& y2,
                                       const FusionConfig& cfg) {
    cfg.validate();
    std::vector<Detection> out;
    for (const FusedSolution& s : weighted_solutions(y1, y2, cfg)) {
        out.push_back(Detection{s.cls, s.box, s.score, s.provenance.front().first});
    }
    return out;
}

double gain(double s1, double s2, double delta) {
    if (!(s1 >= 0.0 && s1 <= 1.0) || !(s2 >= 0.0 && s2 <= 1.0)) {
        throw ContractError("gain: scores must lie in [0,1]");
    }
    if (!(delta > 0.0 && delta <= 1.0)) throw ContractError("gain: delta must lie in (0,1]");
    if (s1 == 0.0 && s2 == 0.0) {
        throw ContractError("gain: undefined for two zero scores");
    }
    return delta * (1.0 - std::abs(s1 - s2) / std::max(s1, s2));
}

std::pair<FusedSolution, double> fuse_pair(const FusedSolution& a, const FusedSolution& b,
                                           const FusionConfig& cfg) {
    cfg.validate();
    if (a.cls != b.cls) {
        throw ContractError("fuse_pair: class mismatch (\"" + a.cls.label() + "\" vs \"" +
                            b.cls.label() + "\")");
    }
    if (overlap(a.box, b.box, cfg.overlap_measure) < cfg.tau_overlap) {
        throw ContractError("fuse_pair: solutions do not overlap at tau_overlap");
    }
    if (a.score == 0.0 && b.score == 0.0) {
        throw ContractError("fuse_pair: undefined for two zero scores");
    }
    if (a.provenance.empty() || b.provenance.empty()) {
        throw ContractError("fuse_pair: solutions must carry provenance");
    }
    return fuse_members(a, b, cfg.delta);
}

std::vector<FusedSolution> redistribute_excess(const std::vector<FusedSolution>& members,
                                               const FusedSolution& fused, double excess) {
    if (excess < 0.0) throw ContractError("redistribute_excess: excess must be non-negative");
    std::vector<FusedSolution> out = members;
    for (FusedSolution& m : out) {
        if (m == fused) continue;
        m.score = std::max(0.0, m.score - excess);
    }
    return out;
}

LineResult fuse_line(const QueryLineId& line, const std::vector<Detection>& y1,
                     const std::vector<Detection>& y2, const FusionConfig& cfg) {
    cfg.validate();
    line.validate();
    std::vector<FusedSolution> sols = weighted_solutions(y1, y2, cfg);
    const int n = static_cast<int>(sols.size());
    if (n == 0) return LineResult{line, {}};

    // Same-class connected components under overlap >= tau_overlap.
    std::map<std::string_view, std::vector<int>> by_class;
    for (int i = 0; i < n; ++i) by_class[sols[i].cls.label()].push_back(i);
    DisjointSets class_sets(n);
    for (const auto& [label, idx] : by_class) {
        for (std::size_t a = 0; a < idx.size(); ++a) {
            for (std::size_t b = a + 1; b < idx.size(); ++b) {
                if (overlap(sols[idx[a]].box, sols[idx[b]].box, cfg.overlap_measure) >=
                    cfg.tau_overlap) {
                    class_sets.unite(idx[a], idx[b]);
                }
            }
        }
    }

    struct Component {
        double max_score = 0.0;
        std::string_view label;
        int min_index = 0;
        std::vector<int> members;
    };
    std::map<int, Component> by_root;
    for (int i = 0; i < n; ++i) {
        Component& c = by_root[class_sets.find(i)];
        if (c.members.empty()) {
            c.label = sols[i].cls.label();
            c.min_index = i;
        }
        c.max_score = std::max(c.max_score, sols[i].score);
        c.members.push_back(i);
    }
    std::vector<Component> components;
    components.reserve(by_root.size());
    for (auto& [root, c] : by_root) components.push_back(std::move(c));
    std::sort(components.begin(), components.end(), [](const Component& a, const Component& b) {
        if (a.max_score != b.max_score) return a.max_score > b.max_score;
        if (a.label != b.label) return a.label < b.label;
        return a.min_index < b.min_index;
    });

    // Iterative pairwise fusion, components in descending max-score order.
    // Clamp excess is redistributed over every other live solution that
    // overlaps the fused box, across classes.
    std::vector<char> alive(sols.size(), 1);
    for (Component& comp : components) {
        std::vector<int>& members = comp.members;
        while (members.size() >= 2) {
            auto better = [&](int i, int j) {
                if (sols[i].score != sols[j].score) return sols[i].score > sols[j].score;
                return i < j;
            };
            std::size_t first = 0, second = 1;
            if (better(members[1], members[0])) std::swap(first, second);
            for (std::size_t m = 2; m < members.size(); ++m) {
                if (better(members[m], members[first])) {
                    second = first;
                    first = m;
                } else if (better(members[m], members[second])) {
                    second = m;
                }
            }
            const int ia = members[first];
            const int ib = members[second];
            auto [fused, excess] = fuse_members(sols[ia], sols[ib], cfg.delta);
            sols[ia] = std::move(fused);  // ia's slot now holds the fused solution
            alive[ib] = 0;
            members.erase(members.begin() + static_cast<std::ptrdiff_t>(second));
            if (excess > 0.0) {
                for (int k = 0; k < n; ++k) {
                    if (!alive[k] || k == ia) continue;
                    if (overlap(sols[k].box, sols[ia].box, cfg.overlap_measure) >=
                        cfg.tau_overlap) {
                        sols[k].score = std::max(0.0, sols[k].score - excess);
                    }
                }
            }
        }
    }

    // Areas: connected components over all survivors, any class.
    std::vector<int> survivors;
    for (int i = 0; i < n; ++i) {
        if (alive[i]) survivors.push_back(i);
    }
    const int ns = static_cast<int>(survivors.size());
    DisjointSets area_sets(ns);
    for (int a = 0; a < ns; ++a) {
        for (int b = a + 1; b < ns; ++b) {
            if (overlap(sols[survivors[a]].box, sols[survivors[b]].box, cfg.overlap_measure) >=
                cfg.tau_overlap) {
                area_sets.unite(a, b);
            }
        }
    }
    struct AreaBuild {
        std::vector<int> members;  // indices into sols
        int min_index;
    };
    std::map<int, AreaBuild> area_roots;
    for (int a = 0; a < ns; ++a) {
        AreaBuild& ab = area_roots[area_sets.find(a)];
        if (ab.members.empty()) ab.min_index = survivors[a];
        ab.members.push_back(survivors[a]);
    }

    std::vector<std::pair<Box, Area>> built;  // extent + area, for ordering
    for (auto& [root, ab] : area_roots) {
        Box extent = sols[ab.members.front()].box;
        for (int idx : ab.members) extent = bounding_union(extent, sols[idx].box);
        std::vector<FusedSolution> options;
        options.reserve(ab.members.size());
        for (int idx : ab.members) options.push_back(sols[idx]);
        std::sort(options.begin(), options.end(),
                  [](const FusedSolution& a, const FusedSolution& b) {
                      if (a.score != b.score) return a.score > b.score;
                      if (a.cls.label() != b.cls.label()) return a.cls.label() < b.cls.label();
                      return box_less(a.box, b.box);
                  });
        // One option per class: when a cross-class bridge joins two same-class
        // solutions that were never fused, keep the best-ranked one.
        std::set<std::string> seen;
        std::vector<FusedSolution> unique;
        for (FusedSolution& opt : options) {
            if (seen.insert(opt.cls.label()).second) unique.push_back(std::move(opt));
        }
        built.emplace_back(extent, Area{0, extent, std::move(unique)});
        built.back().second.area_id = ab.min_index;  // provisional, for ordering
    }
    std::sort(built.begin(), built.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return box_less(a.first, b.first);
        return a.second.area_id < b.second.area_id;
    });

    LineResult result{line, {}};
    result.areas.reserve(built.size());
    for (std::size_t i = 0; i < built.size(); ++i) {
        built[i].second.area_id = static_cast<int>(i);
        result.areas.push_back(std::move(built[i].second));
    }
    return result;
}

namespace {

std::vector<LineResult> fuse_corpus_impl(const DetectionCorpus& branch1,
                                         const DetectionCorpus& branch2, const FusionConfig& cfg,
                                         int jobs, bool parallel) {
    cfg.validate();
    struct Task {
        QueryLineId line;
        const std::vector<Detection>* y1;
        const std::vector<Detection>* y2;
    };
    static const std::vector<Detection> kEmpty;
    std::vector<Task> tasks;
    auto it1 = branch1.begin();
    auto it2 = branch2.begin();
    while (it1 != branch1.end() || it2 != branch2.end()) {
        if (it2 == branch2.end() || (it1 != branch1.end() && it1->first < it2->first)) {
            tasks.push_back({it1->second.line, &it1->second.detections, &kEmpty});
            ++it1;
        } else if (it1 == branch1.end() || it2->first < it1->first) {
            tasks.push_back({it2->second.line, &kEmpty, &it2->second.detections});
            ++it2;
        } else {
            if (!(it1->second.line == it2->second.line)) {
                throw ContractError("fuse_corpus: line \"" + it1->first +
                                    "\" has mismatching dimensions across branches");
            }
            tasks.push_back({it1->second.line, &it1->second.detections, &it2->second.detections});
            ++it1;
            ++it2;
        }
    }

    std::vector<LineResult> results(tasks.size(), LineResult{QueryLineId{}, {}});
    auto body = [&](std::int64_t i) {
        const Task& t = tasks[static_cast<std::size_t>(i)];
        results[static_cast<std::size_t>(i)] = fuse_line(t.line, *t.y1, *t.y2, cfg);
    };
    if (parallel) {
        detail::parallel_index_for(static_cast<std::int64_t>(tasks.size()), jobs, body);
    } else {
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(tasks.size()); ++i) body(i);
    }
    return results;
}

}  // namespace

std::vector<LineResult> fuse_corpus(const DetectionCorpus& branch1, const DetectionCorpus& branch2,
                                    const FusionConfig& cfg, int jobs) {
    return fuse_corpus_impl(branch1, branch2, cfg, jobs, true);
}

std::vector<LineResult> fuse_corpus_serial(const DetectionCorpus& branch1,
                                           const DetectionCorpus& branch2,
                                           const FusionConfig& cfg) {
    return fuse_corpus_impl(branch1, branch2, cfg, 0, false);
}

}  // namespace ngspot
