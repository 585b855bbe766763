#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ngspot/fusion.hpp"
#include "ngspot/rng.hpp"
#include "test_util.hpp"

using namespace ngspot;
using testutil::det;
using testutil::sol;

namespace {

const QueryLineId kLine{"line_0", 400, 40};

FusionConfig config(double w1 = 1.0, double w2 = 1.0) {
    FusionConfig cfg;
    cfg.w1 = w1;
    cfg.w2 = w2;
    return cfg;
}

std::vector<Detection> branch2(std::vector<Detection> dets) {
    for (Detection& d : dets) d.modality = ModalityId("phoc");
    return dets;
}

}  // namespace

TEST_CASE("weighted_concat scales, prunes, and keeps branch order") {
    const auto y1 = std::vector<Detection>{det("ab", 0, 50, 0.8)};
    const auto y2 = branch2({det("cd", 60, 110, 0.6)});

    SUBCASE("degenerate weight prunes the whole second branch") {
        const auto out = weighted_concat(y1, y2, config(1.0, 0.0));
        REQUIRE(out.size() == 1);
        CHECK(out[0].cls == NGramClass("ab"));
        CHECK(out[0].score == 0.8);
    }
    SUBCASE("uniform halving") {
        const auto out = weighted_concat(y1, y2, config(0.5, 0.5));
        REQUIRE(out.size() == 2);
        CHECK(out[0].score == doctest::Approx(0.4));
        CHECK(out[1].score == doctest::Approx(0.3));
    }
    SUBCASE("same class from both branches, branch 1 first") {
        const auto out = weighted_concat({det("ab", 0, 50, 0.9)},
                                         branch2({det("ab", 0, 50, 0.9)}), config(0.7, 0.3));
        REQUIRE(out.size() == 2);
        CHECK(out[0].score == doctest::Approx(0.63));
        CHECK(out[0].modality == ModalityId("visual"));
        CHECK(out[1].score == doctest::Approx(0.27));
        CHECK(out[1].modality == ModalityId("phoc"));
    }
    SUBCASE("mixed modalities within one branch are rejected") {
        const std::vector<Detection> mixed{det("ab", 0, 50, 0.8, "visual"),
                                           det("cd", 60, 110, 0.6, "phoc")};
        CHECK_THROWS_AS(weighted_concat(mixed, {}, config()), ContractError);
    }
    SUBCASE("identical modality across branches is rejected") {
        CHECK_THROWS_AS(weighted_concat(y1, {det("cd", 60, 110, 0.6)}, config()), ContractError);
    }
}

TEST_CASE("gain hand values") {
    CHECK(gain(0.5, 0.5, 0.1) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(gain(0.9, 0.0, 0.1) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(gain(0.8, 0.6, 0.1) == doctest::Approx(0.075).epsilon(1e-12));
    CHECK_THROWS_AS(gain(0.0, 0.0, 0.1), ContractError);
    CHECK_THROWS_AS(gain(0.5, 0.5, 0.0), ContractError);
    CHECK_THROWS_AS(gain(1.5, 0.5, 0.1), ContractError);
}

TEST_CASE("gain bounds, symmetry, and equality condition over random triples") {
    Rng rng(123);
    for (int i = 0; i < 20000; ++i) {
        const double s1 = rng.uniform_double();
        const double s2 = rng.uniform_double();
        const double delta = rng.uniform_real(1e-6, 1.0);
        if (s1 == 0.0 && s2 == 0.0) continue;
        const double g = gain(s1, s2, delta);
        CHECK(g >= 0.0);
        CHECK(g <= delta);
        CHECK(g == gain(s2, s1, delta));
        if (s1 == s2) CHECK(g == delta);
        if (g == delta) CHECK(s1 == s2);
    }
}

TEST_CASE("gain is non-increasing in the score distance at fixed max") {
    Rng rng(321);
    for (int i = 0; i < 5000; ++i) {
        const double hi = rng.uniform_real(0.1, 1.0);
        double a = rng.uniform_real(0.0, hi);
        double b = rng.uniform_real(0.0, hi);
        if (std::abs(hi - a) > std::abs(hi - b)) std::swap(a, b);
        // |hi-a| <= |hi-b|, so the (hi, a) pair is at least as close.
        CHECK(gain(hi, a, 0.2) >= gain(hi, b, 0.2));
    }
}

TEST_CASE("fuse_pair hand values and clamping") {
    const Box box(0, 0, 50, 40);
    FusionConfig cfg = config();

    SUBCASE("equal scores gain the full delta") {
        const auto [fused, excess] = fuse_pair(sol("ab", box, 0.5), sol("ab", box, 0.5, "phoc"), cfg);
        CHECK(fused.score == doctest::Approx(0.6).epsilon(1e-12));
        CHECK(excess == 0.0);
        CHECK(fused.provenance.size() == 2);
    }
    SUBCASE("unequal scores") {
        const auto [fused, excess] = fuse_pair(sol("ab", box, 0.8), sol("ab", box, 0.6, "phoc"), cfg);
        CHECK(fused.score == doctest::Approx(0.875).epsilon(1e-12));
        CHECK(excess == 0.0);
    }
    SUBCASE("clamp returns the exact overshoot") {
        const auto [fused, excess] = fuse_pair(sol("ab", box, 0.98), sol("ab", box, 0.94, "phoc"), cfg);
        CHECK(fused.score == 1.0);
        // raw = 0.98 + 0.1 * (1 - 0.04 / 0.98)
        const double raw = 0.98 + 0.1 * (1.0 - 0.04 / 0.98);
        CHECK(excess == doctest::Approx(raw - 1.0).epsilon(1e-12));
        CHECK(excess == doctest::Approx(0.0759183673469388).epsilon(1e-12));
    }
    SUBCASE("box follows the higher score; exact tie takes the union") {
        const Box left(0, 0, 40, 40);
        const Box right(10, 0, 50, 40);
        const auto [hi, e1] = fuse_pair(sol("ab", left, 0.9), sol("ab", right, 0.5, "phoc"), cfg);
        CHECK(hi.box == left);
        const auto [tie, e2] = fuse_pair(sol("ab", left, 0.7), sol("ab", right, 0.7, "phoc"), cfg);
        CHECK(tie.box == Box(0, 0, 50, 40));
        CHECK(e1 == 0.0);
        CHECK(e2 == 0.0);
    }
    SUBCASE("contract violations") {
        CHECK_THROWS_AS(fuse_pair(sol("ab", box, 0.5), sol("cd", box, 0.5, "phoc"), cfg),
                        ContractError);
        CHECK_THROWS_AS(
            fuse_pair(sol("ab", Box(0, 0, 40, 40), 0.5), sol("ab", Box(100, 0, 140, 40), 0.5, "phoc"),
                      cfg),
            ContractError);
        CHECK_THROWS_AS(fuse_pair(sol("ab", box, 0.0), sol("ab", box, 0.0, "phoc"), cfg),
                        ContractError);
    }
}

TEST_CASE("fuse_pair score bounds over random inputs") {
    Rng rng(7);
    const Box box(0, 0, 50, 40);
    FusionConfig cfg = config();
    for (int i = 0; i < 20000; ++i) {
        const double s1 = rng.uniform_real(0.001, 1.0);
        const double s2 = rng.uniform_real(0.001, 1.0);
        cfg.delta = rng.uniform_real(0.01, 1.0);
        const auto [fused, excess] = fuse_pair(sol("ab", box, s1), sol("ab", box, s2, "phoc"), cfg);
        const double hi = std::max(s1, s2);
        CHECK(fused.score >= hi);
        CHECK(fused.score <= std::min(hi + cfg.delta, 1.0));
        CHECK(excess >= 0.0);
        if (excess > 0.0) {
            // The clamp removes exactly the overshoot.
            CHECK(hi + gain(s1, s2, cfg.delta) - 1.0 == doctest::Approx(excess).epsilon(1e-15));
            CHECK(fused.score == 1.0);
        }
    }
}

TEST_CASE("redistribute_excess subtracts with a floor and spares the fused entry") {
    const Box box(0, 0, 50, 40);
    const FusedSolution fused = sol("ab", box, 1.0);
    const std::vector<FusedSolution> members{fused, sol("cd", box, 0.30), sol("ef", box, 0.05)};

    SUBCASE("zero excess is the identity") {
        CHECK(redistribute_excess(members, fused, 0.0) == members);
    }
    SUBCASE("subtraction floors at zero") {
        const auto out = redistribute_excess(members, fused, 0.0759);
        REQUIRE(out.size() == 3);
        CHECK(out[0].score == 1.0);
        CHECK(out[1].score == doctest::Approx(0.2241).epsilon(1e-12));
        CHECK(out[2].score == 0.0);
    }
    SUBCASE("empty member list") {
        CHECK(redistribute_excess({}, fused, 0.5).empty());
    }
}

TEST_CASE("fuse_line single branch single detection") {
    const auto result = fuse_line(kLine, {det("ab", 0, 50, 0.8)}, {}, config(0.5, 1.0));
    REQUIRE(result.areas.size() == 1);
    const Area& area = result.areas[0];
    CHECK(area.area_id == 0);
    CHECK(area.extent == Box(0, 0, 50, 40));
    REQUIRE(area.options.size() == 1);
    CHECK(area.options[0].score == doctest::Approx(0.4));
    CHECK(area.options[0].provenance.size() == 1);
    CHECK(area.options[0].provenance[0].second == 0.8);  // raw score preserved
}

TEST_CASE("two-branch agreement beats both inputs") {
    Rng rng(55);
    for (int i = 0; i < 200; ++i) {
        const double s1 = rng.uniform_real(0.1, 0.9);
        const double s2 = rng.uniform_real(0.1, 0.9);
        const auto result = fuse_line(kLine, {det("the", 0, 50, s1)},
                                      branch2({det("the", 2, 52, s2)}), config());
        REQUIRE(result.areas.size() == 1);
        REQUIRE(result.areas[0].options.size() == 1);
        const FusedSolution& opt = result.areas[0].options[0];
        CHECK(opt.score > std::max(s1, s2));
        CHECK(opt.provenance.size() == 2);
    }
}

TEST_CASE("three-way same-class chain fuses pairwise from the top") {
    // Equal scores 0.5: first fusion gives 0.6, the second fuses 0.6 with 0.5
    // for 0.6 + 0.1*(1 - 0.1/0.6).
    const auto result =
        fuse_line(kLine, {det("abc", 0, 50, 0.5), det("abc", 1, 51, 0.5)},
                  branch2({det("abc", 2, 52, 0.5)}), config());
    REQUIRE(result.areas.size() == 1);
    REQUIRE(result.areas[0].options.size() == 1);
    CHECK(result.areas[0].options[0].score ==
          doctest::Approx(0.6833333333333333).epsilon(1e-12));
    CHECK(result.areas[0].options[0].provenance.size() == 3);
}

TEST_CASE("clamp excess is taken from overlapping interpretations") {
    // Two "ab" proposals fuse to 1.0 with excess ~0.0759; the overlapping
    // "cd" option must drop by exactly that amount.
    const auto result = fuse_line(kLine, {det("ab", 0, 50, 0.98), det("cd", 0, 50, 0.30)},
                                  branch2({det("ab", 0, 50, 0.94)}), config());
    REQUIRE(result.areas.size() == 1);
    REQUIRE(result.areas[0].options.size() == 2);
    CHECK(result.areas[0].options[0].cls == NGramClass("ab"));
    CHECK(result.areas[0].options[0].score == 1.0);
    CHECK(result.areas[0].options[1].cls == NGramClass("cd"));
    const double excess = 0.98 + 0.1 * (1.0 - 0.04 / 0.98) - 1.0;
    CHECK(result.areas[0].options[1].score == doctest::Approx(0.30 - excess).epsilon(1e-12));
}

TEST_CASE("non-overlapping interpretations keep their scores through a clamp") {
    const auto result = fuse_line(kLine, {det("ab", 0, 50, 0.98), det("cd", 200, 250, 0.30)},
                                  branch2({det("ab", 0, 50, 0.94)}), config());
    REQUIRE(result.areas.size() == 2);
    CHECK(result.areas[1].options[0].score == doctest::Approx(0.30));
}

TEST_CASE("degenerate weights reduce to the single branch") {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Detection> y1, y2;
        const int n1 = static_cast<int>(rng.uniform_int(0, 6));
        const int n2 = static_cast<int>(rng.uniform_int(0, 6));
        auto random_det = [&](const std::string& modality) {
            const double x0 = rng.uniform_real(0, 300);
            const std::string cls(1, static_cast<char>('a' + rng.uniform_int(0, 3)));
            return det(cls + cls, x0, x0 + rng.uniform_real(10, 80), rng.uniform_real(0.05, 1.0),
                       modality);
        };
        for (int i = 0; i < n1; ++i) y1.push_back(random_det("visual"));
        for (int i = 0; i < n2; ++i) y2.push_back(random_det("phoc"));

        const auto both = fuse_line(kLine, y1, y2, config(1.0, 0.0));
        const auto alone = fuse_line(kLine, y1, {}, config(1.0, 1.0));
        REQUIRE(both.areas.size() == alone.areas.size());
        for (std::size_t a = 0; a < both.areas.size(); ++a) {
            CHECK(both.areas[a].extent == alone.areas[a].extent);
            REQUIRE(both.areas[a].options.size() == alone.areas[a].options.size());
            for (std::size_t o = 0; o < both.areas[a].options.size(); ++o) {
                CHECK(both.areas[a].options[o] == alone.areas[a].options[o]);
            }
        }
    }
}

TEST_CASE("area options are sorted, unique per class, and in range") {
    Rng rng(88);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Detection> y1, y2;
        for (int i = 0; i < 8; ++i) {
            const double x0 = rng.uniform_real(0, 300);
            const std::string cls(1, static_cast<char>('a' + rng.uniform_int(0, 2)));
            auto d = det(cls, x0, x0 + rng.uniform_real(10, 100), rng.uniform_real(0.0, 1.0));
            if (i % 2 == 0) {
                y1.push_back(d);
            } else {
                d.modality = ModalityId("phoc");
                y2.push_back(d);
            }
        }
        const auto result = fuse_line(kLine, y1, y2, config(0.9, 0.8));
        for (const Area& area : result.areas) {
            std::set<std::string> classes;
            for (std::size_t o = 0; o < area.options.size(); ++o) {
                const FusedSolution& opt = area.options[o];
                CHECK(opt.score >= 0.0);
                CHECK(opt.score <= 1.0);
                CHECK(classes.insert(opt.cls.label()).second);  // one option per class
                if (o > 0) CHECK(area.options[o - 1].score >= opt.score);
                CHECK(opt.box.x0() >= area.extent.x0());
                CHECK(opt.box.x1() <= area.extent.x1());
            }
        }
    }
}

TEST_CASE("uniform weight scaling preserves option ranking without fusion") {
    // Distinct classes at partially overlapping boxes: no same-class fusion,
    // no clamping, so scaling both weights must not reorder options.
    const std::vector<Detection> y1{det("ab", 0, 50, 0.9), det("cd", 10, 60, 0.7)};
    const auto y2 = branch2({det("ef", 20, 70, 0.8), det("gh", 30, 80, 0.35)});
    std::vector<std::vector<std::string>> rankings;
    for (const double c : {1.0, 0.5, 0.25}) {
        const auto result = fuse_line(kLine, y1, y2, config(0.8 * c, 0.6 * c));
        REQUIRE(result.areas.size() == 1);
        std::vector<std::string> order;
        for (const auto& opt : result.areas[0].options) order.push_back(opt.cls.label());
        rankings.push_back(order);
    }
    CHECK(rankings[0] == rankings[1]);
    CHECK(rankings[0] == rankings[2]);
}

TEST_CASE("fuse_corpus aligns by id and matches the serial reference") {
    Rng rng(99);
    DetectionCorpus a, b;
    for (int i = 0; i < 20; ++i) {
        const std::string id = "line_" + std::to_string(100 + i);
        const QueryLineId line{id, 400, 40};
        LineDetections da{line, ModalityId("visual"), {}};
        LineDetections db{line, ModalityId("phoc"), {}};
        for (int d = 0; d < 6; ++d) {
            const double x0 = rng.uniform_real(0, 300);
            const std::string cls(1, static_cast<char>('a' + rng.uniform_int(0, 4)));
            da.detections.push_back(det(cls, x0, x0 + 40, rng.uniform_real(0.1, 1.0)));
            const double x1 = rng.uniform_real(0, 300);
            db.detections.push_back(det(cls, x1, x1 + 40, rng.uniform_real(0.1, 1.0), "phoc"));
        }
        if (i % 5 != 0) a.emplace(id, da);  // some lines exist in one branch only
        if (i % 7 != 0) b.emplace(id, db);
    }

    const FusionConfig cfg = config(0.7, 0.6);
    const auto serial = fuse_corpus_serial(a, b, cfg);
    const auto parallel1 = fuse_corpus(a, b, cfg, 1);
    const auto parallel4 = fuse_corpus(a, b, cfg, 4);

    REQUIRE(serial.size() == parallel1.size());
    REQUIRE(serial.size() == parallel4.size());
    std::set<std::string> ids;
    for (const auto& [id, dets] : a) ids.insert(id);
    for (const auto& [id, dets] : b) ids.insert(id);
    REQUIRE(serial.size() == ids.size());

    for (std::size_t i = 0; i < serial.size(); ++i) {
        if (i > 0) CHECK(serial[i - 1].line.id < serial[i].line.id);
        CHECK(serial[i].line == parallel1[i].line);
        REQUIRE(serial[i].areas.size() == parallel4[i].areas.size());
        for (std::size_t j = 0; j < serial[i].areas.size(); ++j) {
            CHECK(serial[i].areas[j].area_id == parallel4[i].areas[j].area_id);
            CHECK(serial[i].areas[j].extent == parallel4[i].areas[j].extent);
            REQUIRE(serial[i].areas[j].options.size() == parallel4[i].areas[j].options.size());
            for (std::size_t o = 0; o < serial[i].areas[j].options.size(); ++o) {
                CHECK(serial[i].areas[j].options[o] == parallel1[i].areas[j].options[o]);
                CHECK(serial[i].areas[j].options[o] == parallel4[i].areas[j].options[o]);
            }
        }
    }
}

TEST_CASE("fuse_corpus rejects dimension mismatches between branches") {
    DetectionCorpus a, b;
    a.emplace("line_0", LineDetections{QueryLineId{"line_0", 400, 40}, ModalityId("visual"), {}});
    b.emplace("line_0", LineDetections{QueryLineId{"line_0", 500, 40}, ModalityId("phoc"), {}});
    CHECK_THROWS_AS(fuse_corpus_serial(a, b, config()), ContractError);
}
