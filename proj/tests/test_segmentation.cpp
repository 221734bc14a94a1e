#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "panicle/segmentation.hpp"

using namespace panicle;

namespace {

BinaryMask rectMask(int w, int h, int x0, int y0, int x1, int y1) {
    BinaryMask m(w, h);
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) m.set(x, y, true);
    return m;
}

}  // namespace

TEST_CASE("filter candidates: default thresholds and boundary semantics") {
    const auto makeCand = [](std::size_t area, double stability) {
        CandidateMask c;
        const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(area))));
        c.mask = BinaryMask(side, side);
        std::size_t left = area;
        for (std::size_t i = 0; i < c.mask.bits.size() && left > 0; ++i, --left)
            c.mask.bits[i] = 1;
        c.stability = stability;
        return c;
    };
    SUBCASE("area 9999 with high stability is removed") {
        const auto kept = filterCandidates({makeCand(9999, 0.95)});
        CHECK(kept.empty());
    }
    SUBCASE("boundary values are kept") {
        const auto kept = filterCandidates({makeCand(10000, 0.8)});
        CHECK(kept.size() == 1);
    }
    SUBCASE("random list equals per-element predicate oracle") {
        Rng rng(41);
        std::vector<CandidateMask> cands;
        for (int i = 0; i < 60; ++i)
            cands.push_back(makeCand(8000 + rng.below(4000), rng.uniform(0.6, 1.0)));
        const auto kept = filterCandidates(cands);
        std::size_t expected = 0;
        for (const auto& c : cands)
            if (c.area() >= 10000 && c.stability >= 0.8) ++expected;
        CHECK(kept.size() == expected);
        for (const auto& c : kept) {
            CHECK(c.area() >= 10000);
            CHECK(c.stability >= 0.8);
        }
    }
}

TEST_CASE("erode: radius zero is the identity") {
    Rng rng(43);
    const BinaryMask m = oracles::randomBlobMask(rng, 40, 30);
    CHECK(erode(m, 0).bits == m.bits);
}

TEST_CASE("erode: solid square shrinks to the oracle result") {
    const BinaryMask square = rectMask(14, 14, 2, 2, 12, 12);  // 10x10 solid
    const BinaryMask got = erode(square, 2);
    const BinaryMask want = oracles::erodeBruteForce(square, 2);
    CHECK(got.bits == want.bits);
    CHECK(got.area() == 36);  // 6x6 remains under the disc element
}

TEST_CASE("erode: random masks match brute force; thin mask vanishes") {
    Rng rng(47);
    for (int trial = 0; trial < 10; ++trial) {
        const BinaryMask m = oracles::randomBlobMask(rng, 48, 32);
        for (const int radius : {1, 2, 4}) {
            CHECK(erode(m, radius).bits == oracles::erodeBruteForce(m, radius).bits);
        }
    }
    const BinaryMask thin = rectMask(20, 20, 5, 5, 8, 15);  // 3 px wide
    CHECK(erode(thin, 2).emptyMask());
}

TEST_CASE("erode then erode is anti-extensive") {
    Rng rng(53);
    const BinaryMask m = oracles::randomBlobMask(rng, 40, 40);
    const BinaryMask once = erode(m, 2);
    const BinaryMask twice = erode(once, 1);
    for (std::size_t i = 0; i < m.bits.size(); ++i)
        if (twice.bits[i]) CHECK(once.bits[i]);
}

TEST_CASE("sample mask: exhaustive, deterministic, roughly uniform") {
    Rng rng(59);
    const BinaryMask m = oracles::randomBlobMask(rng, 24, 24);
    const std::size_t fg = m.area();
    REQUIRE(fg > 0);

    SUBCASE("n >= foreground returns the whole foreground") {
        const auto all = sampleMask(m, fg + 10, 1);
        CHECK(all.size() == fg);
    }
    SUBCASE("same seed gives the identical sample") {
        CHECK(sampleMask(m, 20, 77) == sampleMask(m, 20, 77));
    }
    SUBCASE("empty mask is an error") {
        CHECK_THROWS_AS(sampleMask(BinaryMask(8, 8), 5, 1), UsageError);
    }
    SUBCASE("per-pixel inclusion is uniform within 3 sigma") {
        const std::size_t draws = 10000, k = fg / 2;
        std::vector<std::size_t> hits(m.bits.size(), 0);
        for (std::size_t d = 0; d < draws; ++d)
            for (const auto& [x, y] : sampleMask(m, k, 1000 + d))
                hits[static_cast<std::size_t>(y) * m.width + x]++;
        const double p = static_cast<double>(k) / static_cast<double>(fg);
        const double sigma = std::sqrt(static_cast<double>(draws) * p * (1 - p));
        std::size_t beyond3 = 0;
        for (std::size_t i = 0; i < m.bits.size(); ++i) {
            if (!m.bits[i]) {
                CHECK(hits[i] == 0);
                continue;
            }
            const double dev = std::abs(static_cast<double>(hits[i]) - draws * p);
            if (dev > 3.0 * sigma) ++beyond3;
            CHECK(dev <= 5.0 * sigma);  // gross bias would blow far past this
        }
        // ~0.27% of pixels may exceed 3 sigma by chance
        CHECK(static_cast<double>(beyond3) <= 0.01 * static_cast<double>(fg) + 1.0);
    }
}

TEST_CASE("match and merge: fines partitioning the rough region reproduce it") {
    const int W = 64, H = 64;
    const BinaryMask rough = rectMask(W, H, 10, 10, 50, 50);
    std::vector<CandidateMask> fines;
    fines.push_back({rectMask(W, H, 10, 10, 30, 50), 1.0});
    fines.push_back({rectMask(W, H, 30, 10, 50, 50), 1.0});
    const MergeResult merged = matchAndMerge({rough, InstanceClass::Panicle}, fines, 3, 200, 9);
    CHECK(merged.matched_count == 2);
    CHECK(merged.mask.bits == rough.bits);
}

TEST_CASE("match and merge: containment guard rejects a huge background mask") {
    const int W = 96, H = 96;
    const BinaryMask rough = rectMask(W, H, 40, 40, 56, 56);
    BinaryMask background(W, H, 1);  // covers everything: contains samples, fails containment
    const MergeResult merged =
        matchAndMerge({rough, InstanceClass::Panicle}, {{background, 1.0}}, 3, 200, 9, 0.5);
    CHECK(merged.matched_count == 0);
    CHECK(merged.fell_back_to_rough);
    CHECK(merged.mask.bits == rough.bits);
}

TEST_CASE("match and merge: picks exactly the blobs under the rough mask") {
    const int W = 120, H = 60;
    // five fine blobs in a row; rough covers the middle three
    std::vector<CandidateMask> fines;
    for (int b = 0; b < 5; ++b)
        fines.push_back({rectMask(W, H, 4 + 24 * b, 20, 20 + 24 * b, 40), 1.0});
    const BinaryMask rough = rectMask(W, H, 26, 18, 94, 42);
    const MergeResult merged = matchAndMerge({rough, InstanceClass::Panicle}, fines, 2, 300, 5);
    CHECK(merged.matched_count == 3);
    BinaryMask expect(W, H);
    for (int b = 1; b <= 3; ++b)
        for (int y = 20; y < 40; ++y)
            for (int x = 4 + 24 * b; x < 20 + 24 * b; ++x) expect.set(x, y, true);
    CHECK(merged.mask.bits == expect.bits);
}

TEST_CASE("match and merge: no fines falls back to the rough mask") {
    const BinaryMask rough = rectMask(16, 16, 4, 4, 12, 12);
    const MergeResult merged = matchAndMerge({rough, InstanceClass::Label}, {});
    CHECK(merged.fell_back_to_rough);
    CHECK(merged.mask.bits == rough.bits);
}

TEST_CASE("match and merge: output never leaves fines union rough") {
    Rng rng(61);
    for (int trial = 0; trial < 20; ++trial) {
        const BinaryMask rough = oracles::randomBlobMask(rng, 48, 48, 2);
        if (rough.emptyMask()) continue;
        std::vector<CandidateMask> fines;
        for (int f = 0; f < 4; ++f)
            fines.push_back({oracles::randomBlobMask(rng, 48, 48, 2), 1.0});
        const MergeResult merged =
            matchAndMerge({rough, InstanceClass::Panicle}, fines, 2, 100, trial, 0.3);
        for (std::size_t i = 0; i < merged.mask.bits.size(); ++i) {
            if (!merged.mask.bits[i]) continue;
            bool inside = rough.bits[i] != 0;
            for (const auto& f : fines) inside = inside || f.mask.bits[i] != 0;
            REQUIRE(inside);
        }
    }
}

TEST_CASE("apply mask: alpha equals the mask bit per pixel") {
    Rng rng(67);
    const int W = 31, H = 17;
    ImageBuffer image(W, H, 3);
    for (auto& b : image.data) b = static_cast<std::uint8_t>(rng.below(256));

    SUBCASE("full and empty masks") {
        const ImageBuffer opaque = applyMask(image, BinaryMask(W, H, 1));
        const ImageBuffer clear = applyMask(image, BinaryMask(W, H, 0));
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                CHECK(opaque.pixel(x, y)[3] == 255);
                CHECK(clear.pixel(x, y)[3] == 0);
            }
    }
    SUBCASE("checkerboard") {
        BinaryMask checker(W, H);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) checker.set(x, y, (x + y) % 2 == 0);
        const ImageBuffer out = applyMask(image, checker);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                CHECK(out.pixel(x, y)[3] == (checker.at(x, y) ? 255 : 0));
                CHECK(out.pixel(x, y)[0] == image.pixel(x, y)[0]);
                CHECK(out.pixel(x, y)[1] == image.pixel(x, y)[1]);
                CHECK(out.pixel(x, y)[2] == image.pixel(x, y)[2]);
            }
    }
    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(applyMask(image, BinaryMask(W + 1, H)), UsageError);
    }
}

TEST_CASE("metrics: identity, disjoint and the 4-pixel hand case") {
    const BinaryMask a = rectMask(8, 8, 1, 1, 4, 4);
    const BinaryMask b = rectMask(8, 8, 5, 5, 7, 7);
    const SegMetrics same = segMetrics(a, a);
    CHECK(same.precision == 1.0);
    CHECK(same.recall == 1.0);
    CHECK(same.f1 == 1.0);
    CHECK(same.iou == 1.0);
    const SegMetrics disjoint = segMetrics(a, b);
    CHECK(disjoint.precision == 0.0);
    CHECK(disjoint.recall == 0.0);
    CHECK(disjoint.f1 == 0.0);
    CHECK(disjoint.iou == 0.0);

    // TP=2 FP=1 FN=1 on a 2x2 canvas
    BinaryMask pred(2, 2), gt(2, 2);
    pred.set(0, 0, true);
    pred.set(1, 0, true);
    pred.set(0, 1, true);
    gt.set(0, 0, true);
    gt.set(1, 0, true);
    gt.set(1, 1, true);
    const SegMetrics m = segMetrics(pred, gt);
    CHECK(m.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(m.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(m.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(m.iou == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("metrics: random masks match the pixel-count oracle") {
    Rng rng(71);
    for (int trial = 0; trial < 50; ++trial) {
        const BinaryMask pred = oracles::randomMask(rng, 32, 32, rng.uniform(0.2, 0.8));
        const BinaryMask gt = oracles::randomMask(rng, 32, 32, rng.uniform(0.2, 0.8));
        const auto c = oracles::countPixels(pred, gt);
        const SegMetrics m = segMetrics(pred, gt);
        const double precision = c.tp + c.fp ? double(c.tp) / double(c.tp + c.fp) : 0.0;
        const double recall = c.tp + c.fn ? double(c.tp) / double(c.tp + c.fn) : 0.0;
        CHECK(m.precision == doctest::Approx(precision).epsilon(1e-12));
        CHECK(m.recall == doctest::Approx(recall).epsilon(1e-12));
        CHECK(m.iou ==
              doctest::Approx(c.tp + c.fp + c.fn ? double(c.tp) / double(c.tp + c.fp + c.fn) : 1.0)
                  .epsilon(1e-12));
        // symmetry: precision(pred, gt) == recall(gt, pred)
        const SegMetrics swapped = segMetrics(gt, pred);
        CHECK(m.precision == doctest::Approx(swapped.recall).epsilon(1e-12));
        CHECK(m.iou == doctest::Approx(swapped.iou).epsilon(1e-12));
    }
}

TEST_CASE("metrics: f1 equals 2*iou/(1+iou) on random masks") {
    Rng rng(73);
    for (int trial = 0; trial < 200; ++trial) {
        const BinaryMask pred = oracles::randomMask(rng, 24, 24, rng.uniform(0.1, 0.9));
        const BinaryMask gt = oracles::randomMask(rng, 24, 24, rng.uniform(0.1, 0.9));
        const SegMetrics m = segMetrics(pred, gt);
        if (m.precision + m.recall == 0.0) continue;
        CHECK(m.f1 == doctest::Approx(2.0 * m.iou / (1.0 + m.iou)).epsilon(1e-12));
    }
}

TEST_CASE("boundary overlap: trivial and shifted-square cases") {
    const BinaryMask square = rectMask(12, 12, 2, 2, 7, 7);
    CHECK(boundaryOverlap(square, square) == 1.0);
    CHECK(boundaryOverlap(BinaryMask(12, 12), square) == 0.0);
    CHECK(boundaryOverlap(BinaryMask(12, 12), BinaryMask(12, 12)) == 1.0);

    const BinaryMask shifted = rectMask(12, 12, 4, 4, 9, 9);
    CHECK(boundaryOverlap(square, shifted) ==
          doctest::Approx(oracles::boundaryOverlapOracle(square, shifted)).epsilon(1e-12));
}

TEST_CASE("boundary overlap: random masks match the edge-set oracle and stay symmetric") {
    Rng rng(79);
    for (int trial = 0; trial < 30; ++trial) {
        const BinaryMask pred = oracles::randomBlobMask(rng, 28, 28);
        const BinaryMask gt = oracles::randomBlobMask(rng, 28, 28);
        const double bo = boundaryOverlap(pred, gt);
        CHECK(bo == doctest::Approx(oracles::boundaryOverlapOracle(pred, gt)).epsilon(1e-12));
        CHECK(bo == doctest::Approx(boundaryOverlap(gt, pred)).epsilon(1e-12));
        CHECK(bo >= 0.0);
        CHECK(bo <= 1.0);
    }
}
