#include <gtest/gtest.h>

#include <map>
#include <numeric>

#include "posefields/augmentation.hpp"
#include "test_support.hpp"

using namespace posefields;


namespace {

ImageRecord empty_record(std::string id, int w = 100, int h = 100) {
    return ImageRecord{std::move(id), w, h, std::nullopt, {}};
}

std::size_t visible_count(const ImageRecord& rec) {
    std::size_t n = 0;
    for (const auto& inst : rec.instances) n += inst.present_count();
    return n;
}

// Record whose keypoints may stray half an image outside the frame.
ImageRecord loose_scene(const SkeletonSchema& schema, std::uint64_t seed) {
    Rng rng(seed);
    ImageRecord rec;
    rec.image_id = "loose" + std::to_string(seed);
    rec.width = 100 + static_cast<int>(uniform_index(rng, 500));
    rec.height = 100 + static_cast<int>(uniform_index(rng, 500));
    const std::size_t n = uniform_index(rng, 4);
    for (std::size_t i = 0; i < n; ++i) {
        Instance inst;
        inst.category = schema.category;
        for (std::size_t k = 0; k < schema.keypoint_count(); ++k) {
            inst.keypoints.push_back({uniform_real(rng, -0.5 * rec.width, 1.5 * rec.width),
                                      uniform_real(rng, -0.5 * rec.height, 1.5 * rec.height),
                                      static_cast<Visibility>(uniform_index(rng, 3)), 1.0});
        }
        inst.bbox = bbox_of(inst.keypoints);
        rec.instances.push_back(inst);
    }
    return rec;
}

}  // namespace


TEST(MosaicSampling, EqualScalesAreUniform) {
    std::vector<MosaicIndexEntry> index;
    for (int i = 0; i < 5; ++i) index.push_back({"img" + std::to_string(i), 0.2});
    std::map<std::string, int> hits;
    const int calls = 25000;  // 10^5 draws
    for (int s = 0; s < calls; ++s)
        for (const auto& id : sample_mosaic_sources(index, static_cast<std::uint64_t>(s))) ++hits[id];
    for (const auto& [id, n] : hits) EXPECT_NEAR(n / (4.0 * calls), 0.2, 0.02 * 0.2) << id;
}

TEST(MosaicSampling, LargeObjectImageDominates) {
    const std::size_t n = 10;
    std::vector<MosaicIndexEntry> index = {{"big", 0.99}};
    for (std::size_t i = 1; i < n; ++i) index.push_back({"small" + std::to_string(i), 0.0});
    Rng rng(31);
    int big = 0;
    const int draws = 100000;
    for (int d = 0; d < draws; ++d) big += draw_scale_biased(index, rng) == 0;
    const double expected = (0.99 + 0.01) / (0.99 + 0.01 + (n - 1) * 0.01);
    EXPECT_NEAR(big / static_cast<double>(draws), expected, 0.01);
}

TEST(MosaicSampling, SingleImageAndEmpty) {
    const auto ids = sample_mosaic_sources({{"only", 0.5}}, 4);
    for (const auto& id : ids) EXPECT_EQ(id, "only");
    EXPECT_THROW(sample_mosaic_sources({}, 1), InputError);
    EXPECT_EQ(sample_mosaic_sources({{"a", 0.1}, {"b", 0.3}}, 9), sample_mosaic_sources({{"a", 0.1}, {"b", 0.3}}, 9));
}

TEST(MosaicSampling, MeanInstanceScale) {
    ImageRecord rec = empty_record("r", 100, 200);
    EXPECT_EQ(mean_instance_scale(rec), 0.0);
    Instance a;
    a.bbox = {0, 0, 100, 200};
    Instance b;
    b.bbox = {0, 0, 50, 100};
    rec.instances = {a, b};
    EXPECT_DOUBLE_EQ(mean_instance_scale(rec), 0.625);
}


TEST(MosaicPlan, QuadrantsTileTheCanvas) {
    Rng rng(32);
    for (int trial = 0; trial < 100; ++trial) {
        const int W = 200 + static_cast<int>(uniform_index(rng, 800)), H = 200 + static_cast<int>(uniform_index(rng, 800));
        std::array<std::pair<int, int>, 4> sizes;
        for (auto& s : sizes) s = {1 + static_cast<int>(uniform_index(rng, 2000)), 1 + static_cast<int>(uniform_index(rng, 2000))};
        const auto plan = make_mosaic_plan({"a", "b", "c", "d"}, sizes, W, H, rng);
        EXPECT_GE(plan.center.x, 0.25 * W);
        EXPECT_LE(plan.center.x, 0.75 * W);
        double area = 0;
        for (const auto& q : plan.quadrants) area += q.region.area();
        EXPECT_NEAR(area, static_cast<double>(W) * H, 1e-6);
        // every sampled canvas point lies in exactly one quadrant
        for (int i = 0; i < 50; ++i) {
            const Point p{uniform_real(rng, 0, W), uniform_real(rng, 0, H)};
            int owners = 0;
            for (const auto& q : plan.quadrants) owners += q.inside(p);
            EXPECT_EQ(owners, 1);
        }
        for (std::size_t q = 0; q < 4; ++q) {
            const auto& qp = plan.quadrants[q];
            // the whole source image fits in its quadrant
            const Point tl = qp.apply({0, 0});
            const Point br = qp.apply({static_cast<double>(sizes[q].first), static_cast<double>(sizes[q].second)});
            EXPECT_GE(tl.x, qp.region.x - 1e-9);
            EXPECT_GE(tl.y, qp.region.y - 1e-9);
            EXPECT_LE(br.x, qp.region.x + qp.region.w + 1e-9);
            EXPECT_LE(br.y, qp.region.y + qp.region.h + 1e-9);
            const Point p{uniform_real(rng, -50, 50), uniform_real(rng, -50, 50)};
            const Point back = qp.invert(qp.apply(p));
            EXPECT_NEAR(back.x, p.x, 1e-9);
            EXPECT_NEAR(back.y, p.y, 1e-9);
        }
    }
}

TEST(Mosaic, EmptyRecordsGiveEmptyMosaic) {
    Rng rng(33);
    const auto a = empty_record("a"), b = empty_record("b"), c = empty_record("c"), d = empty_record("d");
    const auto plan = make_mosaic_plan({"a", "b", "c", "d"}, {{{100, 100}, {100, 100}, {100, 100}, {100, 100}}}, 640, 640, rng);
    const auto out = compose_mosaic(plan, {&a, &b, &c, &d}, "m");
    EXPECT_TRUE(out.instances.empty());
    EXPECT_EQ(out.width, 640);
    EXPECT_EQ(out.image_id, "m");
}

TEST(Mosaic, InsideInstanceIsAffineCopy) {
    Rng rng(34);
    const auto schema = builtin_schema(Category::bicycle);
    ImageRecord a = empty_record("a", 300, 200);
    Instance inst;
    inst.category = Category::bicycle;
    for (int k = 0; k < 6; ++k) inst.keypoints.push_back({50.0 + 30 * k, 40.0 + 20 * k, Visibility::visible, 1.0});
    inst.bbox = bbox_of(inst.keypoints);
    a.instances.push_back(inst);
    const auto b = empty_record("b"), c = empty_record("c"), d = empty_record("d");
    const auto plan = make_mosaic_plan({"a", "b", "c", "d"}, {{{300, 200}, {100, 100}, {100, 100}, {100, 100}}}, 640, 480, rng);
    const auto out = compose_mosaic(plan, {&a, &b, &c, &d});
    ASSERT_EQ(out.instances.size(), 1u);
    const auto& q = plan.quadrants[0];
    for (int k = 0; k < 6; ++k) {
        const auto& got = out.instances[0].keypoints[k];
        EXPECT_EQ(got.v, Visibility::visible);
        EXPECT_EQ(got.x, inst.keypoints[k].x * q.scale + q.tx);
        EXPECT_EQ(got.y, inst.keypoints[k].y * q.scale + q.ty);
    }
    EXPECT_EQ(out.instances[0].bbox, bbox_of(out.instances[0].keypoints));
}

TEST(Mosaic, LaneCrossingQuadrantIsTruncatedInOrder) {
    // Source lane runs beyond the bottom of its 100x100 image, so part of it
    // leaves the bottom-right quadrant.
    MosaicPlan plan;
    plan.sources = {"a", "b", "c", "d"};
    plan.canvas_width = 400;
    plan.canvas_height = 400;
    plan.center = {200, 200};
    for (std::size_t q = 0; q < 4; ++q) {
        const double x = q % 2 ? 200 : 0, y = q < 2 ? 0 : 200;
        plan.quadrants[q] = {2.0, q % 2 ? 200.0 : 0.0, q < 2 ? 0.0 : 200.0, BBox{x, y, 200, 200}};
    }
    ImageRecord d = empty_record("d");
    d.instances.push_back(lane_instance(resample_even(LanePolyline::from_points(std::vector<Point>{{50, 140}, {60, 0}}), 15)));
    const auto a = empty_record("a"), b = empty_record("b"), c = empty_record("c");
    const auto out = compose_mosaic(plan, {&a, &b, &c, &d});
    ASSERT_EQ(out.instances.size(), 1u);
    const auto& kps = out.instances[0].keypoints;
    const auto& src = d.instances[0].keypoints;
    // clip oracle: source y < 100 maps inside (canvas y < 400)
    std::vector<std::size_t> kept;
    for (std::size_t k = 0; k < src.size(); ++k) {
        const bool inside = src[k].y < 100.0;
        EXPECT_EQ(kps[k].present(), inside) << k;
        if (inside) {
            kept.push_back(k);
            EXPECT_EQ(kps[k].x, 2.0 * src[k].x + 200);
            EXPECT_EQ(kps[k].y, 2.0 * src[k].y + 200);
        }
    }
    ASSERT_GE(kept.size(), 2u);
    for (std::size_t i = 1; i < kept.size(); ++i) {
        EXPECT_EQ(kept[i], kept[i - 1] + 1);  // contiguous run
        EXPECT_LT(kps[kept[i]].y, kps[kept[i - 1]].y);  // still ego-near first
    }
}

TEST(Mosaic, MismatchedRecordsThrow) {
    Rng rng(35);
    const auto a = empty_record("a"), b = empty_record("b"), c = empty_record("c"), d = empty_record("d");
    const auto plan = make_mosaic_plan({"a", "b", "c", "x"}, {{{100, 100}, {100, 100}, {100, 100}, {100, 100}}}, 640, 640, rng);
    EXPECT_THROW(compose_mosaic(plan, {&a, &b, &c, &d}), InputError);
    EXPECT_THROW(make_mosaic_plan({"a", "b", "c", "d"}, {{{0, 100}, {100, 100}, {100, 100}, {100, 100}}}, 64, 64, rng),
                 InputError);
}

TEST(Mosaic, NeverLeavesCanvasNorGainsKeypoints) {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        const auto schema = builtin_schema(kAllCategories[seed % 5]);
        std::array<ImageRecord, 4> recs;
        std::array<std::pair<int, int>, 4> sizes;
        std::size_t visible_in = 0;
        for (std::size_t q = 0; q < 4; ++q) {
            recs[q] = loose_scene(schema, seed * 4 + q);
            sizes[q] = {recs[q].width, recs[q].height};
            visible_in += visible_count(recs[q]);
        }
        Rng rng(seed);
        const auto plan = make_mosaic_plan({recs[0].image_id, recs[1].image_id, recs[2].image_id, recs[3].image_id},
                                           sizes, 640, 480, rng);
        const auto out = compose_mosaic(plan, {&recs[0], &recs[1], &recs[2], &recs[3]});
        EXPECT_LE(visible_count(out), visible_in);
        for (const auto& inst : out.instances) {
            EXPECT_GE(inst.present_count(), 2u);
            for (const auto& k : inst.keypoints) {
                if (!k.present()) continue;
                EXPECT_GE(k.x, 0.0);
                EXPECT_GE(k.y, 0.0);
                EXPECT_LT(k.x, 640.0);
                EXPECT_LT(k.y, 480.0);
            }
        }
    }
}


TEST(Geometric, FlipSwapsHumanPairsAndIsAnInvolution) {
    const auto schema = builtin_schema(Category::human);
    const auto rec = fixtures::random_scene(schema, 5);
    const auto once = flip_horizontal(rec);
    const auto& src = rec.instances[0].keypoints;
    const auto& flipped = once.instances[0].keypoints;
    EXPECT_EQ(flipped[0].x, rec.width - 1.0 - src[0].x);  // nose stays
    EXPECT_EQ(flipped[1].x, rec.width - 1.0 - src[2].x);  // left eye <- right eye
    EXPECT_EQ(flipped[1].y, src[2].y);
    const auto twice = flip_horizontal(once);
    for (std::size_t i = 0; i < rec.instances.size(); ++i)
        for (std::size_t k = 0; k < 17; ++k) {
            EXPECT_NEAR(twice.instances[i].keypoints[k].x, rec.instances[i].keypoints[k].x, 1e-9);
            EXPECT_EQ(twice.instances[i].keypoints[k].y, rec.instances[i].keypoints[k].y);
        }
    EXPECT_NEAR(twice.instances[0].bbox.x, rec.instances[0].bbox.x, 1e-9);
}

TEST(Geometric, NoSwapForLanesCarsBicycles) {
    EXPECT_TRUE(flip_pairs_for(Category::lane).empty());
    EXPECT_TRUE(flip_pairs_for(Category::car).empty());
    EXPECT_TRUE(flip_pairs_for(Category::bicycle).empty());
    EXPECT_EQ(flip_pairs_for(Category::human).size(), 8u);
    const auto schema = builtin_schema(Category::bicycle);
    const auto rec = fixtures::random_scene(schema, 6);
    const auto f = flip_horizontal(rec);
    EXPECT_EQ(f.instances[0].keypoints[4].y, rec.instances[0].keypoints[4].y);
}

TEST(Geometric, DeterministicGivenSeed) {
    const auto rec = fixtures::random_scene(builtin_schema(Category::animal), 7);
    const auto a = random_geometric(rec, 17), b = random_geometric(rec, 17);
    EXPECT_EQ(a.record, b.record);
    EXPECT_EQ(a.transform.scale, b.transform.scale);
    EXPECT_GE(a.transform.scale, 0.5);
    EXPECT_LE(a.transform.scale, 2.0);
    EXPECT_LE(a.record.width, rec.width);
}

TEST(Geometric, ScaleThenInverseIsIdentity) {
    const auto rec = fixtures::random_scene(builtin_schema(Category::car), 8);
    for (double r : {0.5, 0.73, 1.9, 2.0}) {
        GeometricTransform up;
        up.scale = r;
        up.source_width = rec.width;
        up.output_width = rec.width * 4;
        up.output_height = rec.height * 4;
        GeometricTransform down = up;
        down.scale = 1.0 / r;
        const auto back = apply_transform(apply_transform(rec, up), down);
        ASSERT_EQ(back.instances.size(), rec.instances.size());
        for (std::size_t i = 0; i < rec.instances.size(); ++i)
            for (std::size_t k = 0; k < rec.instances[i].keypoints.size(); ++k) {
                EXPECT_NEAR(back.instances[i].keypoints[k].x, rec.instances[i].keypoints[k].x, 1e-9);
                EXPECT_NEAR(back.instances[i].keypoints[k].y, rec.instances[i].keypoints[k].y, 1e-9);
            }
    }
}

TEST(Geometric, RecordedTransformReproducesOutputExactly) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto schema = builtin_schema(kAllCategories[seed % 5]);
        const auto rec = fixtures::random_scene(schema, seed);
        const auto aug = random_geometric(rec, seed);
        const auto& t = aug.transform;
        const auto pairs = flip_pairs_for(schema.category);
        std::vector<std::size_t> source_of(schema.keypoint_count());
        std::iota(source_of.begin(), source_of.end(), std::size_t{0});
        if (t.flip)
            for (auto [a, b] : pairs) std::swap(source_of[a], source_of[b]);
        // instances keep their order; dropped ones have no present keypoint left
        std::size_t j = 0;
        for (const auto& src : rec.instances) {
            std::vector<Keypoint> expect(schema.keypoint_count());
            std::size_t present = 0;
            for (std::size_t k = 0; k < expect.size(); ++k) {
                const auto& s = src.keypoints[source_of[k]];
                const Point p = t.apply(s.point());
                expect[k] = {p.x, p.y, s.v, s.confidence};
                if (!(p.x >= 0 && p.y >= 0 && p.x < t.output_width && p.y < t.output_height)) expect[k].v = Visibility::absent;
                present += expect[k].present();
            }
            if (present == 0) continue;
            ASSERT_LT(j, aug.record.instances.size());
            EXPECT_EQ(aug.record.instances[j].keypoints, expect);
            ++j;
        }
        EXPECT_EQ(j, aug.record.instances.size());
        // inverse maps back within rounding
        const Point probe{123.25, 77.5};
        const Point back = t.invert(t.apply(probe));
        EXPECT_NEAR(back.x, probe.x, 1e-9);
        EXPECT_NEAR(back.y, probe.y, 1e-9);
    }
}

TEST(Geometric, InvalidInputs) {
    EXPECT_THROW(random_geometric(empty_record("x", 0, 10), 1), InputError);
    EXPECT_THROW(random_geometric(empty_record("x"), 1, 2.0, 1.0), InputError);
}
