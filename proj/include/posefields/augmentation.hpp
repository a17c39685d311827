#pragma once

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "posefields/random.hpp"
#include "posefields/schema.hpp"
#include "posefields/types.hpp"


namespace posefields {


// Scale-biased source sampling -------------------------------------------------------

struct MosaicIndexEntry {
    std::string image_id;
    double mean_instance_scale = 0.0;  ///< mean bbox area / image area, as a fraction
};

inline constexpr double kMosaicScaleFloor = 0.01;

/// Mean over instances of bbox area / image area (0 for an empty record).
inline double mean_instance_scale(const ImageRecord& record) {
    if (record.instances.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& inst : record.instances) sum += inst.bbox.area() / record.area();
    return sum / static_cast<double>(record.instances.size());
}

inline std::vector<MosaicIndexEntry> mosaic_index(const std::vector<ImageRecord>& records) {
    std::vector<MosaicIndexEntry> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back({r.image_id, mean_instance_scale(r)});
    return out;
}

/// Draws one index with probability proportional to floor + scale.
inline std::size_t draw_scale_biased(const std::vector<MosaicIndexEntry>& index, Rng& rng,
                                     double floor = kMosaicScaleFloor) {
    double total = 0.0;
    for (const auto& e : index) total += floor + std::max(0.0, e.mean_instance_scale);
    const double target = uniform01(rng) * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < index.size(); ++i) {
        acc += floor + std::max(0.0, index[i].mean_instance_scale);
        if (target < acc) return i;
    }
    return index.size() - 1;
}

/// Four independent draws (with replacement) biased toward large-object images.
inline std::array<std::string, 4> sample_mosaic_sources(const std::vector<MosaicIndexEntry>& index,
                                                        std::uint64_t seed, double floor = kMosaicScaleFloor) {
    if (index.empty()) throw InputError("mosaic sampling needs at least one image");
    Rng rng(seed);
    std::array<std::string, 4> out;
    for (auto& id : out) id = index[draw_scale_biased(index, rng, floor)].image_id;
    return out;
}


// Mosaic composition -----------------------------------------------------------------

/// Placement of one source image: p' = scale * p + (tx, ty), kept only inside
/// `region` (half-open on the right and bottom).
struct QuadrantPlacement {
    double scale = 1.0;
    double tx = 0.0;
    double ty = 0.0;
    BBox region;

    Point apply(Point p) const { return {p.x * scale + tx, p.y * scale + ty}; }
    Point invert(Point p) const { return {(p.x - tx) / scale, (p.y - ty) / scale}; }
    bool inside(Point p) const {
        return p.x >= region.x && p.x < region.x + region.w && p.y >= region.y && p.y < region.y + region.h;
    }
};

/// 2x2 layout: quadrants are top-left, top-right, bottom-left, bottom-right
/// around `center`.
struct MosaicPlan {
    std::array<std::string, 4> sources;
    int canvas_width = 0;
    int canvas_height = 0;
    Point center;
    std::array<QuadrantPlacement, 4> quadrants;
};

/// Plan with the center jittered inside the central half of the canvas. Each
/// source is scaled to fit its quadrant and anchored at the mosaic center.
inline MosaicPlan make_mosaic_plan(const std::array<std::string, 4>& sources,
                                   const std::array<std::pair<int, int>, 4>& source_sizes,
                                   int canvas_width, int canvas_height, Rng& rng) {
    if (canvas_width <= 0 || canvas_height <= 0) throw InputError("mosaic canvas must be non-empty");
    MosaicPlan plan;
    plan.sources = sources;
    plan.canvas_width = canvas_width;
    plan.canvas_height = canvas_height;
    const double cx = uniform_real(rng, 0.25 * canvas_width, 0.75 * canvas_width);
    const double cy = uniform_real(rng, 0.25 * canvas_height, 0.75 * canvas_height);
    plan.center = {cx, cy};

    const double W = canvas_width, H = canvas_height;
    const std::array<BBox, 4> regions = {BBox{0, 0, cx, cy}, BBox{cx, 0, W - cx, cy},
                                         BBox{0, cy, cx, H - cy}, BBox{cx, cy, W - cx, H - cy}};
    for (std::size_t q = 0; q < 4; ++q) {
        const auto [w, h] = source_sizes[q];
        if (w <= 0 || h <= 0) throw InputError("mosaic source has empty dimensions");
        QuadrantPlacement& qp = plan.quadrants[q];
        qp.region = regions[q];
        qp.scale = std::min(regions[q].w / w, regions[q].h / h);
        const bool left = q == 0 || q == 2;
        const bool top = q < 2;
        qp.tx = left ? cx - qp.scale * w : cx;
        qp.ty = top ? cy - qp.scale * h : cy;
    }
    return plan;
}

/// Moves each record's instances into its quadrant. Keypoints that land outside
/// the quadrant become absent; instances left with fewer than two present
/// keypoints are dropped; boxes are recomputed from what survives.
inline ImageRecord compose_mosaic(const MosaicPlan& plan, const std::array<const ImageRecord*, 4>& records,
                                  std::string image_id = "") {
    ImageRecord out;
    out.image_id = image_id.empty() ? "mosaic" : std::move(image_id);
    out.width = plan.canvas_width;
    out.height = plan.canvas_height;
    for (std::size_t q = 0; q < 4; ++q) {
        if (!records[q]) throw InputError("mosaic source record missing");
        if (records[q]->image_id != plan.sources[q]) throw InputError("mosaic plan does not match its records");
        const auto& qp = plan.quadrants[q];
        for (const auto& src : records[q]->instances) {
            Instance inst = src;
            for (auto& k : inst.keypoints) {
                if (!k.present()) continue;
                const Point p = qp.apply(k.point());
                k.x = p.x;
                k.y = p.y;
                if (!qp.inside(p)) k.v = Visibility::absent;
            }
            if (inst.present_count() < 2) continue;
            inst.bbox = bbox_of(inst.keypoints);
            out.instances.push_back(std::move(inst));
        }
    }
    return out;
}

inline nlohmann::json plan_to_json(const MosaicPlan& plan) {
    nlohmann::json quads = nlohmann::json::array();
    for (std::size_t q = 0; q < 4; ++q) {
        const auto& p = plan.quadrants[q];
        quads.push_back({{"source", plan.sources[q]},
                         {"scale", p.scale},
                         {"translate", {p.tx, p.ty}},
                         {"region", {p.region.x, p.region.y, p.region.w, p.region.h}}});
    }
    return {{"canvas", {plan.canvas_width, plan.canvas_height}},
            {"center", {plan.center.x, plan.center.y}},
            {"quadrants", quads}};
}


// Flip, rescale, crop ----------------------------------------------------------------------

/// Left/right keypoint pairs for a category (only humans and animals have any).
inline std::vector<std::pair<std::size_t, std::size_t>> flip_pairs_for(Category category) {
    if (category == Category::human || category == Category::animal) return builtin_schema(category).flip_pairs;
    return {};
}

/// Recorded flip -> scale -> crop chain. Pixel centers sit at integer
/// coordinates, so the flip maps x to (source_width - 1) - x.
struct GeometricTransform {
    bool flip = false;
    double scale = 1.0;
    double crop_x = 0.0;
    double crop_y = 0.0;
    int source_width = 0;
    int output_width = 0;
    int output_height = 0;

    Point apply(Point p) const {
        const double x = flip ? (source_width - 1.0) - p.x : p.x;
        return {x * scale - crop_x, p.y * scale - crop_y};
    }
    Point invert(Point p) const {
        const double x = (p.x + crop_x) / scale;
        return {flip ? (source_width - 1.0) - x : x, (p.y + crop_y) / scale};
    }
};

namespace detail {

inline void swap_flip_pairs(Instance& inst) {
    for (const auto& [a, b] : flip_pairs_for(inst.category)) {
        if (a < inst.keypoints.size() && b < inst.keypoints.size()) std::swap(inst.keypoints[a], inst.keypoints[b]);
    }
}

}  // namespace detail

/// Mirrors the record horizontally and swaps left/right keypoints.
inline ImageRecord flip_horizontal(const ImageRecord& record) {
    ImageRecord out = record;
    const double edge = record.width - 1.0;
    for (auto& inst : out.instances) {
        for (auto& k : inst.keypoints) k.x = edge - k.x;
        inst.bbox.x = edge - (inst.bbox.x + inst.bbox.w);
        detail::swap_flip_pairs(inst);
    }
    return out;
}

struct GeometricAugmentation {
    ImageRecord record;
    GeometricTransform transform;
};

/// Applies a recorded transform to a whole record. Keypoints leaving the
/// output canvas become absent; instances with no present keypoint are dropped.
inline ImageRecord apply_transform(const ImageRecord& record, const GeometricTransform& t) {
    ImageRecord out = record;
    out.width = t.output_width;
    out.height = t.output_height;
    out.instances.clear();
    for (const auto& src : record.instances) {
        Instance inst = src;
        for (auto& k : inst.keypoints) {
            const Point p = t.apply(k.point());
            k.x = p.x;
            k.y = p.y;
            if (k.present() && !(p.x >= 0 && p.y >= 0 && p.x < t.output_width && p.y < t.output_height)) {
                k.v = Visibility::absent;
            }
        }
        if (t.flip) detail::swap_flip_pairs(inst);
        if (inst.present_count() == 0) continue;
        const Point c0 = t.apply({src.bbox.x, src.bbox.y});
        const Point c1 = t.apply({src.bbox.x + src.bbox.w, src.bbox.y + src.bbox.h});
        const double x0 = std::clamp(std::min(c0.x, c1.x), 0.0, static_cast<double>(t.output_width));
        const double x1 = std::clamp(std::max(c0.x, c1.x), 0.0, static_cast<double>(t.output_width));
        const double y0 = std::clamp(std::min(c0.y, c1.y), 0.0, static_cast<double>(t.output_height));
        const double y1 = std::clamp(std::max(c0.y, c1.y), 0.0, static_cast<double>(t.output_height));
        inst.bbox = {x0, y0, x1 - x0, y1 - y0};
        out.instances.push_back(std::move(inst));
    }
    return out;
}

/// Seeded flip (p = 0.5), rescale r ~ U[lo, hi] and a crop back to at most the
/// source size.
inline GeometricAugmentation random_geometric(const ImageRecord& record, std::uint64_t seed,
                                              double scale_lo = 0.5, double scale_hi = 2.0) {
    if (record.width <= 0 || record.height <= 0) throw InputError("image dimensions must be positive");
    if (!(scale_lo > 0.0 && scale_lo <= scale_hi)) throw InputError("invalid rescale range");
    Rng rng(seed);
    GeometricTransform t;
    t.source_width = record.width;
    t.flip = uniform01(rng) < 0.5;
    t.scale = uniform_real(rng, scale_lo, scale_hi);
    const int scaled_w = std::max(1, static_cast<int>(std::nearbyint(record.width * t.scale)));
    const int scaled_h = std::max(1, static_cast<int>(std::nearbyint(record.height * t.scale)));
    t.output_width = std::min(record.width, scaled_w);
    t.output_height = std::min(record.height, scaled_h);
    t.crop_x = static_cast<double>(uniform_index(rng, static_cast<std::uint64_t>(scaled_w - t.output_width) + 1));
    t.crop_y = static_cast<double>(uniform_index(rng, static_cast<std::uint64_t>(scaled_h - t.output_height) + 1));
    return {apply_transform(record, t), t};
}


}  // namespace posefields
