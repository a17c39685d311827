#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <queue>
#include <tuple>
#include <vector>

#include "posefields/fields.hpp"
#include "posefields/schema.hpp"
#include "posefields/types.hpp"


namespace posefields {


struct DecoderConfig {
    double seed_threshold = 0.3;
    double keypoint_threshold = 0.2;
    double occupancy_radius_cells = 2.0;
    std::size_t max_instances = 128;

    void validate() const {
        if (!(seed_threshold >= 0.0 && seed_threshold <= 1.0)) throw InputError("seed threshold must be in [0, 1]");
        if (!(keypoint_threshold >= 0.0 && keypoint_threshold <= 1.0)) {
            throw InputError("keypoint threshold must be in [0, 1]");
        }
        if (!(occupancy_radius_cells > 0.0)) throw InputError("occupancy radius must be positive");
        if (max_instances == 0) throw InputError("max instances must be positive");
    }
};


struct SeedCandidate {
    std::size_t keypoint = 0;
    int row = 0;
    int col = 0;
    double confidence = 0.0;
    Point position;        ///< pixels, reconstructed from the cell offset
    double spread = 0.0;   ///< cells

    auto order_key() const { return std::make_tuple(-confidence, row, col, keypoint); }
};


/// CIF local maxima at or above the seed threshold, in a deterministic total
/// order: confidence descending, then (row, col, keypoint) ascending. Equal
/// neighbours only suppress cells that come later in (row, col) order, so a
/// plateau yields a single seed at its first cell.
template <typename Real>
std::vector<SeedCandidate> seed_candidates(const BasicFieldStack<Real>& fields, const DecoderConfig& cfg) {
    std::vector<SeedCandidate> seeds;
    const double stride = fields.config.stride;
    for (std::size_t k = 0; k < fields.keypoints; ++k) {
        for (int r = 0; r < fields.rows; ++r) {
            for (int c = 0; c < fields.cols; ++c) {
                const double v = fields.cif_at(k, cif::confidence, r, c);
                if (!(v > 0.0) || v < cfg.seed_threshold) continue;
                bool is_max = true;
                for (int dr = -1; dr <= 1 && is_max; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        if ((dr == 0 && dc == 0) || !fields.in_grid(r + dr, c + dc)) continue;
                        const double n = fields.cif_at(k, cif::confidence, r + dr, c + dc);
                        if (n > v || (n == v && std::make_pair(r + dr, c + dc) < std::make_pair(r, c))) {
                            is_max = false;
                            break;
                        }
                    }
                }
                if (!is_max) continue;
                SeedCandidate s;
                s.keypoint = k;
                s.row = r;
                s.col = c;
                s.confidence = v;
                s.position = {(c + static_cast<double>(fields.cif_at(k, cif::dx, r, c))) * stride,
                              (r + static_cast<double>(fields.cif_at(k, cif::dy, r, c))) * stride};
                s.spread = fields.cif_at(k, cif::spread, r, c);
                seeds.push_back(s);
            }
        }
    }
    std::sort(seeds.begin(), seeds.end(),
              [](const SeedCandidate& a, const SeedCandidate& b) { return a.order_key() < b.order_key(); });
    return seeds;
}


/// Accepted keypoint locations per keypoint type, each with its own
/// suppression radius in pixels.
class Occupancy {
public:
    explicit Occupancy(std::size_t keypoint_types) : marks_(keypoint_types) { }

    bool occupied(std::size_t k, Point p) const {
        for (const auto& [q, radius] : marks_[k]) {
            if (distance(p, q) <= radius) return true;
        }
        return false;
    }

    void mark(std::size_t k, Point p, double radius) { marks_[k].emplace_back(p, radius); }

private:
    std::vector<std::vector<std::pair<Point, double>>> marks_;
};


namespace detail {

struct FieldHit {
    double confidence = 0.0;
    Point position;
    double spread = 0.0;
};

// Best CIF cell for type k whose reconstructed keypoint lies within `tol`
// pixels of `near`.
template <typename Real>
std::optional<FieldHit> cif_support(const BasicFieldStack<Real>& fs, std::size_t k, Point near, double tol) {
    const double stride = fs.config.stride;
    const int w = fs.config.window + 2;
    const int r0 = block_start(near.y / stride, w), c0 = block_start(near.x / stride, w);
    std::optional<FieldHit> best;
    double best_d = 0.0;
    for (int r = r0; r < r0 + w; ++r) {
        for (int c = c0; c < c0 + w; ++c) {
            if (!fs.in_grid(r, c)) continue;
            const double conf = fs.cif_at(k, cif::confidence, r, c);
            if (!(conf > 0.0)) continue;
            const Point p{(c + static_cast<double>(fs.cif_at(k, cif::dx, r, c))) * stride,
                          (r + static_cast<double>(fs.cif_at(k, cif::dy, r, c))) * stride};
            const double d = distance(p, near);
            if (d > tol) continue;
            if (!best || conf > best->confidence || (conf == best->confidence && d < best_d)) {
                best = FieldHit{conf, p, static_cast<double>(fs.cif_at(k, cif::spread, r, c))};
                best_d = d;
            }
        }
    }
    return best;
}

struct Association {
    double confidence = 0.0;
    Point target;
};

// CAF cell for edge e whose source-side endpoint reconstructs closest to
// `source`; returns the other endpoint.
template <typename Real>
std::optional<Association> caf_association(const BasicFieldStack<Real>& fs, std::size_t e, bool forward,
                                           Point source, double tol) {
    const double stride = fs.config.stride;
    const int w = fs.config.window + 2;
    const int r0 = block_start(source.y / stride, w), c0 = block_start(source.x / stride, w);
    const std::size_t sx = forward ? caf::dx1 : caf::dx2, sy = forward ? caf::dy1 : caf::dy2;
    const std::size_t tx = forward ? caf::dx2 : caf::dx1, ty = forward ? caf::dy2 : caf::dy1;
    std::optional<Association> best;
    double best_d = 0.0;
    for (int r = r0; r < r0 + w; ++r) {
        for (int c = c0; c < c0 + w; ++c) {
            if (!fs.in_grid(r, c)) continue;
            const double conf = fs.caf_at(e, caf::confidence, r, c);
            if (!(conf > 0.0)) continue;
            const Point p{(c + static_cast<double>(fs.caf_at(e, sx, r, c))) * stride,
                          (r + static_cast<double>(fs.caf_at(e, sy, r, c))) * stride};
            const double d = distance(p, source);
            if (d > tol) continue;
            if (!best || d < best_d || (d == best_d && conf > best->confidence)) {
                best = Association{conf, {(c + static_cast<double>(fs.caf_at(e, tx, r, c))) * stride,
                                          (r + static_cast<double>(fs.caf_at(e, ty, r, c))) * stride}};
                best_d = d;
            }
        }
    }
    return best;
}

struct FrontierEntry {
    double priority;
    std::size_t edge;
    std::size_t source;
    std::size_t target;
    Point projected;
    double caf_confidence;

    // max-heap on priority; lower edge index, then lower source, first
    bool operator<(const FrontierEntry& o) const {
        if (priority != o.priority) return priority < o.priority;
        if (edge != o.edge) return edge > o.edge;
        return source > o.source;
    }
};

}  // namespace detail


/// Suppression radius (pixels) for a keypoint with the given spread (cells).
inline double occupancy_radius(double spread_cells, int stride, const DecoderConfig& cfg) {
    return std::max(cfg.occupancy_radius_cells, spread_cells) * stride;
}


/// Best-first growth from `seed` along the schema edges. Each accepted
/// keypoint is written to `occupancy`.
template <typename Real>
Instance grow_instance(const SeedCandidate& seed, const BasicFieldStack<Real>& fields,
                       const SkeletonSchema& schema, Occupancy& occupancy, const DecoderConfig& cfg) {
    const int stride = fields.config.stride;
    const double match_tol = cfg.occupancy_radius_cells * stride;
    const double cif_tol = static_cast<double>(stride);

    Instance inst;
    inst.category = schema.category;
    inst.keypoints.assign(schema.keypoint_count(), Keypoint{});

    std::priority_queue<detail::FrontierEntry> frontier;
    auto accept = [&](std::size_t k, Point p, double conf, double spread) {
        inst.keypoints[k] = Keypoint{p.x, p.y, Visibility::visible, conf};
        occupancy.mark(k, p, occupancy_radius(spread, stride, cfg));
        for (std::size_t e = 0; e < schema.edges.size(); ++e) {
            const auto [a, b] = schema.edges[e];
            const bool forward = a == k;
            if (!forward && b != k) continue;
            const std::size_t other = forward ? b : a;
            if (inst.keypoints[other].present()) continue;
            auto assoc = detail::caf_association(fields, e, forward, p, match_tol);
            if (!assoc) continue;
            frontier.push({conf * assoc->confidence, e, k, other, assoc->target, assoc->confidence});
        }
    };

    accept(seed.keypoint, seed.position, seed.confidence, seed.spread);
    while (!frontier.empty()) {
        const auto entry = frontier.top();
        frontier.pop();
        if (inst.keypoints[entry.target].present()) continue;
        auto hit = detail::cif_support(fields, entry.target, entry.projected, cif_tol);
        if (!hit || hit->confidence < cfg.keypoint_threshold) continue;
        if (occupancy.occupied(entry.target, hit->position)) continue;
        accept(entry.target, hit->position, hit->confidence, hit->spread);
    }

    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& k : inst.keypoints) {
        if (!k.present()) continue;
        sum += k.confidence;
        ++n;
    }
    inst.score = n ? sum / static_cast<double>(n) : 0.0;
    inst.bbox = bbox_of(inst.keypoints);
    return inst;
}


/// Greedy bottom-up decoding: seeds in order, skipping occupied ones, each
/// grown into an instance. Output is sorted by descending score (stable).
template <typename Real>
std::vector<Instance> decode(const BasicFieldStack<Real>& fields, const SkeletonSchema& schema,
                             const DecoderConfig& cfg = {}) {
    cfg.validate();
    if (fields.keypoints != schema.keypoint_count() || fields.edges != schema.edge_count()) {
        throw InputError("field stack shape does not match schema '" + std::string(to_string(schema.category)) + "'");
    }
    if (fields.cif.size() != fields.keypoints * kCifChannels * fields.plane() ||
        fields.caf.size() != fields.edges * kCafChannels * fields.plane()) {
        throw InputError("field stack payload size does not match its shape");
    }

    Occupancy occupancy(schema.keypoint_count());
    std::vector<Instance> instances;
    for (const auto& seed : seed_candidates(fields, cfg)) {
        if (instances.size() >= cfg.max_instances) break;
        if (occupancy.occupied(seed.keypoint, seed.position)) continue;
        instances.push_back(grow_instance(seed, fields, schema, occupancy, cfg));
    }
    std::stable_sort(instances.begin(), instances.end(),
                     [](const Instance& a, const Instance& b) { return a.score > b.score; });
    return instances;
}


}  // namespace posefields
