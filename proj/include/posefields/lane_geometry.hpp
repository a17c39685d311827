#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "posefields/random.hpp"
#include "posefields/types.hpp"


namespace posefields {


/// Raw ordered lane annotation. Consecutive duplicate points are collapsed
/// by `LanePolyline::from_points`.
struct LanePolyline {
    std::vector<Point> points;
    std::map<std::string, std::string> tags;

    static LanePolyline from_points(std::span<const Point> raw,
                                    std::map<std::string, std::string> tags = {}) {
        LanePolyline poly;
        poly.tags = std::move(tags);
        for (const Point& p : raw) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
                throw InputError("lane point coordinates must be finite");
            }
            if (poly.points.empty() || !(poly.points.back() == p)) poly.points.push_back(p);
        }
        return poly;
    }

    friend bool operator==(const LanePolyline&, const LanePolyline&) = default;
};


enum class ResampleMethod { random, fixed_vertical, even };

inline std::string_view to_string(ResampleMethod m) {
    switch (m) {
    case ResampleMethod::random: return "A";
    case ResampleMethod::fixed_vertical: return "B";
    case ResampleMethod::even: return "C";
    }
    return "?";
}

struct LaneKeypoints {
    std::vector<Point> points;
    ResampleMethod method = ResampleMethod::even;
};


class GeometryError : public InputError {
public:
    using InputError::InputError;
};


/// Cumulative arc length at each vertex; front() is 0 and back() the total.
inline std::vector<double> arc_length_table(std::span<const Point> points) {
    std::vector<double> table;
    table.reserve(points.size());
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i > 0) total += distance(points[i - 1], points[i]);
        table.push_back(total);
    }
    return table;
}

inline std::vector<double> arc_length_table(const LanePolyline& poly) {
    return arc_length_table(std::span<const Point>(poly.points));
}


/// Puts the ego-near end (larger y) first; equal y puts the smaller x first.
inline std::vector<Point> orient_lane(std::vector<Point> points) {
    if (points.size() < 2) return points;
    const Point& first = points.front();
    const Point& last = points.back();
    const bool reverse = first.y < last.y || (first.y == last.y && first.x > last.x);
    if (reverse) std::reverse(points.begin(), points.end());
    return points;
}


namespace detail {

struct ArcSampler {
    std::span<const Point> points;
    std::vector<double> table;

    explicit ArcSampler(std::span<const Point> pts) : points(pts), table(arc_length_table(pts)) {
        if (points.size() < 2 || !(table.back() > 0.0)) {
            throw GeometryError("degenerate lane polyline (zero arc length)");
        }
    }

    double length() const { return table.back(); }

    /// Point at arc position s, clamped to [0, L]. Vertices and endpoints are
    /// returned exactly.
    Point at(double s) const {
        if (s <= 0.0) return points.front();
        if (s >= length()) return points.back();
        auto it = std::upper_bound(table.begin(), table.end(), s);
        std::size_t i = static_cast<std::size_t>(it - table.begin()) - 1;
        const double seg = table[i + 1] - table[i];
        if (seg <= 0.0 || s == table[i]) return points[i];
        const double t = (s - table[i]) / seg;
        const Point& a = points[i];
        const Point& b = points[i + 1];
        return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
    }
};

inline std::vector<Point> oriented_points(const LanePolyline& poly) {
    return orient_lane(poly.points);
}

inline void check_count(std::size_t m) {
    if (m < 2) throw GeometryError("lane keypoint count must be at least 2");
}

}  // namespace detail


/// Method C: m points evenly spaced in arc length, endpoints kept exactly.
inline LaneKeypoints resample_even(const LanePolyline& poly, std::size_t m) {
    detail::check_count(m);
    const auto pts = detail::oriented_points(poly);
    const detail::ArcSampler sampler(pts);
    const double length = sampler.length();

    LaneKeypoints out{{}, ResampleMethod::even};
    out.points.reserve(m);
    out.points.push_back(pts.front());
    for (std::size_t k = 1; k + 1 < m; ++k) {
        out.points.push_back(sampler.at(length * static_cast<double>(k) / static_cast<double>(m - 1)));
    }
    out.points.push_back(pts.back());
    return out;
}


/// Method A: m arc positions drawn uniformly in [0, L], sorted.
inline LaneKeypoints resample_random(const LanePolyline& poly, std::size_t m, std::uint64_t seed) {
    detail::check_count(m);
    const auto pts = detail::oriented_points(poly);
    const detail::ArcSampler sampler(pts);

    Rng rng(seed);
    std::vector<double> positions(m);
    for (auto& s : positions) s = uniform_real(rng, 0.0, sampler.length());
    std::sort(positions.begin(), positions.end());

    LaneKeypoints out{{}, ResampleMethod::random};
    out.points.reserve(m);
    for (double s : positions) out.points.push_back(sampler.at(s));
    return out;
}


/// Arc positions where the lane first crosses each horizontal level
/// y0 + k*interval, walking from the oriented start toward the far end.
inline std::vector<double> vertical_interval_positions(std::span<const Point> pts,
                                                       const std::vector<double>& table,
                                                       double interval) {
    const double y0 = pts.front().y;
    const double dir = pts.back().y < y0 ? -1.0 : 1.0;
    double lo = y0, hi = y0;
    for (const Point& p : pts) {
        lo = std::min(lo, p.y);
        hi = std::max(hi, p.y);
    }
    const double reach = dir > 0 ? hi - y0 : y0 - lo;
    const auto levels = static_cast<std::size_t>(std::floor(reach / interval + 1e-9)) + 1;

    std::vector<double> positions;
    for (std::size_t k = 0; k < levels; ++k) {
        const double level = y0 + dir * interval * static_cast<double>(k);
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            const double ya = pts[i].y, yb = pts[i + 1].y;
            if (ya == level) {
                positions.push_back(table[i]);
                break;
            }
            if ((ya < level && level <= yb) || (yb <= level && level < ya)) {
                const double t = (level - ya) / (yb - ya);
                positions.push_back(table[i] + t * (table[i + 1] - table[i]));
                break;
            }
        }
    }
    std::sort(positions.begin(), positions.end());
    return positions;
}


/// Method B: candidates at fixed vertical intervals, then a seeded
/// order-preserving random subset (too many) or even interpolation inside the
/// candidate gaps (too few).
inline LaneKeypoints resample_fixed_vertical(const LanePolyline& poly, std::size_t m,
                                             double interval, std::uint64_t seed) {
    detail::check_count(m);
    if (!(interval > 0.0)) throw GeometryError("vertical interval must be positive");
    const auto pts = detail::oriented_points(poly);
    const detail::ArcSampler sampler(pts);

    std::vector<double> positions = vertical_interval_positions(pts, sampler.table, interval);
    positions.erase(std::unique(positions.begin(), positions.end()), positions.end());

    if (positions.size() > m) {
        Rng rng(seed);
        auto order = shuffled_indices(positions.size(), rng);
        order.resize(m);
        std::sort(order.begin(), order.end());
        std::vector<double> kept;
        kept.reserve(m);
        for (std::size_t i : order) kept.push_back(positions[i]);
        positions = std::move(kept);
    } else if (positions.size() < m) {
        if (positions.size() < 2) {
            positions.insert(positions.begin(), 0.0);
            positions.push_back(sampler.length());
            std::sort(positions.begin(), positions.end());
            positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
        }
        // Distribute the missing points over the gaps by largest remainder,
        // then subdivide each gap evenly.
        const std::size_t gaps = positions.size() - 1;
        const std::size_t missing = m - positions.size();
        const double span = positions.back() - positions.front();
        std::vector<std::size_t> extra(gaps, 0);
        std::vector<std::pair<double, std::size_t>> remainders;
        std::size_t assigned = 0;
        for (std::size_t g = 0; g < gaps; ++g) {
            const double share = static_cast<double>(missing) * (positions[g + 1] - positions[g]) / span;
            extra[g] = static_cast<std::size_t>(std::floor(share));
            assigned += extra[g];
            remainders.emplace_back(share - std::floor(share), g);
        }
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t i = 0; assigned < missing; ++i, ++assigned) {
            ++extra[remainders[i % gaps].second];
        }
        std::vector<double> filled;
        filled.reserve(m);
        for (std::size_t g = 0; g < gaps; ++g) {
            filled.push_back(positions[g]);
            const double a = positions[g], b = positions[g + 1];
            for (std::size_t j = 1; j <= extra[g]; ++j) {
                filled.push_back(a + (b - a) * static_cast<double>(j) / static_cast<double>(extra[g] + 1));
            }
        }
        filled.push_back(positions.back());
        positions = std::move(filled);
    }

    LaneKeypoints out{{}, ResampleMethod::fixed_vertical};
    out.points.reserve(m);
    for (double s : positions) out.points.push_back(sampler.at(s));
    return out;
}


inline LaneKeypoints resample(const LanePolyline& poly, ResampleMethod method, std::size_t m,
                              std::uint64_t seed, double interval = 20.0) {
    switch (method) {
    case ResampleMethod::random: return resample_random(poly, m, seed);
    case ResampleMethod::fixed_vertical: return resample_fixed_vertical(poly, m, interval, seed);
    case ResampleMethod::even: return resample_even(poly, m);
    }
    throw GeometryError("unknown resample method");
}


/// Wraps resampled lane points as a fully visible lane instance.
inline Instance lane_instance(const LaneKeypoints& lane) {
    Instance inst;
    inst.category = Category::lane;
    for (const Point& p : lane.points) inst.keypoints.push_back({p.x, p.y, Visibility::visible, 1.0});
    inst.score = 1.0;
    inst.bbox = bbox_of(inst.keypoints);
    return inst;
}


}  // namespace posefields
