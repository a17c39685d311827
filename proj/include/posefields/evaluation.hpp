#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "posefields/parallel.hpp"
#include "posefields/schema.hpp"
#include "posefields/types.hpp"


namespace posefields {


// Lane masks ----------------------------------------------------------------------

struct Mask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    Mask() = default;
    Mask(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0) { }

    std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t count() const { return static_cast<std::size_t>(std::count(data.begin(), data.end(), 1)); }

    friend bool operator==(const Mask&, const Mask&) = default;
};


/// Sets every pixel whose center (integer coordinates) lies within width/2 of
/// the polyline: segments with round caps at each vertex.
inline Mask rasterize_lane(std::span<const Point> points, double line_width, int canvas_width, int canvas_height) {
    if (canvas_width <= 0 || canvas_height <= 0) throw InputError("canvas must be non-empty");
    Mask mask(canvas_width, canvas_height);
    if (points.empty()) return mask;
    const double r = 0.5 * line_width;
    const double r2 = r * r;
    const std::size_t segments = points.size() == 1 ? 1 : points.size() - 1;
    for (std::size_t s = 0; s < segments; ++s) {
        const Point a = points[s];
        const Point b = points.size() == 1 ? points[0] : points[s + 1];
        const double x0 = std::max(0.0, std::ceil(std::min(a.x, b.x) - r));
        const double x1 = std::min(canvas_width - 1.0, std::floor(std::max(a.x, b.x) + r));
        const double y0 = std::max(0.0, std::ceil(std::min(a.y, b.y) - r));
        const double y1 = std::min(canvas_height - 1.0, std::floor(std::max(a.y, b.y) + r));
        if (x0 > x1 || y0 > y1) continue;
        const double vx = b.x - a.x, vy = b.y - a.y;
        const double len2 = vx * vx + vy * vy;
        for (int y = static_cast<int>(y0); y <= static_cast<int>(y1); ++y) {
            for (int x = static_cast<int>(x0); x <= static_cast<int>(x1); ++x) {
                double t = len2 > 0.0 ? ((x - a.x) * vx + (y - a.y) * vy) / len2 : 0.0;
                t = std::clamp(t, 0.0, 1.0);
                const double dx = a.x + t * vx - x, dy = a.y + t * vy - y;
                if (dx * dx + dy * dy <= r2) mask.at(x, y) = 1;
            }
        }
    }
    return mask;
}

/// |a & b| / |a | b|, 0 when both are empty.
inline double lane_iou(const Mask& a, const Mask& b) {
    if (a.width != b.width || a.height != b.height) throw InputError("mask canvas mismatch");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        inter += a.data[i] & b.data[i];
        uni += a.data[i] | b.data[i];
    }
    return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

/// Present keypoints of a lane instance, in order.
inline std::vector<Point> lane_points(const Instance& lane) {
    std::vector<Point> pts;
    for (const auto& k : lane.keypoints)
        if (k.present()) pts.push_back(k.point());
    return pts;
}


// Counting ------------------------------------------------------------------------

struct Counts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    Counts& operator+=(const Counts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    friend bool operator==(const Counts&, const Counts&) = default;
};

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    friend bool operator==(const PRF&, const PRF&) = default;
};

/// Precision, recall and F1 with 0/0 taken as 0.
inline PRF f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    PRF out;
    if (tp + fp) out.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn) out.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (out.precision + out.recall > 0.0) {
        out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
    }
    return out;
}

inline PRF f1_from_counts(const Counts& c) { return f1_from_counts(c.tp, c.fp, c.fn); }


// Matching ------------------------------------------------------------------------

enum class Matching { greedy, hungarian };

struct LaneEvalConfig {
    double line_width = 30.0;
    double iou_threshold = 0.3;
    Matching matching = Matching::greedy;

    void validate() const {
        if (!(line_width >= 1.0)) throw InputError("lane width must be at least 1 pixel");
        if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) throw InputError("IoU threshold must be in (0, 1]");
    }
};

struct MatchResult {
    Counts counts;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  ///< (prediction, ground truth)
};


/// Minimum-cost assignment on a rows x cols matrix (rows <= cols); returns the
/// column assigned to each row.
inline std::vector<std::size_t> hungarian_assignment(const std::vector<std::vector<double>>& cost) {
    const std::size_t n = cost.size();
    if (n == 0) return {};
    const std::size_t m = cost[0].size();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    std::vector<char> used(m + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<std::size_t> assignment(n, 0);
    for (std::size_t j = 1; j <= m; ++j)
        if (p[j]) assignment[p[j] - 1] = j - 1;
    return assignment;
}


/// Matches predicted lanes to ground truth on a canvas. Greedy: predictions in
/// descending score (ties by index) take the unmatched ground truth with the
/// highest IoU at or above the threshold. Hungarian: maximum total IoU
/// assignment, keeping pairs that clear the threshold.
inline MatchResult match_lanes(const std::vector<Instance>& preds, const std::vector<Instance>& gts,
                               const LaneEvalConfig& cfg, int canvas_width, int canvas_height) {
    cfg.validate();
    std::vector<Mask> pm, gm;
    pm.reserve(preds.size());
    gm.reserve(gts.size());
    for (const auto& p : preds) pm.push_back(rasterize_lane(lane_points(p), cfg.line_width, canvas_width, canvas_height));
    for (const auto& g : gts) gm.push_back(rasterize_lane(lane_points(g), cfg.line_width, canvas_width, canvas_height));

    std::vector<std::vector<double>> iou(preds.size(), std::vector<double>(gts.size()));
    for (std::size_t i = 0; i < preds.size(); ++i)
        for (std::size_t j = 0; j < gts.size(); ++j) iou[i][j] = lane_iou(pm[i], gm[j]);

    MatchResult result;
    if (cfg.matching == Matching::greedy) {
        std::vector<std::size_t> order(preds.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
        std::vector<char> taken(gts.size(), 0);
        for (std::size_t i : order) {
            std::size_t best = gts.size();
            for (std::size_t j = 0; j < gts.size(); ++j) {
                if (taken[j] || iou[i][j] < cfg.iou_threshold) continue;
                if (best == gts.size() || iou[i][j] > iou[i][best]) best = j;
            }
            if (best < gts.size()) {
                taken[best] = 1;
                result.pairs.emplace_back(i, best);
            }
        }
    } else if (!preds.empty() && !gts.empty()) {
        const bool transpose = preds.size() > gts.size();
        const std::size_t rows = transpose ? gts.size() : preds.size();
        const std::size_t cols = transpose ? preds.size() : gts.size();
        std::vector<std::vector<double>> cost(rows, std::vector<double>(cols));
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) cost[r][c] = 1.0 - (transpose ? iou[c][r] : iou[r][c]);
        const auto assign = hungarian_assignment(cost);
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t i = transpose ? assign[r] : r;
            const std::size_t j = transpose ? r : assign[r];
            if (iou[i][j] >= cfg.iou_threshold) result.pairs.emplace_back(i, j);
        }
        std::sort(result.pairs.begin(), result.pairs.end());
    }
    result.counts.tp = result.pairs.size();
    result.counts.fp = preds.size() - result.pairs.size();
    result.counts.fn = gts.size() - result.pairs.size();
    return result;
}


// Lane F1 over a dataset ---------------------------------------------------------------

struct ScenarioReport {
    Counts counts;
    PRF prf;
};

struct EvalReport {
    Counts counts;
    PRF prf;
    std::map<std::string, ScenarioReport> per_scenario;
    std::vector<std::string> warnings;
};

/// Per-image lane matching on each ground-truth canvas, reduced overall and
/// per scenario tag. Prediction images without ground truth count as all-FP.
inline EvalReport evaluate_lanes(const std::vector<ImageRecord>& preds, const std::vector<ImageRecord>& gts,
                                 const LaneEvalConfig& cfg = {}, unsigned jobs = 1) {
    cfg.validate();
    std::map<std::string, std::size_t> pred_index;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (!pred_index.emplace(preds[i].image_id, i).second) {
            throw InputError("duplicate prediction image id " + preds[i].image_id);
        }
    }
    std::map<std::string, std::size_t> gt_index;
    for (std::size_t i = 0; i < gts.size(); ++i) {
        if (!gt_index.emplace(gts[i].image_id, i).second) {
            throw InputError("duplicate ground-truth image id " + gts[i].image_id);
        }
    }

    const auto per_image = parallel_map(gts.size(), jobs, [&](std::size_t i) {
        const auto& gt = gts[i];
        auto it = pred_index.find(gt.image_id);
        if (it == pred_index.end()) return match_lanes({}, gt.instances, cfg, gt.width, gt.height).counts;
        const auto& pred = preds[it->second];
        if (pred.width == gt.width && pred.height == gt.height) {
            return match_lanes(pred.instances, gt.instances, cfg, gt.width, gt.height).counts;
        }
        // predicted at another resolution: map back onto the ground-truth canvas
        if (pred.width <= 0 || pred.height <= 0) throw InputError("prediction " + pred.image_id + " has no image size");
        const double fx = static_cast<double>(gt.width) / pred.width, fy = static_cast<double>(gt.height) / pred.height;
        auto scaled = pred.instances;
        for (auto& inst : scaled)
            for (auto& k : inst.keypoints) {
                k.x *= fx;
                k.y *= fy;
            }
        return match_lanes(scaled, gt.instances, cfg, gt.width, gt.height).counts;
    });

    EvalReport report;
    for (std::size_t i = 0; i < gts.size(); ++i) {
        report.counts += per_image[i];
        if (gts[i].scenario) report.per_scenario[*gts[i].scenario].counts += per_image[i];
    }
    for (const auto& rec : preds) {
        if (gt_index.count(rec.image_id)) continue;
        report.warnings.push_back("image " + rec.image_id + " has predictions but no ground truth");
        report.counts.fp += rec.instances.size();
    }
    report.prf = f1_from_counts(report.counts);
    for (auto& [tag, s] : report.per_scenario) s.prf = f1_from_counts(s.counts);
    return report;
}


// Keypoint similarity and AP ------------------------------------------------------------

/// Object keypoint similarity: mean over the ground truth's labelled keypoints
/// of exp(-d^2 / (2 s^2 kappa^2)) with s^2 the ground-truth box area. Absent
/// predicted keypoints contribute 0.
inline double oks(const Instance& pred, const Instance& gt, const SkeletonSchema& schema) {
    if (pred.category != gt.category) throw InputError("OKS between different categories");
    if (gt.keypoints.size() != schema.keypoint_count() || pred.keypoints.size() != schema.keypoint_count()) {
        throw InputError("instance keypoint count does not match schema");
    }
    const double s2 = gt.bbox.area();
    if (!(s2 > 0.0)) throw InputError("ground-truth bbox has zero area");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < gt.keypoints.size(); ++k) {
        const auto& g = gt.keypoints[k];
        if (!g.present()) continue;
        ++n;
        const auto& p = pred.keypoints[k];
        if (!p.present()) continue;
        const double dx = p.x - g.x, dy = p.y - g.y;
        const double kappa = schema.oks_kappas[k];
        sum += std::exp(-(dx * dx + dy * dy) / (2.0 * s2 * kappa * kappa));
    }
    if (n == 0) throw InputError("ground truth has no labelled keypoints");
    return sum / static_cast<double>(n);
}

inline constexpr std::array<double, 10> kOksThresholds = {0.50, 0.55, 0.60, 0.65, 0.70,
                                                         0.75, 0.80, 0.85, 0.90, 0.95};
inline constexpr std::size_t kRecallPoints = 101;

struct APReport {
    Category category = Category::human;
    double ap = 0.0;
    std::array<double, kOksThresholds.size()> ap_per_threshold{};
    /// Interpolated precision at recall 0.00, 0.01, ..., 1.00 per threshold.
    std::array<std::vector<double>, kOksThresholds.size()> precision;
    std::size_t ground_truths = 0;
    std::size_t detections = 0;
};


/// Area under the 101-point interpolated precision/recall curve for
/// detections already in ranking order. `tp[i]` marks a true positive.
inline double interpolated_ap(const std::vector<char>& tp, std::size_t ground_truths,
                              std::vector<double>* precision_out = nullptr) {
    std::vector<double> recall(tp.size()), precision(tp.size());
    std::size_t tps = 0;
    for (std::size_t i = 0; i < tp.size(); ++i) {
        tps += tp[i] ? 1 : 0;
        recall[i] = ground_truths ? static_cast<double>(tps) / static_cast<double>(ground_truths) : 0.0;
        precision[i] = static_cast<double>(tps) / static_cast<double>(i + 1);
    }
    for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);

    std::vector<double> sampled(kRecallPoints, 0.0);
    if (ground_truths) {
        for (std::size_t j = 0; j < kRecallPoints; ++j) {
            const double r = static_cast<double>(j) / 100.0;
            auto it = std::lower_bound(recall.begin(), recall.end(), r);
            if (it != recall.end()) sampled[j] = precision[static_cast<std::size_t>(it - recall.begin())];
        }
    }
    const double ap = std::accumulate(sampled.begin(), sampled.end(), 0.0) / static_cast<double>(kRecallPoints);
    if (precision_out) *precision_out = std::move(sampled);
    return ap;
}


/// COCO-style keypoint AP averaged over OKS thresholds 0.50:0.05:0.95.
/// Ground truths without labelled keypoints are ignored.
inline APReport keypoint_ap(const std::vector<ImageRecord>& preds, const std::vector<ImageRecord>& gts,
                            const SkeletonSchema& schema, unsigned jobs = 1) {
    std::map<std::string, std::size_t> pred_index;
    for (std::size_t i = 0; i < preds.size(); ++i) pred_index.emplace(preds[i].image_id, i);

    struct ImageResult {
        std::size_t ground_truths = 0;
        std::vector<double> scores;  // ranked within the image
        std::vector<std::array<char, kOksThresholds.size()>> matched;
    };

    auto filtered = [&](const std::vector<Instance>& instances, bool need_labels) {
        std::vector<const Instance*> out;
        for (const auto& inst : instances) {
            if (inst.category != schema.category) continue;
            if (need_labels && inst.present_count() == 0) continue;
            out.push_back(&inst);
        }
        return out;
    };

    const auto per_image = parallel_map(gts.size(), jobs, [&](std::size_t i) {
        ImageResult res;
        const auto g = filtered(gts[i].instances, true);
        res.ground_truths = g.size();
        auto it = pred_index.find(gts[i].image_id);
        if (it == pred_index.end()) return res;
        auto d = filtered(preds[it->second].instances, false);
        std::stable_sort(d.begin(), d.end(), [](const Instance* a, const Instance* b) { return a->score > b->score; });

        std::vector<std::vector<double>> sim(d.size(), std::vector<double>(g.size()));
        for (std::size_t a = 0; a < d.size(); ++a)
            for (std::size_t b = 0; b < g.size(); ++b) sim[a][b] = oks(*d[a], *g[b], schema);

        res.matched.assign(d.size(), {});
        for (std::size_t t = 0; t < kOksThresholds.size(); ++t) {
            std::vector<char> taken(g.size(), 0);
            for (std::size_t a = 0; a < d.size(); ++a) {
                std::size_t best = g.size();
                for (std::size_t b = 0; b < g.size(); ++b) {
                    if (taken[b] || sim[a][b] < kOksThresholds[t]) continue;
                    if (best == g.size() || sim[a][b] > sim[a][best]) best = b;
                }
                if (best < g.size()) {
                    taken[best] = 1;
                    res.matched[a][t] = 1;
                }
            }
        }
        for (const auto* inst : d) res.scores.push_back(inst->score);
        return res;
    });

    APReport report;
    report.category = schema.category;
    struct Ranked {
        double score;
        std::size_t image;
        std::size_t rank;
    };
    std::vector<Ranked> ranked;
    for (std::size_t i = 0; i < per_image.size(); ++i) {
        report.ground_truths += per_image[i].ground_truths;
        for (std::size_t r = 0; r < per_image[i].scores.size(); ++r) ranked.push_back({per_image[i].scores[r], i, r});
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) { return a.score > b.score; });
    report.detections = ranked.size();

    for (std::size_t t = 0; t < kOksThresholds.size(); ++t) {
        std::vector<char> tp;
        tp.reserve(ranked.size());
        for (const auto& r : ranked) tp.push_back(per_image[r.image].matched[r.rank][t]);
        report.ap_per_threshold[t] = interpolated_ap(tp, report.ground_truths, &report.precision[t]);
    }
    report.ap = std::accumulate(report.ap_per_threshold.begin(), report.ap_per_threshold.end(), 0.0) /
                static_cast<double>(kOksThresholds.size());
    return report;
}


// Scale statistic -----------------------------------------------------------------------

/// Mean bbox area over image area, in percent, across all instances of `category`.
inline double scale_statistic(const std::vector<ImageRecord>& records, Category category) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& rec : records) {
        for (const auto& inst : rec.instances) {
            if (inst.category != category) continue;
            sum += inst.bbox.area() / rec.area();
            ++n;
        }
    }
    if (n == 0) throw InputError("no " + std::string(to_string(category)) + " instances for the scale statistic");
    return 100.0 * sum / static_cast<double>(n);
}


}  // namespace posefields
