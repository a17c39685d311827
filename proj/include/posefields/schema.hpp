#pragma once

#include <cstdio>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "posefields/random.hpp"
#include "posefields/types.hpp"


namespace posefields {


using Edge = std::pair<std::size_t, std::size_t>;

/// Named keypoints plus a directed edge list forming a connected skeleton.
/// `flip_pairs` lists left/right keypoints swapped by a horizontal flip.
struct SkeletonSchema {
    Category category = Category::human;
    std::vector<std::string> keypoint_names;
    std::vector<Edge> edges;
    std::vector<double> oks_kappas;
    std::vector<std::pair<std::size_t, std::size_t>> flip_pairs;

    std::size_t keypoint_count() const { return keypoint_names.size(); }
    std::size_t edge_count() const { return edges.size(); }

    friend bool operator==(const SkeletonSchema&, const SkeletonSchema&) = default;
};

inline constexpr std::size_t kDefaultLaneKeypoints = 24;
inline constexpr double kDefaultKappa = 0.1;


namespace detail {

// COCO per-keypoint sigmas; the OKS falloff constant is twice the sigma.
inline constexpr double kCocoSigmas[17] = {.026, .025, .025, .035, .035, .079, .079, .072, .072,
                                           .062, .062, .107, .107, .087, .087, .089, .089};

inline SkeletonSchema human_schema() {
    SkeletonSchema s;
    s.category = Category::human;
    s.keypoint_names = {"nose",        "left_eye",       "right_eye",  "left_ear",
                        "right_ear",   "left_shoulder",  "right_shoulder", "left_elbow",
                        "right_elbow", "left_wrist",     "right_wrist", "left_hip",
                        "right_hip",   "left_knee",      "right_knee", "left_ankle",
                        "right_ankle"};
    s.edges = {{15, 13}, {13, 11}, {16, 14}, {14, 12}, {11, 12}, {5, 11}, {6, 12},
               {5, 6},   {5, 7},   {6, 8},   {7, 9},   {8, 10},  {1, 2},  {0, 1},
               {0, 2},   {1, 3},   {2, 4},   {3, 5},   {4, 6}};
    for (double sigma : kCocoSigmas) s.oks_kappas.push_back(2.0 * sigma);
    s.flip_pairs = {{1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 10}, {11, 12}, {13, 14}, {15, 16}};
    return s;
}

// AnimalPose 20-keypoint layout.
inline SkeletonSchema animal_schema() {
    SkeletonSchema s;
    s.category = Category::animal;
    s.keypoint_names = {"nose",           "left_eye",        "right_eye",       "left_ear_base",
                        "right_ear_base", "throat",          "tail_base",       "withers",
                        "left_front_elbow", "right_front_elbow", "left_back_elbow", "right_back_elbow",
                        "left_front_knee",  "right_front_knee",  "left_back_knee",  "right_back_knee",
                        "left_front_paw",   "right_front_paw",   "left_back_paw",   "right_back_paw"};
    s.edges = {{0, 1},  {0, 2},   {1, 3},   {2, 4},   {0, 5},   {5, 7},   {7, 6},
               {7, 8},  {8, 12},  {12, 16}, {7, 9},   {9, 13},  {13, 17}, {6, 10},
               {10, 14}, {14, 18}, {6, 11}, {11, 15}, {15, 19}};
    s.oks_kappas.assign(20, kDefaultKappa);
    s.flip_pairs = {{1, 2},   {3, 4},   {8, 9},   {10, 11},
                    {12, 13}, {14, 15}, {16, 17}, {18, 19}};
    return s;
}

// ApolloCar3D numbers its 66 keypoints; names keep that numbering.
inline SkeletonSchema car_schema() {
    SkeletonSchema s;
    s.category = Category::car;
    for (int i = 0; i < 66; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "car_%02d", i);
        s.keypoint_names.emplace_back(buf);
    }
    for (std::size_t i = 0; i + 1 < 66; ++i) s.edges.emplace_back(i, i + 1);
    s.oks_kappas.assign(66, kDefaultKappa);
    return s;
}

inline SkeletonSchema bicycle_schema() {
    SkeletonSchema s;
    s.category = Category::bicycle;
    s.keypoint_names = {"rear_wheel_back",  "rear_wheel_center", "front_wheel_front",
                        "front_wheel_center", "seat",            "handlebar_center"};
    // rear wheel -> seat -> handlebar -> front wheel
    s.edges = {{0, 1}, {1, 4}, {4, 5}, {5, 3}, {3, 2}};
    s.oks_kappas.assign(6, kDefaultKappa);
    return s;
}

inline SkeletonSchema lane_schema(std::size_t m) {
    SkeletonSchema s;
    s.category = Category::lane;
    for (std::size_t i = 0; i < m; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "lane_%02zu", i);
        s.keypoint_names.emplace_back(buf);
    }
    for (std::size_t i = 0; i + 1 < m; ++i) s.edges.emplace_back(i, i + 1);
    s.oks_kappas.assign(m, kDefaultKappa);
    return s;
}

}  // namespace detail


/// Built-in schema for `category`. `lane_cardinality` only affects lanes.
inline SkeletonSchema builtin_schema(Category category,
                                     std::size_t lane_cardinality = kDefaultLaneKeypoints) {
    switch (category) {
    case Category::human: return detail::human_schema();
    case Category::animal: return detail::animal_schema();
    case Category::car: return detail::car_schema();
    case Category::bicycle: return detail::bicycle_schema();
    case Category::lane:
        if (lane_cardinality < 2) throw InputError("lane cardinality must be at least 2");
        return detail::lane_schema(lane_cardinality);
    }
    throw InputError("unknown category");
}

/// Looks up a built-in schema by category name ("human", "lane", ...).
inline SkeletonSchema builtin_schema(std::string_view name,
                                     std::size_t lane_cardinality = kDefaultLaneKeypoints) {
    auto c = category_from_string(name);
    if (!c) throw InputError("unknown schema '" + std::string(name) + "'");
    return builtin_schema(*c, lane_cardinality);
}


/// Returns one message per violated invariant; empty means valid.
inline std::vector<std::string> validate_schema(const SkeletonSchema& schema) {
    std::vector<std::string> errors;
    const std::size_t k = schema.keypoint_count();
    if (k == 0) {
        errors.emplace_back("schema has no keypoints");
        return errors;
    }

    std::set<std::string> seen;
    for (const auto& name : schema.keypoint_names) {
        if (!seen.insert(name).second) {
            errors.push_back("duplicate name: " + name);
        }
    }

    bool edges_in_range = true;
    for (const auto& [a, b] : schema.edges) {
        if (a >= k || b >= k) {
            errors.push_back("edge index out of range: (" + std::to_string(a) + "," +
                             std::to_string(b) + ")");
            edges_in_range = false;
        } else if (a == b) {
            errors.push_back("self-loop edge at " + std::to_string(a));
        }
    }

    if (edges_in_range) {
        std::vector<std::size_t> parent(k);
        std::iota(parent.begin(), parent.end(), std::size_t{0});
        auto find = [&](std::size_t i) {
            while (parent[i] != i) i = parent[i] = parent[parent[i]];
            return i;
        };
        for (const auto& [a, b] : schema.edges) parent[find(a)] = find(b);
        std::size_t roots = 0;
        for (std::size_t i = 0; i < k; ++i) roots += find(i) == i;
        if (roots != 1) errors.emplace_back("skeleton graph is not connected");
    }

    if (schema.oks_kappas.size() != k) {
        errors.emplace_back("kappa count does not match keypoint count");
    }
    for (double kappa : schema.oks_kappas) {
        if (!(kappa > 0.0) || !std::isfinite(kappa)) {
            errors.emplace_back("kappas must be positive and finite");
            break;
        }
    }

    for (const auto& [a, b] : schema.flip_pairs) {
        if (a >= k || b >= k || a == b) {
            errors.emplace_back("invalid flip pair");
            break;
        }
    }

    if (schema.category == Category::lane) {
        bool chain = schema.edges.size() + 1 == k && k >= 2;
        for (std::size_t i = 0; chain && i < schema.edges.size(); ++i) {
            chain = schema.edges[i] == Edge{i, i + 1};
        }
        if (!chain) errors.emplace_back("lane must be a chain");
    }

    if (schema.category == Category::bicycle) {
        const std::vector<std::string> expected = {"rear_wheel_back",    "rear_wheel_center",
                                                   "front_wheel_front",  "front_wheel_center",
                                                   "seat",               "handlebar_center"};
        if (schema.keypoint_names != expected) {
            errors.emplace_back("bicycle keypoints must be the six wheel/seat/handlebar points");
        }
    }
    return errors;
}


inline nlohmann::json schema_to_json(const SkeletonSchema& schema) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [a, b] : schema.edges) edges.push_back({a, b});
    nlohmann::json flips = nlohmann::json::array();
    for (const auto& [a, b] : schema.flip_pairs) flips.push_back({a, b});
    return {{"category", std::string(to_string(schema.category))},
            {"keypoints", schema.keypoint_names},
            {"edges", edges},
            {"kappas", schema.oks_kappas},
            {"flip_pairs", flips}};
}

inline SkeletonSchema schema_from_json(const nlohmann::json& doc) {
    try {
        SkeletonSchema s;
        auto category = category_from_string(doc.at("category").get<std::string>());
        if (!category) throw InputError("unknown schema category");
        s.category = *category;
        s.keypoint_names = doc.at("keypoints").get<std::vector<std::string>>();
        for (const auto& e : doc.at("edges")) {
            s.edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
        }
        s.oks_kappas = doc.at("kappas").get<std::vector<double>>();
        if (doc.contains("flip_pairs")) {
            for (const auto& e : doc.at("flip_pairs")) {
                s.flip_pairs.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
            }
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("invalid schema document: ") + e.what());
    }
}

/// Stable 64-bit fingerprint of the schema's JSON form, printed as 16 hex digits.
inline std::string schema_hash(const SkeletonSchema& schema) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(hash_string(schema_to_json(schema).dump())));
    return buf;
}


}  // namespace posefields
