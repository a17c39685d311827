#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>


namespace posefields {


/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input document. `offset` is a byte offset for JSON input and a
/// 1-based line number for line-oriented formats (see `line`).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset, bool is_line = false)
        : Error(what), offset_(offset), is_line_(is_line) { }

    std::size_t offset() const { return offset_; }
    bool is_line() const { return is_line_; }

private:
    std::size_t offset_;
    bool is_line_;
};

/// Input that parsed but violates a model invariant.
class InputError : public Error {
public:
    using Error::Error;
};


enum class Category { human, animal, car, bicycle, lane };

inline constexpr Category kAllCategories[] = {
    Category::human, Category::animal, Category::car, Category::bicycle, Category::lane};

inline std::string_view to_string(Category c) {
    switch (c) {
    case Category::human: return "human";
    case Category::animal: return "animal";
    case Category::car: return "car";
    case Category::bicycle: return "bicycle";
    case Category::lane: return "lane";
    }
    return "unknown";
}

inline std::optional<Category> category_from_string(std::string_view name) {
    for (Category c : kAllCategories)
        if (to_string(c) == name) return c;
    return std::nullopt;
}


enum class Visibility : int { absent = 0, occluded = 1, visible = 2 };


struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }


struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    Visibility v = Visibility::absent;
    double confidence = 1.0;

    bool present() const { return v != Visibility::absent; }
    Point point() const { return {x, y}; }

    friend bool operator==(const Keypoint&, const Keypoint&) = default;
};


struct BBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double area() const { return w * h; }
    bool contains(Point p, double slack = 0.0) const {
        return p.x >= x - slack && p.x <= x + w + slack && p.y >= y - slack && p.y <= y + h + slack;
    }

    friend bool operator==(const BBox&, const BBox&) = default;
};

/// Tight box around the present keypoints; an all-zero box when none is present.
inline BBox bbox_of(const std::vector<Keypoint>& keypoints) {
    double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
    double x1 = -x0, y1 = -x0;
    for (const auto& k : keypoints) {
        if (!k.present()) continue;
        x0 = std::min(x0, k.x);
        y0 = std::min(y0, k.y);
        x1 = std::max(x1, k.x);
        y1 = std::max(y1, k.y);
    }
    if (x0 > x1) return {};
    return {x0, y0, x1 - x0, y1 - y0};
}


struct Instance {
    Category category = Category::human;
    std::vector<Keypoint> keypoints;
    double score = 1.0;
    BBox bbox;

    std::size_t present_count() const {
        return static_cast<std::size_t>(std::count_if(
            keypoints.begin(), keypoints.end(), [](const Keypoint& k) { return k.present(); }));
    }

    friend bool operator==(const Instance&, const Instance&) = default;
};


struct ImageRecord {
    std::string image_id;
    int width = 0;
    int height = 0;
    std::optional<std::string> scenario;
    std::vector<Instance> instances;

    double area() const { return static_cast<double>(width) * static_cast<double>(height); }

    /// Keypoints may sit up to half an image outside the frame.
    bool in_extended_frame(Point p) const {
        return p.x >= -0.5 * width && p.x <= 1.5 * width && p.y >= -0.5 * height &&
               p.y <= 1.5 * height;
    }

    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};


}  // namespace posefields
