#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "posefields/schema.hpp"
#include "posefields/types.hpp"


namespace posefields {


struct FieldConfig {
    int stride = 16;          ///< image pixels per field cell
    int window = 4;           ///< side of the square cell block written per target
    double sigma_floor = 1.0; ///< lower bound of the spread channel, in pixels

    void validate() const {
        if (stride < 1) throw InputError("stride must be positive");
        if (window < 1) throw InputError("window must be at least 1");
        if (!(sigma_floor >= 0.0)) throw InputError("sigma floor must be non-negative");
    }
};

inline constexpr std::size_t kCifChannels = 5;
inline constexpr std::size_t kCafChannels = 9;

inline constexpr std::array<const char*, kCifChannels> kCifChannelNames = {
    "confidence", "dx", "dy", "spread", "scale"};
inline constexpr std::array<const char*, kCafChannels> kCafChannelNames = {
    "confidence", "dx1", "dy1", "dx2", "dy2", "spread1", "spread2", "scale1", "scale2"};

namespace cif {
enum : std::size_t { confidence = 0, dx, dy, spread, scale };
}
namespace caf {
enum : std::size_t { confidence = 0, dx1, dy1, dx2, dy2, spread1, spread2, scale1, scale2 };
}


/// Dense CIF [K][5][rows][cols] and CAF [E][9][rows][cols] maps for one image.
/// Offsets, spreads and scales are in cell units; cell (r, c) has its center at
/// pixel (c * stride, r * stride).
template <typename Real>
struct BasicFieldStack {
    FieldConfig config;
    std::string image_id;
    int image_width = 0;
    int image_height = 0;
    std::size_t keypoints = 0;
    std::size_t edges = 0;
    int rows = 0;
    int cols = 0;
    std::vector<Real> cif;
    std::vector<Real> caf;

    static BasicFieldStack zeros(std::size_t keypoint_count, std::size_t edge_count, int width,
                                 int height, const FieldConfig& cfg) {
        cfg.validate();
        if (width <= 0 || height <= 0) throw InputError("image dimensions must be positive");
        BasicFieldStack s;
        s.config = cfg;
        s.image_width = width;
        s.image_height = height;
        s.keypoints = keypoint_count;
        s.edges = edge_count;
        s.rows = (height + cfg.stride - 1) / cfg.stride;
        s.cols = (width + cfg.stride - 1) / cfg.stride;
        s.cif.assign(keypoint_count * kCifChannels * s.plane(), Real(0));
        s.caf.assign(edge_count * kCafChannels * s.plane(), Real(0));
        return s;
    }

    std::size_t plane() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }

    std::size_t cif_index(std::size_t k, std::size_t ch, int r, int c) const {
        return ((k * kCifChannels + ch) * rows + static_cast<std::size_t>(r)) * cols + static_cast<std::size_t>(c);
    }
    std::size_t caf_index(std::size_t e, std::size_t ch, int r, int c) const {
        return ((e * kCafChannels + ch) * rows + static_cast<std::size_t>(r)) * cols + static_cast<std::size_t>(c);
    }

    Real& cif_at(std::size_t k, std::size_t ch, int r, int c) { return cif[cif_index(k, ch, r, c)]; }
    Real cif_at(std::size_t k, std::size_t ch, int r, int c) const { return cif[cif_index(k, ch, r, c)]; }
    Real& caf_at(std::size_t e, std::size_t ch, int r, int c) { return caf[caf_index(e, ch, r, c)]; }
    Real caf_at(std::size_t e, std::size_t ch, int r, int c) const { return caf[caf_index(e, ch, r, c)]; }

    bool in_grid(int r, int c) const { return r >= 0 && c >= 0 && r < rows && c < cols; }
};

using FieldStack = BasicFieldStack<double>;


namespace detail {

/// First row/column of the window block closest to cell coordinate `u`.
inline int block_start(double u, int window) {
    return static_cast<int>(std::floor(u - 0.5 * (window - 1) + 0.5));
}

inline void check_instances(const ImageRecord& record, const SkeletonSchema& schema) {
    for (const auto& inst : record.instances) {
        if (inst.keypoints.size() != schema.keypoint_count()) {
            throw InputError("instance keypoint count " + std::to_string(inst.keypoints.size()) +
                             " does not match schema (" + std::to_string(schema.keypoint_count()) + ")");
        }
    }
}

struct InstanceScale {
    double scale;   // cells
    double spread;  // cells
};

inline InstanceScale instance_scale(const Instance& inst, const FieldConfig& cfg) {
    const double stride = cfg.stride;
    const double scale = std::sqrt(std::max(0.0, inst.bbox.area())) / stride;
    return {scale, std::max(cfg.sigma_floor / stride, scale / 4.0)};
}

inline double point_segment_distance2(double px, double py, double ax, double ay, double bx, double by) {
    const double vx = bx - ax, vy = by - ay;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = ax + t * vx - px, dy = ay + t * vy - py;
    return dx * dx + dy * dy;
}

template <typename Real>
void write_cif(BasicFieldStack<Real>& fs, std::size_t k, const Keypoint& kp, InstanceScale sc) {
    const double stride = fs.config.stride;
    const int w = fs.config.window;
    const int r0 = block_start(kp.y / stride, w);
    const int c0 = block_start(kp.x / stride, w);
    for (int r = r0; r < r0 + w; ++r) {
        for (int c = c0; c < c0 + w; ++c) {
            if (!fs.in_grid(r, c)) continue;
            const double dx = (kp.x - c * stride) / stride;
            const double dy = (kp.y - r * stride) / stride;
            if (fs.cif_at(k, cif::confidence, r, c) > 0) {
                const double ox = fs.cif_at(k, cif::dx, r, c), oy = fs.cif_at(k, cif::dy, r, c);
                if (!(dx * dx + dy * dy < ox * ox + oy * oy)) continue;
            }
            fs.cif_at(k, cif::confidence, r, c) = Real(1);
            fs.cif_at(k, cif::dx, r, c) = static_cast<Real>(dx);
            fs.cif_at(k, cif::dy, r, c) = static_cast<Real>(dy);
            fs.cif_at(k, cif::spread, r, c) = static_cast<Real>(sc.spread);
            fs.cif_at(k, cif::scale, r, c) = static_cast<Real>(sc.scale);
        }
    }
}

template <typename Real>
void write_caf(BasicFieldStack<Real>& fs, std::size_t e, const Keypoint& a, const Keypoint& b,
               InstanceScale sc) {
    const double stride = fs.config.stride;
    const int w = fs.config.window;
    // cell-unit endpoints
    const double ax = a.x / stride, ay = a.y / stride, bx = b.x / stride, by = b.y / stride;
    const double len = std::hypot(bx - ax, by - ay);
    const double mx = 0.5 * (ax + bx), my = 0.5 * (ay + by);
    const double ux = len > 0 ? (bx - ax) / len : 0.0, uy = len > 0 ? (by - ay) / len : 0.0;
    const int steps = static_cast<int>(std::floor(0.5 * len));

    for (int s = -steps; s <= steps; ++s) {
        const double sx = mx + s * ux, sy = my + s * uy;
        const int r0 = block_start(sy, w);
        const int c0 = block_start(sx, w);
        for (int r = r0; r < r0 + w; ++r) {
            for (int c = c0; c < c0 + w; ++c) {
                if (!fs.in_grid(r, c)) continue;
                const double d2 = point_segment_distance2(c, r, ax, ay, bx, by);
                if (fs.caf_at(e, caf::confidence, r, c) > 0) {
                    const double ex1 = c + fs.caf_at(e, caf::dx1, r, c), ey1 = r + fs.caf_at(e, caf::dy1, r, c);
                    const double ex2 = c + fs.caf_at(e, caf::dx2, r, c), ey2 = r + fs.caf_at(e, caf::dy2, r, c);
                    if (!(d2 < point_segment_distance2(c, r, ex1, ey1, ex2, ey2))) continue;
                }
                fs.caf_at(e, caf::confidence, r, c) = Real(1);
                fs.caf_at(e, caf::dx1, r, c) = static_cast<Real>((a.x - c * stride) / stride);
                fs.caf_at(e, caf::dy1, r, c) = static_cast<Real>((a.y - r * stride) / stride);
                fs.caf_at(e, caf::dx2, r, c) = static_cast<Real>((b.x - c * stride) / stride);
                fs.caf_at(e, caf::dy2, r, c) = static_cast<Real>((b.y - r * stride) / stride);
                fs.caf_at(e, caf::spread1, r, c) = static_cast<Real>(sc.spread);
                fs.caf_at(e, caf::spread2, r, c) = static_cast<Real>(sc.spread);
                fs.caf_at(e, caf::scale1, r, c) = static_cast<Real>(sc.scale);
                fs.caf_at(e, caf::scale2, r, c) = static_cast<Real>(sc.scale);
            }
        }
    }
}

}  // namespace detail


/// Writes CIF targets: every present keypoint fills the window x window block
/// nearest to it with confidence 1 and exact sub-cell offsets. Where two
/// keypoints of one type compete for a cell, the closer one wins.
template <typename Real = double>
void encode_cif_into(BasicFieldStack<Real>& fs, const ImageRecord& record, const SkeletonSchema& schema) {
    detail::check_instances(record, schema);
    for (const auto& inst : record.instances) {
        const auto sc = detail::instance_scale(inst, fs.config);
        for (std::size_t k = 0; k < inst.keypoints.size(); ++k) {
            if (inst.keypoints[k].present()) detail::write_cif(fs, k, inst.keypoints[k], sc);
        }
    }
}

/// Writes CAF targets for every edge whose endpoints are both present: the
/// window block around the edge midpoint and around 1-cell steps along the
/// segment, each cell carrying offsets to both endpoints.
template <typename Real = double>
void encode_caf_into(BasicFieldStack<Real>& fs, const ImageRecord& record, const SkeletonSchema& schema) {
    detail::check_instances(record, schema);
    for (const auto& inst : record.instances) {
        const auto sc = detail::instance_scale(inst, fs.config);
        for (std::size_t e = 0; e < schema.edges.size(); ++e) {
            const auto& a = inst.keypoints[schema.edges[e].first];
            const auto& b = inst.keypoints[schema.edges[e].second];
            if (a.present() && b.present()) detail::write_caf(fs, e, a, b, sc);
        }
    }
}

/// Writes CIF targets only; the CAF maps keep their full shape but stay zero.
inline FieldStack encode_cif(const ImageRecord& record, const SkeletonSchema& schema, const FieldConfig& cfg = {}) {
    auto fs = FieldStack::zeros(schema.keypoint_count(), schema.edge_count(), record.width, record.height, cfg);
    fs.image_id = record.image_id;
    encode_cif_into(fs, record, schema);
    return fs;
}

inline FieldStack encode_caf(const ImageRecord& record, const SkeletonSchema& schema, const FieldConfig& cfg = {}) {
    auto fs = FieldStack::zeros(schema.keypoint_count(), schema.edge_count(), record.width, record.height, cfg);
    fs.image_id = record.image_id;
    encode_caf_into(fs, record, schema);
    return fs;
}

inline FieldStack encode(const ImageRecord& record, const SkeletonSchema& schema, const FieldConfig& cfg = {}) {
    auto fs = FieldStack::zeros(schema.keypoint_count(), schema.edge_count(), record.width, record.height, cfg);
    fs.image_id = record.image_id;
    encode_cif_into(fs, record, schema);
    encode_caf_into(fs, record, schema);
    return fs;
}


// Rescaling ---------------------------------------------------------------------

inline constexpr int kInferenceLongEdge = 621;

/// Scales all geometry by `factor` and sets the new canvas size.
inline ImageRecord scale_record(const ImageRecord& record, double factor, int width, int height) {
    ImageRecord out = record;
    out.width = width;
    out.height = height;
    for (auto& inst : out.instances) {
        for (auto& k : inst.keypoints) {
            k.x *= factor;
            k.y *= factor;
        }
        inst.bbox = {inst.bbox.x * factor, inst.bbox.y * factor, inst.bbox.w * factor, inst.bbox.h * factor};
    }
    return out;
}

/// Uniformly rescales so the longer side equals `long_edge`; the shorter side
/// is rounded half-to-even.
inline ImageRecord rescale_to_long_edge(const ImageRecord& record, int long_edge = kInferenceLongEdge) {
    if (record.width <= 0 || record.height <= 0) throw InputError("image dimensions must be positive");
    const int longest = std::max(record.width, record.height);
    if (longest == long_edge) return record;
    const double factor = static_cast<double>(long_edge) / longest;
    const int w = record.width >= record.height
                      ? long_edge
                      : std::max(1, static_cast<int>(std::nearbyint(record.width * factor)));
    const int h = record.height > record.width
                      ? long_edge
                      : std::max(1, static_cast<int>(std::nearbyint(record.height * factor)));
    return scale_record(record, factor, w, h);
}


// File format -------------------------------------------------------------------

inline constexpr const char* kFieldsFormatName = "posefields-fields";
inline constexpr int kFieldsFormatVersion = 1;

struct FieldsFileHeader {
    std::string schema;
    std::string schema_hash;
};

namespace detail {

inline void write_f32_le(std::ostream& os, double value) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
    const char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                           static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
    os.write(bytes, 4);
}

inline float read_f32_le(const unsigned char* p) {
    const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                               (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    return std::bit_cast<float>(bits);
}

}  // namespace detail

/// One JSON header line, then the CIF and CAF payloads as little-endian
/// float32 in row-major [type][channel][row][col] order.
template <typename Real>
void write_fields(std::ostream& os, const BasicFieldStack<Real>& fs, const SkeletonSchema& schema) {
    nlohmann::json header = {
        {"format", kFieldsFormatName},
        {"version", kFieldsFormatVersion},
        {"image_id", fs.image_id},
        {"image_size", {fs.image_width, fs.image_height}},
        {"stride", fs.config.stride},
        {"window", fs.config.window},
        {"sigma_floor", fs.config.sigma_floor},
        {"schema", std::string(to_string(schema.category))},
        {"schema_hash", schema_hash(schema)},
        {"shape",
         {{"cif", {fs.keypoints, kCifChannels, fs.rows, fs.cols}},
          {"caf", {fs.edges, kCafChannels, fs.rows, fs.cols}}}},
        {"channel_names",
         {{"cif", std::vector<std::string>(kCifChannelNames.begin(), kCifChannelNames.end())},
          {"caf", std::vector<std::string>(kCafChannelNames.begin(), kCafChannelNames.end())}}},
    };
    os << header.dump() << '\n';
    for (Real v : fs.cif) detail::write_f32_le(os, v);
    for (Real v : fs.caf) detail::write_f32_le(os, v);
    if (!os) throw Error("failed to write field stack");
}

inline FieldStack read_fields(std::istream& is, FieldsFileHeader* header_out = nullptr) {
    std::string line;
    if (!std::getline(is, line)) throw ParseError("missing field stack header", 0);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed field stack header: ") + e.what(), e.byte);
    }

    FieldStack fs;
    try {
        if (header.at("format").get<std::string>() != kFieldsFormatName) {
            throw InputError("not a posefields field stack");
        }
        if (header.at("version").get<int>() != kFieldsFormatVersion) {
            throw InputError("unsupported field stack version");
        }
        FieldConfig cfg;
        cfg.stride = header.at("stride").get<int>();
        cfg.window = header.at("window").get<int>();
        cfg.sigma_floor = header.at("sigma_floor").get<double>();
        const auto size = header.at("image_size");
        const auto& cif_shape = header.at("shape").at("cif");
        const auto& caf_shape = header.at("shape").at("caf");
        fs = FieldStack::zeros(cif_shape.at(0).get<std::size_t>(), caf_shape.at(0).get<std::size_t>(),
                               size.at(0).get<int>(), size.at(1).get<int>(), cfg);
        if (cif_shape.at(1).get<std::size_t>() != kCifChannels || caf_shape.at(1).get<std::size_t>() != kCafChannels ||
            cif_shape.at(2).get<int>() != fs.rows || cif_shape.at(3).get<int>() != fs.cols ||
            caf_shape.at(2).get<int>() != fs.rows || caf_shape.at(3).get<int>() != fs.cols) {
            throw InputError("field stack shape inconsistent with image size and stride");
        }
        fs.image_id = header.at("image_id").get<std::string>();
        if (header_out) {
            header_out->schema = header.at("schema").get<std::string>();
            header_out->schema_hash = header.at("schema_hash").get<std::string>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("invalid field stack header: ") + e.what());
    }

    const std::size_t count = fs.cif.size() + fs.caf.size();
    std::vector<unsigned char> payload(count * 4);
    is.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (static_cast<std::size_t>(is.gcount()) != payload.size()) {
        throw ParseError("truncated field stack payload", line.size() + 1 + static_cast<std::size_t>(is.gcount()));
    }
    for (std::size_t i = 0; i < fs.cif.size(); ++i) fs.cif[i] = detail::read_f32_le(&payload[4 * i]);
    for (std::size_t i = 0; i < fs.caf.size(); ++i) {
        fs.caf[i] = detail::read_f32_le(&payload[4 * (fs.cif.size() + i)]);
    }
    return fs;
}


}  // namespace posefields
