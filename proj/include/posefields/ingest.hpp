#pragma once

#include <cctype>
#include <charconv>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "posefields/lane_geometry.hpp"
#include "posefields/schema.hpp"
#include "posefields/types.hpp"


namespace posefields {


inline constexpr int kRecordFormatVersion = 1;

/// Visible keypoints may lie this far outside the annotated box before the
/// box is grown to contain them.
inline constexpr double kBBoxSlack = 2.0;


namespace detail {

inline nlohmann::json parse_json(std::string_view document) {
    try {
        return nlohmann::json::parse(document.begin(), document.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
    }
}

inline std::string id_string(const nlohmann::json& id) {
    if (id.is_string()) return id.get<std::string>();
    if (id.is_number_integer()) return std::to_string(id.get<long long>());
    if (id.is_number_unsigned()) return std::to_string(id.get<unsigned long long>());
    throw InputError("image id must be a string or an integer");
}

inline double finite_number(const nlohmann::json& value, const char* what) {
    if (!value.is_number()) throw InputError(std::string(what) + " must be a number");
    const double d = value.get<double>();
    if (!std::isfinite(d)) throw InputError(std::string(what) + " must be finite");
    return d;
}

inline Visibility visibility_from_int(long long v) {
    if (v < 0 || v > 2) throw InputError("visibility must be 0, 1 or 2");
    return static_cast<Visibility>(v);
}

}  // namespace detail


/// Fixed six-decimal rendering used by every canonical writer.
inline std::string format_fixed(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    std::string s(buf);
    if (s == "-0.000000") s = "0.000000";
    return s;
}

/// Grows `inst.bbox` to cover visible keypoints that fall outside it by more
/// than the slack. A missing (all-zero) box is replaced by the keypoint extent.
inline void enforce_bbox(Instance& inst) {
    if (inst.bbox == BBox{}) {
        inst.bbox = bbox_of(inst.keypoints);
        return;
    }
    BBox& b = inst.bbox;
    for (const Keypoint& k : inst.keypoints) {
        if (k.v != Visibility::visible || b.contains(k.point(), kBBoxSlack)) continue;
        const double x0 = std::min(b.x, k.x), y0 = std::min(b.y, k.y);
        const double x1 = std::max(b.x + b.w, k.x), y1 = std::max(b.y + b.h, k.y);
        b = {x0, y0, x1 - x0, y1 - y0};
    }
}


// Canonical record JSON --------------------------------------------------------

namespace detail {

inline void write_instance(std::ostream& os, const Instance& inst) {
    os << "{\"bbox\":[" << format_fixed(inst.bbox.x) << ',' << format_fixed(inst.bbox.y) << ','
       << format_fixed(inst.bbox.w) << ',' << format_fixed(inst.bbox.h) << "],";
    os << "\"category\":\"" << to_string(inst.category) << "\",";
    os << "\"keypoints\":[";
    for (std::size_t i = 0; i < inst.keypoints.size(); ++i) {
        const Keypoint& k = inst.keypoints[i];
        if (i) os << ',';
        os << '[' << format_fixed(k.x) << ',' << format_fixed(k.y) << ',' << static_cast<int>(k.v)
           << ',' << format_fixed(k.confidence) << ']';
    }
    os << "],\"score\":" << format_fixed(inst.score) << '}';
}

inline void write_record(std::ostream& os, const ImageRecord& rec) {
    os << "{\"format_version\":" << kRecordFormatVersion << ",\"height\":" << rec.height
       << ",\"image_id\":" << nlohmann::json(rec.image_id).dump() << ",\"instances\":[";
    for (std::size_t i = 0; i < rec.instances.size(); ++i) {
        if (i) os << ',';
        write_instance(os, rec.instances[i]);
    }
    os << ']';
    if (rec.scenario) os << ",\"scenario\":" << nlohmann::json(*rec.scenario).dump();
    os << ",\"width\":" << rec.width << '}';
}

inline Instance instance_from_json(const nlohmann::json& j) {
    Instance inst;
    auto category = category_from_string(j.at("category").get<std::string>());
    if (!category) throw InputError("unknown instance category");
    inst.category = *category;
    for (const auto& kp : j.at("keypoints")) {
        if (!kp.is_array() || kp.size() < 3 || kp.size() > 4) {
            throw InputError("keypoint must be [x, y, v] or [x, y, v, confidence]");
        }
        Keypoint k;
        k.x = finite_number(kp[0], "keypoint x");
        k.y = finite_number(kp[1], "keypoint y");
        k.v = visibility_from_int(kp[2].get<long long>());
        k.confidence = kp.size() == 4 ? finite_number(kp[3], "keypoint confidence") : 1.0;
        inst.keypoints.push_back(k);
    }
    inst.score = j.contains("score") ? finite_number(j.at("score"), "score") : 1.0;
    if (j.contains("bbox")) {
        const auto& b = j.at("bbox");
        if (!b.is_array() || b.size() != 4) throw InputError("bbox must be [x, y, w, h]");
        inst.bbox = {finite_number(b[0], "bbox"), finite_number(b[1], "bbox"),
                     finite_number(b[2], "bbox"), finite_number(b[3], "bbox")};
        if (inst.bbox.w < 0 || inst.bbox.h < 0) throw InputError("bbox extent must be >= 0");
    } else {
        inst.bbox = bbox_of(inst.keypoints);
    }
    return inst;
}

}  // namespace detail


/// Writes records as canonical JSON: sorted keys, six-decimal reals, no
/// whitespace. An empty list is written as "[]".
inline void write_records(const std::vector<ImageRecord>& records, std::ostream& sink) {
    sink << '[';
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (i) sink << ',';
        detail::write_record(sink, records[i]);
    }
    sink << ']';
    if (!sink) throw Error("failed to write records");
}

inline std::string records_to_string(const std::vector<ImageRecord>& records) {
    std::ostringstream os;
    write_records(records, os);
    return os.str();
}

/// Reads the canonical record format written by `write_records`.
inline std::vector<ImageRecord> parse_records(std::string_view document) {
    const auto doc = detail::parse_json(document);
    if (!doc.is_array()) throw ParseError("record document must be a JSON array", 0);
    std::vector<ImageRecord> out;
    try {
        for (const auto& r : doc) {
            if (r.contains("format_version") && r.at("format_version").get<int>() > kRecordFormatVersion) {
                throw InputError("unsupported record format version");
            }
            ImageRecord rec;
            rec.image_id = detail::id_string(r.at("image_id"));
            rec.width = r.at("width").get<int>();
            rec.height = r.at("height").get<int>();
            if (rec.width <= 0 || rec.height <= 0) throw InputError("image dimensions must be positive");
            if (r.contains("scenario") && !r.at("scenario").is_null()) {
                rec.scenario = r.at("scenario").get<std::string>();
            }
            for (const auto& inst : r.at("instances")) rec.instances.push_back(detail::instance_from_json(inst));
            out.push_back(std::move(rec));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("invalid record document: ") + e.what());
    }
    return out;
}


// COCO keypoints ----------------------------------------------------------------

struct CocoParseResult {
    std::vector<ImageRecord> records;
    std::size_t skipped = 0;
    std::vector<std::string> warnings;
};

/// COCO keypoint JSON (images + annotations). Annotations that do not fit the
/// schema are skipped and counted rather than failing the whole document.
inline CocoParseResult parse_coco_keypoints(std::string_view document, const SkeletonSchema& schema) {
    const auto doc = detail::parse_json(document);
    if (!doc.is_object() || !doc.contains("images") || !doc.at("images").is_array()) {
        throw ParseError("COCO document needs an \"images\" array", 0);
    }
    if (doc.contains("annotations") && !doc.at("annotations").is_array()) {
        throw ParseError("COCO \"annotations\" must be an array", 0);
    }

    CocoParseResult result;
    std::map<std::string, std::size_t> by_id;
    try {
        for (const auto& img : doc.at("images")) {
            ImageRecord rec;
            rec.image_id = detail::id_string(img.at("id"));
            rec.width = img.at("width").get<int>();
            rec.height = img.at("height").get<int>();
            if (rec.width <= 0 || rec.height <= 0) throw InputError("image dimensions must be positive");
            if (img.contains("scenario") && img.at("scenario").is_string()) {
                rec.scenario = img.at("scenario").get<std::string>();
            }
            if (!by_id.emplace(rec.image_id, result.records.size()).second) {
                throw InputError("duplicate image id " + rec.image_id);
            }
            result.records.push_back(std::move(rec));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("invalid COCO image entry: ") + e.what());
    }

    if (!doc.contains("annotations")) return result;
    std::size_t index = 0;
    for (const auto& ann : doc.at("annotations")) {
        const std::string where = "annotation " + std::to_string(index++);
        try {
            auto it = by_id.find(detail::id_string(ann.at("image_id")));
            if (it == by_id.end()) {
                result.warnings.push_back(where + ": unknown image id");
                ++result.skipped;
                continue;
            }
            ImageRecord& rec = result.records[it->second];
            if (ann.value("iscrowd", 0) != 0) {
                ++result.skipped;
                continue;
            }
            const auto& flat = ann.at("keypoints");
            if (!flat.is_array() || flat.size() != 3 * schema.keypoint_count()) {
                result.warnings.push_back(where + ": keypoint count mismatch");
                ++result.skipped;
                continue;
            }
            Instance inst;
            inst.category = schema.category;
            bool in_frame = true;
            for (std::size_t k = 0; k < schema.keypoint_count(); ++k) {
                Keypoint kp;
                kp.x = detail::finite_number(flat[3 * k], "keypoint x");
                kp.y = detail::finite_number(flat[3 * k + 1], "keypoint y");
                kp.v = detail::visibility_from_int(flat[3 * k + 2].get<long long>());
                if (kp.present() && !rec.in_extended_frame(kp.point())) in_frame = false;
                inst.keypoints.push_back(kp);
            }
            if (!in_frame) {
                result.warnings.push_back(where + ": keypoint outside image bounds");
                ++result.skipped;
                continue;
            }
            inst.score = ann.contains("score") ? detail::finite_number(ann.at("score"), "score") : 1.0;
            if (ann.contains("bbox")) {
                const auto& b = ann.at("bbox");
                if (!b.is_array() || b.size() != 4) throw InputError("bbox must be [x, y, w, h]");
                inst.bbox = {detail::finite_number(b[0], "bbox"), detail::finite_number(b[1], "bbox"),
                             detail::finite_number(b[2], "bbox"), detail::finite_number(b[3], "bbox")};
                if (inst.bbox.w < 0 || inst.bbox.h < 0) throw InputError("negative bbox extent");
            }
            enforce_bbox(inst);
            rec.instances.push_back(std::move(inst));
        } catch (const Error& e) {
            result.warnings.push_back(where + ": " + e.what());
            ++result.skipped;
        } catch (const nlohmann::json::exception& e) {
            result.warnings.push_back(where + ": " + e.what());
            ++result.skipped;
        }
    }
    return result;
}


// CULane ------------------------------------------------------------------------

/// One lane per non-empty line of whitespace-separated "x y" pairs.
inline std::vector<LanePolyline> parse_culane_lines(std::string_view text, int width, int height) {
    std::vector<LanePolyline> lanes;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;

        std::vector<double> values;
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
            if (i >= line.size()) break;
            std::size_t j = i;
            while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
            double value = 0.0;
            const char* first = line.data() + i;
            const char* last = line.data() + j;
            if (*first == '+') ++first;
            auto [ptr, ec] = std::from_chars(first, last, value);
            if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
                throw ParseError("non-numeric token '" + std::string(line.substr(i, j - i)) +
                                     "', line " + std::to_string(line_no),
                                 line_no, true);
            }
            values.push_back(value);
            i = j;
        }
        if (values.empty()) {
            if (end == text.size()) break;
            continue;
        }
        if (values.size() % 2 != 0) {
            throw ParseError("odd coordinate count, line " + std::to_string(line_no), line_no, true);
        }
        if (values.size() < 4) {
            throw ParseError("lane needs at least two points, line " + std::to_string(line_no), line_no, true);
        }
        std::vector<Point> pts;
        for (std::size_t k = 0; k < values.size(); k += 2) {
            Point p{values[k], values[k + 1]};
            if (p.x < -0.5 * width || p.x > 1.5 * width || p.y < -0.5 * height || p.y > 1.5 * height) {
                throw ParseError("point outside image bounds, line " + std::to_string(line_no), line_no, true);
            }
            pts.push_back(p);
        }
        lanes.push_back(LanePolyline::from_points(pts));
        if (end == text.size()) break;
    }
    return lanes;
}


// OpenLane ----------------------------------------------------------------------

struct OpenLaneFrame {
    std::vector<LanePolyline> lanes;
    std::size_t skipped = 0;
    std::optional<std::string> scenario;
    std::optional<std::string> file_path;
};

/// OpenLane per-frame JSON. `lane_lines[*].uv` becomes a polyline; the other
/// scalar lane fields are kept as string tags.
inline OpenLaneFrame parse_openlane_2d(std::string_view document) {
    const auto doc = detail::parse_json(document);
    if (!doc.is_object()) throw ParseError("OpenLane frame must be a JSON object", 0);

    OpenLaneFrame frame;
    if (doc.contains("scenario") && doc.at("scenario").is_string()) {
        frame.scenario = doc.at("scenario").get<std::string>();
    }
    if (doc.contains("file_path") && doc.at("file_path").is_string()) {
        frame.file_path = doc.at("file_path").get<std::string>();
    }
    if (!doc.contains("lane_lines")) return frame;
    const auto& lanes = doc.at("lane_lines");
    if (!lanes.is_array()) throw ParseError("\"lane_lines\" must be an array", 0);

    for (std::size_t li = 0; li < lanes.size(); ++li) {
        const auto& lane = lanes[li];
        if (!lane.is_object() || !lane.contains("uv") || !lane.at("uv").is_array() ||
            lane.at("uv").size() != 2) {
            ++frame.skipped;
            continue;
        }
        const auto& u = lane.at("uv")[0];
        const auto& v = lane.at("uv")[1];
        if (!u.is_array() || !v.is_array() || u.size() != v.size()) {
            throw InputError("mismatched uv lengths in lane " + std::to_string(li));
        }
        std::map<std::string, std::string> tags;
        for (const auto& [key, value] : lane.items()) {
            if (value.is_string()) tags[key] = value.get<std::string>();
            else if (value.is_number() || value.is_boolean()) tags[key] = value.dump();
        }
        std::vector<Point> pts;
        for (std::size_t k = 0; k < u.size(); ++k) {
            pts.push_back({detail::finite_number(u[k], "u"), detail::finite_number(v[k], "v")});
        }
        auto poly = LanePolyline::from_points(pts, std::move(tags));
        if (poly.points.size() < 2) {
            ++frame.skipped;
            continue;
        }
        frame.lanes.push_back(std::move(poly));
    }
    return frame;
}


}  // namespace posefields
