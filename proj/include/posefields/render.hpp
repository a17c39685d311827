#pragma once

#include <optional>
#include <ostream>
#include <string>

#include "posefields/ingest.hpp"
#include "posefields/schema.hpp"
#include "posefields/types.hpp"


namespace posefields {


inline const char* category_color(Category c) {
    switch (c) {
    case Category::human: return "#1f5fd6";
    case Category::animal: return "#2ca02c";
    case Category::car: return "#8e44ad";
    case Category::bicycle: return "#d62728";
    case Category::lane: return "#ff8c00";
    }
    return "#000000";
}

/// SVG overlay of a record's skeletons. `background` is referenced, not embedded.
inline void render_svg(std::ostream& os, const ImageRecord& record,
                       const std::optional<std::string>& background = std::nullopt) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" xmlns:xlink=\"http://www.w3.org/1999/xlink\" width=\""
       << record.width << "\" height=\"" << record.height << "\" viewBox=\"0 0 " << record.width << ' '
       << record.height << "\">\n";
    if (background) {
        os << "  <image xlink:href=" << nlohmann::json(*background).dump() << " x=\"0\" y=\"0\" width=\""
           << record.width << "\" height=\"" << record.height << "\"/>\n";
    } else {
        os << "  <rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    }
    for (const auto& inst : record.instances) {
        const char* color = category_color(inst.category);
        const auto schema = inst.category == Category::lane
                                ? builtin_schema(Category::lane, std::max<std::size_t>(2, inst.keypoints.size()))
                                : builtin_schema(inst.category);
        os << "  <g stroke=\"" << color << "\" fill=\"" << color << "\" data-category=\"" << to_string(inst.category)
           << "\" data-score=\"" << format_fixed(inst.score) << "\">\n";
        if (schema.keypoint_count() == inst.keypoints.size()) {
            for (const auto& [a, b] : schema.edges) {
                const auto& ka = inst.keypoints[a];
                const auto& kb = inst.keypoints[b];
                if (!ka.present() || !kb.present()) continue;
                os << "    <line x1=\"" << format_fixed(ka.x) << "\" y1=\"" << format_fixed(ka.y) << "\" x2=\""
                   << format_fixed(kb.x) << "\" y2=\"" << format_fixed(kb.y) << "\" stroke-width=\"2\"/>\n";
            }
        }
        for (const auto& k : inst.keypoints) {
            if (!k.present()) continue;
            os << "    <circle cx=\"" << format_fixed(k.x) << "\" cy=\"" << format_fixed(k.y) << "\" r=\"3\"/>\n";
        }
        os << "  </g>\n";
    }
    os << "</svg>\n";
}


}  // namespace posefields
