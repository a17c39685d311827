// Resamples two hand-drawn lanes to 24 keypoints, encodes them into CIF/CAF
// fields at stride 16, decodes the fields again and scores the result.

#include <iostream>

#include "posefields/posefields.hpp"

using namespace posefields;

int main() {
    const char* lines = "300 590 380 470 450 360 520 250\n"
                        "1100 590 1000 470 920 360 850 250\n";
    const int width = 1640, height = 590;

    ImageRecord gt;
    gt.image_id = "sample";
    gt.width = width;
    gt.height = height;
    for (const auto& poly : parse_culane_lines(lines, width, height)) {
        gt.instances.push_back(lane_instance(resample_even(poly, kDefaultLaneKeypoints)));
    }

    const auto schema = builtin_schema(Category::lane);
    const auto fields = encode(gt, schema);
    std::cout << "field grid " << fields.rows << "x" << fields.cols << ", " << fields.keypoints
              << " keypoint maps, " << fields.edges << " edge maps\n";

    ImageRecord pred = gt;
    pred.instances = decode(fields, schema);
    std::cout << "decoded " << pred.instances.size() << " lanes\n";

    const auto report = evaluate_lanes({pred}, {gt});
    std::cout << "F1 " << report.prf.f1 << " (tp " << report.counts.tp << ", fp " << report.counts.fp
              << ", fn " << report.counts.fn << ")\n";
    write_records({pred}, std::cout);
    std::cout << '\n';
    return 0;
}
