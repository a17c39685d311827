// posefields: command-line front end for the skeleton toolkit.
//
// Exit codes: 0 ok, 1 usage, 2 input format, 3 internal.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "posefields/posefields.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace posefields;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kInput = 2, kInternal = 3 };

struct GlobalOptions {
    std::string format = "json";
    std::uint64_t seed = 0;
    unsigned jobs = default_jobs();
    bool quiet = false;
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& payload) {
    if (path.empty() || path == "-") {
        std::cout << payload;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << payload;
    if (!out) throw Error("failed writing '" + path + "'");
}

SkeletonSchema schema_for(const std::string& name, std::size_t lane_keypoints) {
    return builtin_schema(name, lane_keypoints);
}

/// Canonical record arrays load directly; COCO documents (a JSON object) are
/// converted with the given schema.
std::vector<ImageRecord> load_annotations(const std::string& path, const SkeletonSchema* schema,
                                          const GlobalOptions& g) {
    const std::string text = read_file(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        if (!schema) throw InputError("'" + path + "' looks like COCO JSON; pass --category/--schema");
        auto parsed = parse_coco_keypoints(text, *schema);
        if (!g.quiet) {
            for (const auto& w : parsed.warnings) std::cerr << "warning: " << path << ": " << w << '\n';
        }
        return std::move(parsed.records);
    }
    return parse_records(text);
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

/// Aligned-column text table.
std::string format_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> widths(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) widths[c] = header[c].size();
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) widths[c] = std::max(widths[c], r[c].size());
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            os << (c + 1 == cells.size() ? cells[c] : pad(cells[c], widths[c] + 2));
        }
        os << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return os.str();
}

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

// schema ---------------------------------------------------------------------------------

struct SchemaCmd {
    std::string category = "human";
    std::size_t keypoints = kDefaultLaneKeypoints;
    std::string file;
    std::string out;

    int run(const GlobalOptions& g) const {
        SkeletonSchema schema;
        if (!file.empty()) {
            try {
                schema = schema_from_json(json::parse(read_file(file)));
            } catch (const json::parse_error& e) {
                throw ParseError(std::string("malformed schema JSON: ") + e.what(), e.byte);
            }
        } else {
            schema = schema_for(category, keypoints);
        }
        const auto errors = validate_schema(schema);
        if (!file.empty()) {
            json report = {{"valid", errors.empty()}, {"errors", errors}};
            write_output(out, g.format == "table" ? (errors.empty() ? "ok\n" : format_table({"error"}, [&] {
                std::vector<std::vector<std::string>> rows;
                for (const auto& e : errors) rows.push_back({e});
                return rows;
            }())) : report.dump() + "\n");
            return errors.empty() ? kOk : kInput;
        }
        if (g.format == "table") {
            std::vector<std::vector<std::string>> rows;
            for (std::size_t i = 0; i < schema.keypoint_count(); ++i) {
                rows.push_back({std::to_string(i), schema.keypoint_names[i], fixed4(schema.oks_kappas[i])});
            }
            write_output(out, format_table({"index", "keypoint", "kappa"}, rows));
        } else {
            write_output(out, schema_to_json(schema).dump() + "\n");
        }
        return kOk;
    }
};

// convert-lanes ---------------------------------------------------------------------------

struct ConvertLanesCmd {
    std::vector<std::string> inputs;
    std::string input_format = "auto";
    int width = 0;
    int height = 0;
    std::string method = "C";
    std::size_t keypoints = kDefaultLaneKeypoints;
    double interval = 20.0;
    std::string out;

    int run(const GlobalOptions& g) const {
        ResampleMethod m;
        if (method == "A") m = ResampleMethod::random;
        else if (method == "B") m = ResampleMethod::fixed_vertical;
        else if (method == "C") m = ResampleMethod::even;
        else throw UsageError("--method must be A, B or C");
        if (width <= 0 || height <= 0) throw UsageError("--width and --height must be positive");

        auto records = parallel_map(inputs.size(), g.jobs, [&](std::size_t fi) {
            const std::string& path = inputs[fi];
            const std::string text = read_file(path);
            std::string fmt = input_format;
            if (fmt == "auto") fmt = fs::path(path).extension() == ".json" ? "openlane" : "culane";

            ImageRecord rec;
            rec.image_id = fs::path(path).filename().string();
            rec.width = width;
            rec.height = height;
            std::vector<LanePolyline> lanes;
            if (fmt == "culane") {
                lanes = parse_culane_lines(text, width, height);
            } else if (fmt == "openlane") {
                auto frame = parse_openlane_2d(text);
                if (frame.file_path) rec.image_id = *frame.file_path;
                rec.scenario = frame.scenario;
                lanes = std::move(frame.lanes);
            } else {
                throw UsageError("--input-format must be auto, culane or openlane");
            }
            for (std::size_t li = 0; li < lanes.size(); ++li) {
                const auto lane_seed = mix_seed(mix_seed(g.seed, fi), li);
                rec.instances.push_back(lane_instance(resample(lanes[li], m, keypoints, lane_seed, interval)));
            }
            return rec;
        });

        if (g.format == "table") {
            std::vector<std::vector<std::string>> rows;
            for (const auto& r : records) rows.push_back({r.image_id, std::to_string(r.instances.size())});
            write_output(out, format_table({"image", "lanes"}, rows));
        } else {
            write_output(out, records_to_string(records) + "\n");
        }
        return kOk;
    }
};

// encode ----------------------------------------------------------------------------------

struct EncodeCmd {
    std::string annotations;
    std::string schema_name = "human";
    std::size_t keypoints = kDefaultLaneKeypoints;
    FieldConfig config;
    std::string image_id;
    int long_edge = 0;
    std::string out;

    int run(const GlobalOptions& g) const {
        if (out.empty()) throw UsageError("encode needs --out");
        const auto schema = schema_for(schema_name, keypoints);
        auto records = load_annotations(annotations, &schema, g);
        if (!image_id.empty()) {
            std::erase_if(records, [&](const ImageRecord& r) { return r.image_id != image_id; });
            if (records.empty()) throw InputError("image id '" + image_id + "' not found");
        }
        const bool single = records.size() == 1;
        if (!single) fs::create_directories(out);

        const auto payloads = parallel_map(records.size(), g.jobs, [&](std::size_t i) {
            const ImageRecord rec = long_edge > 0 ? rescale_to_long_edge(records[i], long_edge) : records[i];
            std::ostringstream os(std::ios::binary);
            write_fields(os, encode(rec, schema, config), schema);
            return os.str();
        });
        for (std::size_t i = 0; i < records.size(); ++i) {
            const std::string path = single ? out : (fs::path(out) / (records[i].image_id + ".fields")).string();
            write_output(path, payloads[i]);
            if (!g.quiet && !single) std::cerr << "wrote " << path << '\n';
        }
        return kOk;
    }
};

// decode ----------------------------------------------------------------------------------

struct DecodeCmd {
    std::vector<std::string> fields;
    std::string schema_name = "human";
    std::size_t keypoints = kDefaultLaneKeypoints;
    DecoderConfig config;
    std::string out;

    int run(const GlobalOptions& g) const {
        const auto schema = schema_for(schema_name, keypoints);
        const std::string expected_hash = schema_hash(schema);
        auto records = parallel_map(fields.size(), g.jobs, [&](std::size_t i) {
            std::ifstream in(fields[i], std::ios::binary);
            if (!in) throw InputError("cannot open '" + fields[i] + "'");
            FieldsFileHeader header;
            const auto stack = read_fields(in, &header);
            if (header.schema_hash != expected_hash) {
                throw InputError("'" + fields[i] + "' was encoded with a different schema (" + header.schema + ")");
            }
            ImageRecord rec;
            rec.image_id = stack.image_id;
            rec.width = stack.image_width;
            rec.height = stack.image_height;
            rec.instances = decode(stack, schema, config);
            return rec;
        });
        if (g.format == "table") {
            std::vector<std::vector<std::string>> rows;
            for (const auto& r : records) rows.push_back({r.image_id, std::to_string(r.instances.size())});
            write_output(out, format_table({"image", "instances"}, rows));
        } else {
            write_output(out, records_to_string(records) + "\n");
        }
        return kOk;
    }
};

// eval-lane -------------------------------------------------------------------------------

json counts_json(const Counts& c, const PRF& p) {
    return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

std::vector<std::string> counts_row(const std::string& label, const Counts& c, const PRF& p) {
    return {label, std::to_string(c.tp), std::to_string(c.fp), std::to_string(c.fn),
            fixed4(p.precision), fixed4(p.recall), fixed4(p.f1)};
}

struct EvalLaneCmd {
    std::string pred;
    std::string gt;
    LaneEvalConfig config;
    std::string matching = "greedy";
    bool by_scenario = false;
    std::string out;

    int run(const GlobalOptions& g) {
        if (matching == "greedy") config.matching = Matching::greedy;
        else if (matching == "hungarian") config.matching = Matching::hungarian;
        else throw UsageError("--matching must be greedy or hungarian");
        const auto lane = builtin_schema(Category::lane);
        const auto preds = load_annotations(pred, &lane, g);
        const auto gts = load_annotations(gt, &lane, g);
        const auto report = evaluate_lanes(preds, gts, config, g.jobs);
        if (!g.quiet) for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';

        if (g.format == "table") {
            std::vector<std::vector<std::string>> rows{counts_row("overall", report.counts, report.prf)};
            if (by_scenario) {
                for (const auto& [tag, s] : report.per_scenario) rows.push_back(counts_row(tag, s.counts, s.prf));
            }
            write_output(out, format_table({"split", "tp", "fp", "fn", "precision", "recall", "f1"}, rows));
        } else {
            json doc = counts_json(report.counts, report.prf);
            doc["line_width"] = config.line_width;
            doc["iou_threshold"] = config.iou_threshold;
            doc["matching"] = matching;
            if (by_scenario) {
                doc["per_scenario"] = json::object();
                for (const auto& [tag, s] : report.per_scenario) doc["per_scenario"][tag] = counts_json(s.counts, s.prf);
            }
            doc["warnings"] = report.warnings;
            write_output(out, doc.dump() + "\n");
        }
        return kOk;
    }
};

// eval-keypoints ------------------------------------------------------------------------------

struct EvalKeypointsCmd {
    std::string pred;
    std::string gt;
    std::string category = "human";
    std::string out;

    int run(const GlobalOptions& g) const {
        const auto schema = schema_for(category, kDefaultLaneKeypoints);
        const auto preds = load_annotations(pred, &schema, g);
        const auto gts = load_annotations(gt, &schema, g);
        const auto report = keypoint_ap(preds, gts, schema, g.jobs);
        if (g.format == "table") {
            std::vector<std::vector<std::string>> rows;
            for (std::size_t t = 0; t < kOksThresholds.size(); ++t) {
                rows.push_back({"AP@" + fixed4(kOksThresholds[t]).substr(0, 4), fixed4(report.ap_per_threshold[t])});
            }
            rows.push_back({"AP", fixed4(report.ap)});
            write_output(out, format_table({"metric", category}, rows));
        } else {
            json per = json::object();
            for (std::size_t t = 0; t < kOksThresholds.size(); ++t) {
                per[fixed4(kOksThresholds[t]).substr(0, 4)] = report.ap_per_threshold[t];
            }
            json doc = {{"category", category},
                        {"ap", report.ap},
                        {"ap_per_threshold", per},
                        {"ground_truths", report.ground_truths},
                        {"detections", report.detections}};
            write_output(out, doc.dump() + "\n");
        }
        return kOk;
    }
};

// stats ------------------------------------------------------------------------------------

struct StatsCmd {
    std::string annotations;
    std::string category = "human";
    std::string out;

    int run(const GlobalOptions& g) const {
        const auto cat = category_from_string(category);
        if (!cat) throw UsageError("unknown category '" + category + "'");
        const auto schema = schema_for(category, kDefaultLaneKeypoints);
        const auto records = load_annotations(annotations, &schema, g);
        std::size_t instances = 0;
        for (const auto& r : records)
            for (const auto& i : r.instances) instances += i.category == *cat;
        const double scale = scale_statistic(records, *cat);
        if (g.format == "table") {
            write_output(out, format_table({"category", "images", "instances", "scale_percent"},
                                           {{category, std::to_string(records.size()), std::to_string(instances),
                                             fixed4(scale)}}));
        } else {
            json doc = {{"category", category},
                        {"images", records.size()},
                        {"instances", instances},
                        {"scale_percent", scale}};
            write_output(out, doc.dump() + "\n");
        }
        return kOk;
    }
};

// mosaic -----------------------------------------------------------------------------------

struct MosaicCmd {
    std::string annotations;
    std::string category;
    std::size_t count = 1;
    int canvas_width = 640;
    int canvas_height = 640;
    std::string emit_plans;
    std::string out;

    int run(const GlobalOptions& g) const {
        std::optional<SkeletonSchema> schema;
        if (!category.empty()) schema = schema_for(category, kDefaultLaneKeypoints);
        const auto records = load_annotations(annotations, schema ? &*schema : nullptr, g);
        if (records.empty()) throw InputError("mosaic needs at least one annotated image");
        std::map<std::string, std::size_t> by_id;
        for (std::size_t i = 0; i < records.size(); ++i) by_id.emplace(records[i].image_id, i);
        const auto index = mosaic_index(records);

        struct Sample {
            ImageRecord record;
            json plan;
        };
        const auto samples = parallel_map(count, g.jobs, [&](std::size_t n) {
            const std::uint64_t sample_seed = mix_seed(g.seed, n);
            const auto sources = sample_mosaic_sources(index, sample_seed);
            std::array<const ImageRecord*, 4> recs{};
            std::array<std::pair<int, int>, 4> sizes{};
            for (std::size_t q = 0; q < 4; ++q) {
                recs[q] = &records[by_id.at(sources[q])];
                sizes[q] = {recs[q]->width, recs[q]->height};
            }
            Rng rng(mix_seed(sample_seed, 0x6d6f73));
            const auto plan = make_mosaic_plan(sources, sizes, canvas_width, canvas_height, rng);
            return Sample{compose_mosaic(plan, recs, "mosaic_" + std::to_string(n)), plan_to_json(plan)};
        });

        std::vector<ImageRecord> mosaics;
        json plans = json::array();
        for (const auto& s : samples) {
            mosaics.push_back(s.record);
            json p = s.plan;
            p["image_id"] = s.record.image_id;
            plans.push_back(std::move(p));
        }
        if (!emit_plans.empty()) write_output(emit_plans, plans.dump() + "\n");
        if (g.format == "table") {
            std::vector<std::vector<std::string>> rows;
            for (const auto& m : mosaics) rows.push_back({m.image_id, std::to_string(m.instances.size())});
            write_output(out, format_table({"mosaic", "instances"}, rows));
        } else {
            write_output(out, records_to_string(mosaics) + "\n");
        }
        return kOk;
    }
};

// plan-epochs -------------------------------------------------------------------------------

struct PlanEpochsCmd {
    std::string sizes;
    std::string weights;
    std::string names;
    std::size_t batch = 64;
    std::uint64_t epoch = 0;
    std::string out;

    int run(const GlobalOptions& g) const {
        const auto size_list = split_csv(sizes);
        const auto weight_list = split_csv(weights);
        auto name_list = names.empty() ? std::vector<std::string>{} : split_csv(names);
        if (size_list.empty() || size_list.size() != weight_list.size()) {
            throw UsageError("--sizes and --weights need the same number of entries");
        }
        if (name_list.empty()) {
            for (std::size_t i = 0; i < size_list.size(); ++i) name_list.push_back("task" + std::to_string(i));
        }
        if (name_list.size() != size_list.size()) throw UsageError("--names must match --sizes");

        std::vector<TaskSpec> tasks;
        for (std::size_t i = 0; i < size_list.size(); ++i) {
            TaskSpec t;
            t.name = name_list[i];
            try {
                t.size = std::stoull(size_list[i]);
                t.weight = std::stod(weight_list[i]);
            } catch (const std::exception&) {
                throw UsageError("invalid number in --sizes/--weights");
            }
            tasks.push_back(t);
        }
        const auto plan = plan_epoch(tasks, batch, g.seed, epoch);
        if (g.format == "table") {
            std::vector<std::vector<std::string>> rows;
            for (std::size_t i = 0; i < tasks.size(); ++i) {
                rows.push_back({tasks[i].name, std::to_string(tasks[i].size), fixed4(tasks[i].weight),
                                std::to_string(plan.quotas[i]), std::to_string(plan.quotas[i] * plan.batches.size()),
                                i == plan.limiting_task ? "yes" : ""});
            }
            write_output(out, format_table({"task", "size", "weight", "per_batch", "epoch_samples", "limiting"}, rows));
        } else {
            write_output(out, plan_to_json(plan).dump() + "\n");
        }
        return kOk;
    }
};

// render ---------------------------------------------------------------------------------

struct RenderCmd {
    std::string annotations;
    std::string category;
    std::string image_id;
    std::string background;
    std::string out;

    int run(const GlobalOptions& g) const {
        std::optional<SkeletonSchema> schema;
        if (!category.empty()) schema = schema_for(category, kDefaultLaneKeypoints);
        const auto records = load_annotations(annotations, schema ? &*schema : nullptr, g);
        const ImageRecord* rec = nullptr;
        for (const auto& r : records) {
            if (image_id.empty() || r.image_id == image_id) {
                rec = &r;
                break;
            }
        }
        if (!rec) throw InputError(image_id.empty() ? "no images to render" : "image id '" + image_id + "' not found");
        std::ostringstream os;
        render_svg(os, *rec, background.empty() ? std::nullopt : std::optional<std::string>(background));
        write_output(out, os.str());
        return kOk;
    }
};

}  // namespace


int main(int argc, char** argv) {
    CLI::App app{"posefields: skeleton schemas, lane keypoints, CIF/CAF fields, decoding and evaluation"};
    app.set_version_flag("--version", POSEFIELDS_VERSION);
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "table"}));
    app.add_option("--seed", g.seed, "Seed for randomized commands");
    app.add_option("--jobs", g.jobs, "Worker threads (default: POSEFIELDS_JOBS or 1)")->check(CLI::PositiveNumber);
    app.add_flag("--quiet", g.quiet, "Suppress warnings on stderr");

    int result = kOk;
    auto bind = [&result, &g](auto& cmd) { return [&result, &g, &cmd] { result = cmd.run(g); }; };

    SchemaCmd schema_cmd;
    auto* s = app.add_subcommand("schema", "Print or validate a skeleton schema");
    s->add_option("--category", schema_cmd.category)->check(CLI::IsMember({"human", "animal", "car", "bicycle", "lane"}));
    s->add_option("--keypoints", schema_cmd.keypoints, "Lane keypoint count")->check(CLI::Range(2, 100000));
    s->add_option("--file", schema_cmd.file, "Validate this schema JSON instead");
    s->add_option("--out", schema_cmd.out);
    s->callback(bind(schema_cmd));

    ConvertLanesCmd convert_cmd;
    auto* c = app.add_subcommand("convert-lanes", "Resample raw lane annotations to fixed keypoints");
    c->add_option("--input", convert_cmd.inputs, "CULane .lines.txt or OpenLane frame JSON")->required();
    c->add_option("--input-format", convert_cmd.input_format)->check(CLI::IsMember({"auto", "culane", "openlane"}));
    c->add_option("--width", convert_cmd.width, "Image width")->required();
    c->add_option("--height", convert_cmd.height, "Image height")->required();
    c->add_option("--method", convert_cmd.method, "A (random), B (fixed vertical), C (even)");
    c->add_option("--keypoints", convert_cmd.keypoints)->check(CLI::Range(2, 100000));
    c->add_option("--interval", convert_cmd.interval, "Vertical interval for method B (pixels)");
    c->add_option("--out", convert_cmd.out);
    c->callback(bind(convert_cmd));

    EncodeCmd encode_cmd;
    auto* e = app.add_subcommand("encode", "Encode annotations into CIF/CAF field files");
    e->add_option("--annotations", encode_cmd.annotations)->required();
    e->add_option("--schema", encode_cmd.schema_name)->check(CLI::IsMember({"human", "animal", "car", "bicycle", "lane"}));
    e->add_option("--keypoints", encode_cmd.keypoints, "Lane keypoint count")->check(CLI::Range(2, 100000));
    e->add_option("--stride", encode_cmd.config.stride)->check(CLI::PositiveNumber);
    e->add_option("--window", encode_cmd.config.window)->check(CLI::PositiveNumber);
    e->add_option("--sigma-floor", encode_cmd.config.sigma_floor);
    e->add_option("--image-id", encode_cmd.image_id);
    e->add_option("--long-edge", encode_cmd.long_edge, "Rescale to this long edge first (0 = off)");
    e->add_option("--out", encode_cmd.out, "Output file, or directory for several images")->required();
    e->callback(bind(encode_cmd));

    DecodeCmd decode_cmd;
    auto* d = app.add_subcommand("decode", "Decode field files into instances");
    d->add_option("--fields", decode_cmd.fields)->required();
    d->add_option("--schema", decode_cmd.schema_name)->check(CLI::IsMember({"human", "animal", "car", "bicycle", "lane"}));
    d->add_option("--keypoints", decode_cmd.keypoints, "Lane keypoint count")->check(CLI::Range(2, 100000));
    d->add_option("--seed-threshold", decode_cmd.config.seed_threshold);
    d->add_option("--keypoint-threshold", decode_cmd.config.keypoint_threshold);
    d->add_option("--occupancy-radius", decode_cmd.config.occupancy_radius_cells);
    d->add_option("--max-instances", decode_cmd.config.max_instances);
    d->add_option("--out", decode_cmd.out);
    d->callback(bind(decode_cmd));

    EvalLaneCmd lane_cmd;
    auto* l = app.add_subcommand("eval-lane", "Lane F1 with rasterized IoU matching");
    l->add_option("--pred", lane_cmd.pred)->required();
    l->add_option("--gt", lane_cmd.gt)->required();
    l->add_option("--width", lane_cmd.config.line_width, "Lane width in pixels");
    l->add_option("--iou", lane_cmd.config.iou_threshold, "IoU threshold");
    l->add_option("--matching", lane_cmd.matching)->check(CLI::IsMember({"greedy", "hungarian"}));
    l->add_flag("--by-scenario", lane_cmd.by_scenario);
    l->add_option("--out", lane_cmd.out);
    l->callback(bind(lane_cmd));

    EvalKeypointsCmd kp_cmd;
    auto* k = app.add_subcommand("eval-keypoints", "OKS average precision");
    k->add_option("--pred", kp_cmd.pred)->required();
    k->add_option("--gt", kp_cmd.gt)->required();
    k->add_option("--category", kp_cmd.category)->check(CLI::IsMember({"human", "animal", "car", "bicycle", "lane"}));
    k->add_option("--out", kp_cmd.out);
    k->callback(bind(kp_cmd));

    StatsCmd stats_cmd;
    auto* st = app.add_subcommand("stats", "Mean instance scale (bbox area / image area, percent)");
    st->add_option("--annotations", stats_cmd.annotations)->required();
    st->add_option("--category", stats_cmd.category)->check(CLI::IsMember({"human", "animal", "car", "bicycle", "lane"}));
    st->add_option("--out", stats_cmd.out);
    st->callback(bind(stats_cmd));

    MosaicCmd mosaic_cmd;
    auto* m = app.add_subcommand("mosaic", "Compose 2x2 mosaics in annotation space");
    m->add_option("--annotations", mosaic_cmd.annotations)->required();
    m->add_option("--category", mosaic_cmd.category, "Schema for COCO input");
    m->add_option("--count", mosaic_cmd.count)->check(CLI::PositiveNumber);
    m->add_option("--canvas-width", mosaic_cmd.canvas_width)->check(CLI::PositiveNumber);
    m->add_option("--canvas-height", mosaic_cmd.canvas_height)->check(CLI::PositiveNumber);
    m->add_option("--emit-plans", mosaic_cmd.emit_plans, "Also write the mosaic plans here");
    m->add_option("--out", mosaic_cmd.out);
    m->callback(bind(mosaic_cmd));

    PlanEpochsCmd plan_cmd;
    auto* p = app.add_subcommand("plan-epochs", "Plan one multi-task epoch");
    p->add_option("--sizes", plan_cmd.sizes, "Comma-separated dataset sizes")->required();
    p->add_option("--weights", plan_cmd.weights, "Comma-separated batch weights")->required();
    p->add_option("--names", plan_cmd.names, "Comma-separated task names");
    p->add_option("--batch", plan_cmd.batch)->check(CLI::PositiveNumber);
    p->add_option("--epoch", plan_cmd.epoch);
    p->add_option("--out", plan_cmd.out);
    p->callback(bind(plan_cmd));

    RenderCmd render_cmd;
    auto* r = app.add_subcommand("render", "SVG overlay of one image's instances");
    r->add_option("--annotations", render_cmd.annotations)->required();
    r->add_option("--category", render_cmd.category, "Schema for COCO input");
    r->add_option("--image-id", render_cmd.image_id);
    r->add_option("--background", render_cmd.background, "Image referenced as the canvas");
    r->add_option("--out", render_cmd.out);
    r->callback(bind(render_cmd));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kOk : kUsage;
    } catch (const UsageError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kUsage;
    } catch (const ParseError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kInput;
    } catch (const InputError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kInput;
    } catch (const std::exception& err) {
        std::cerr << "internal error: " << err.what() << '\n';
        return kInternal;
    }
    return result;
}
