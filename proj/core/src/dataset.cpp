#include "lga/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "lga/image.hpp"
#include "lga/rng.hpp"

namespace fs = std::filesystem;

namespace lga {

std::vector<int> Manifest::split_indices(const std::string& split) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (records[i].split == split) out.push_back(static_cast<int>(i));
    return out;
}

std::string Manifest::resolve_image(const ManifestRecord& record) const {
    if (fs::path(record.image).is_absolute() || root_dir.empty()) return record.image;
    return (fs::path(root_dir) / record.image).string();
}

namespace {

bool valid_split(const std::string& s) { return s == "train" || s == "val" || s == "test"; }

[[noreturn]] void fail_line(const std::string& path, int line, const std::string& what) {
    throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

} // namespace

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open manifest: " + path);

    Manifest manifest;
    manifest.root_dir = fs::path(path).parent_path().string();

    std::string line;
    int line_no = 0;

    if (!std::getline(in, line)) throw ParseError(path + ": empty manifest");
    ++line_no;
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        fail_line(path, line_no, std::string("bad header: ") + e.what());
    }
    if (!header.contains("labels") || !header["labels"].is_array())
        fail_line(path, line_no, "header must carry a \"labels\" array");
    for (const auto& name : header["labels"]) {
        const std::string s = name.get<std::string>();
        if (manifest.label_space.index_of(s) >= 0) fail_line(path, line_no, "duplicate label: " + s);
        manifest.label_space.class_names.push_back(s);
    }
    if (manifest.label_space.num_classes() < 2)
        fail_line(path, line_no, "need at least 2 classes");

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            fail_line(path, line_no, std::string("bad record: ") + e.what());
        }

        ManifestRecord rec;
        try {
            rec.image = j.at("image").get<std::string>();
            rec.label_name = j.at("label").get<std::string>();
            rec.split = j.at("split").get<std::string>();
            for (const auto& b : j.at("boxes")) {
                if (!b.is_array() || b.size() != 4) fail_line(path, line_no, "box must be [x_min,y_min,x_max,y_max]");
                BoundingBox box{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
                if (!box.valid()) fail_line(path, line_no, "degenerate box");
                rec.boxes.push_back(box);
            }
            if (j.contains("keypoints")) {
                const auto& kj = j["keypoints"];
                if (!kj.is_array() || kj.size() != kNumJoints)
                    fail_line(path, line_no, "keypoints must list " + std::to_string(kNumJoints) + " joints");
                Keypoints kps;
                for (int k = 0; k < kNumJoints; ++k) {
                    const auto& t = kj[static_cast<std::size_t>(k)];
                    if (!t.is_array() || t.size() != 3) fail_line(path, line_no, "joint must be [x,y,v]");
                    const int v = t[2].get<int>();
                    if (v != 0 && v != 1) fail_line(path, line_no, "joint visibility must be 0 or 1");
                    kps.joints[static_cast<std::size_t>(k)] = {t[0].get<double>(), t[1].get<double>(), v == 1};
                }
                rec.keypoints = kps;
            }
        } catch (const nlohmann::json::exception& e) {
            fail_line(path, line_no, std::string("bad record: ") + e.what());
        }

        if (!valid_split(rec.split))
            fail_line(path, line_no, "split must be train/val/test, got \"" + rec.split + "\"");
        rec.label = manifest.label_space.index_of(rec.label_name);
        if (rec.label < 0)
            throw UnknownLabel(path + ":" + std::to_string(line_no) + ": unknown label \"" +
                               rec.label_name + "\"");
        const std::string img = manifest.root_dir.empty()
                                    ? rec.image
                                    : (fs::path(manifest.root_dir) / rec.image).string();
        if (!fs::exists(img))
            throw MissingImage(path + ":" + std::to_string(line_no) + ": missing image " + img);
        if (!looks_like_ppm(img))
            throw MissingImage(path + ":" + std::to_string(line_no) + ": not a decodable image " + img);
        if (rec.split == "train" && !rec.has_person_evidence())
            throw MissingPersonEvidence(path + ":" + std::to_string(line_no) +
                                        ": train record has neither boxes nor keypoints");
        manifest.records.push_back(std::move(rec));
    }
    return manifest;
}

namespace {

nlohmann::ordered_json record_json(const ManifestRecord& rec) {
    nlohmann::ordered_json j;
    j["image"] = rec.image;
    j["label"] = rec.label_name;
    j["split"] = rec.split;
    auto& boxes = j["boxes"] = nlohmann::ordered_json::array();
    for (const auto& b : rec.boxes) boxes.push_back({b.x_min, b.y_min, b.x_max, b.y_max});
    if (rec.keypoints) {
        auto& kps = j["keypoints"] = nlohmann::ordered_json::array();
        for (const auto& joint : rec.keypoints->joints)
            kps.push_back({joint.x, joint.y, joint.visible ? 1 : 0});
    }
    return j;
}

} // namespace

void save_manifest(const Manifest& manifest, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IOError("cannot open for writing: " + tmp);
        nlohmann::ordered_json header;
        header["labels"] = manifest.label_space.class_names;
        out << header.dump() << "\n";
        for (const auto& rec : manifest.records) out << record_json(rec).dump() << "\n";
        if (!out) throw IOError("short write: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IOError("cannot rename into " + path);
}

// ---------------------------------------------------------------------------
// Synthetic benchmark rendering
// ---------------------------------------------------------------------------

namespace {

struct PoseAngles {
    const char* name;
    double arm_left;  // degrees from straight-down, mirrored outward
    double arm_right;
    double leg_spread;
};

constexpr PoseAngles kPoses[] = {
    {"standing", 15.0, 15.0, 14.0},   {"arms_up", 165.0, 165.0, 14.0},
    {"t_pose", 90.0, 90.0, 14.0},     {"waving", 20.0, 160.0, 14.0},
    {"star_jump", 135.0, 135.0, 38.0}, {"arms_low", 50.0, 50.0, 6.0},
    {"pointing", 90.0, 165.0, 14.0},  {"diagonal", 45.0, 135.0, 26.0},
};

constexpr double kShapePalette[][3] = {
    {0.92, 0.15, 0.10}, {0.10, 0.85, 0.20}, {0.15, 0.30, 0.95}, {0.95, 0.90, 0.10},
    {0.90, 0.20, 0.85}, {0.10, 0.85, 0.90}, {0.95, 0.55, 0.10}, {0.60, 0.20, 0.90},
};

constexpr int kMaxSyntheticClasses = 8;

/// Tracks the tight pixel box of everything painted through it.
struct PaintTracker {
    Image* img;
    double min_x = 1e9, min_y = 1e9, max_x = -1e9, max_y = -1e9;
    bool painted = false;

    void paint(int i, int j, const std::array<double, 3>& color) {
        if (i < 0 || i >= img->height || j < 0 || j >= img->width) return;
        for (int c = 0; c < 3; ++c) img->at(i, j, c) = color[static_cast<std::size_t>(c)];
        min_x = std::min(min_x, static_cast<double>(j));
        min_y = std::min(min_y, static_cast<double>(i));
        max_x = std::max(max_x, static_cast<double>(j + 1));
        max_y = std::max(max_y, static_cast<double>(i + 1));
        painted = true;
    }

    BoundingBox box() const { return {min_x, min_y, max_x, max_y}; }
};

void draw_segment(PaintTracker& tracker, double x0, double y0, double x1, double y1,
                  double half_width, const std::array<double, 3>& color) {
    const int lo_i = static_cast<int>(std::floor(std::min(y0, y1) - half_width - 1));
    const int hi_i = static_cast<int>(std::ceil(std::max(y0, y1) + half_width + 1));
    const int lo_j = static_cast<int>(std::floor(std::min(x0, x1) - half_width - 1));
    const int hi_j = static_cast<int>(std::ceil(std::max(x0, x1) + half_width + 1));
    const double dx = x1 - x0, dy = y1 - y0;
    const double len2 = dx * dx + dy * dy;
    for (int i = lo_i; i <= hi_i; ++i) {
        for (int j = lo_j; j <= hi_j; ++j) {
            const double px = j + 0.5, py = i + 0.5;
            double t = len2 > 0.0 ? ((px - x0) * dx + (py - y0) * dy) / len2 : 0.0;
            t = std::clamp(t, 0.0, 1.0);
            const double qx = x0 + t * dx, qy = y0 + t * dy;
            const double d2 = (px - qx) * (px - qx) + (py - qy) * (py - qy);
            if (d2 <= half_width * half_width) tracker.paint(i, j, color);
        }
    }
}

void draw_disk(PaintTracker& tracker, double cx, double cy, double r,
               const std::array<double, 3>& color) {
    for (int i = static_cast<int>(std::floor(cy - r - 1)); i <= static_cast<int>(std::ceil(cy + r + 1)); ++i)
        for (int j = static_cast<int>(std::floor(cx - r - 1)); j <= static_cast<int>(std::ceil(cx + r + 1)); ++j) {
            const double dx = j + 0.5 - cx, dy = i + 0.5 - cy;
            if (dx * dx + dy * dy <= r * r) tracker.paint(i, j, color);
        }
}

/// Articulated stick glyph: head, torso, two arms, two legs. Pose angles are
/// the class signature; position, scale and a small jitter vary per sample.
BoundingBox draw_agent(Image& img, int pose_id, double cx, double top, double height,
                       double stroke, double jitter_l, double jitter_r,
                       const std::array<double, 3>& color) {
    PaintTracker tracker{&img};
    const PoseAngles& pose = kPoses[pose_id];
    const double head_r = 0.11 * height;
    const double head_cy = top + head_r;
    const double neck_y = top + 2.0 * head_r;
    const double hip_y = top + 0.62 * height;
    const double arm_len = 0.30 * height;
    const double leg_len = 0.38 * height;
    const double half = 0.5 * stroke;

    auto arm_dir = [](double deg) {
        const double rad = deg * M_PI / 180.0;
        return std::pair<double, double>{std::sin(rad), std::cos(rad)};
    };

    draw_disk(tracker, cx, head_cy, head_r, color);
    draw_segment(tracker, cx, neck_y, cx, hip_y, half, color); // torso

    const auto [lsx, lsy] = arm_dir(pose.arm_left + jitter_l);
    const auto [rsx, rsy] = arm_dir(pose.arm_right + jitter_r);
    draw_segment(tracker, cx, neck_y, cx - lsx * arm_len, neck_y + lsy * arm_len, half, color);
    draw_segment(tracker, cx, neck_y, cx + rsx * arm_len, neck_y + rsy * arm_len, half, color);

    const auto [legx, legy] = arm_dir(pose.leg_spread);
    draw_segment(tracker, cx, hip_y, cx - legx * leg_len, hip_y + legy * leg_len, half, color);
    draw_segment(tracker, cx, hip_y, cx + legx * leg_len, hip_y + legy * leg_len, half, color);

    return tracker.box();
}

/// Solid distractor glyph; the shape identity is the correlated signal.
BoundingBox draw_distractor(Image& img, int shape_id, double cx, double cy, double size) {
    PaintTracker tracker{&img};
    std::array<double, 3> color{kShapePalette[shape_id][0], kShapePalette[shape_id][1],
                                kShapePalette[shape_id][2]};
    const double r = 0.5 * size;
    switch (shape_id % kMaxSyntheticClasses) {
        case 0: { // square
            for (int i = static_cast<int>(cy - r); i <= static_cast<int>(cy + r); ++i)
                for (int j = static_cast<int>(cx - r); j <= static_cast<int>(cx + r); ++j)
                    tracker.paint(i, j, color);
            break;
        }
        case 1:
            draw_disk(tracker, cx, cy, r, color);
            break;
        case 2: { // triangle, point up
            for (int i = static_cast<int>(cy - r); i <= static_cast<int>(cy + r); ++i) {
                const double frac = (i + 0.5 - (cy - r)) / (2.0 * r);
                const double hw = std::clamp(frac, 0.0, 1.0) * r;
                for (int j = static_cast<int>(cx - hw); j <= static_cast<int>(cx + hw); ++j)
                    tracker.paint(i, j, color);
            }
            break;
        }
        case 3: { // plus
            const double bar = r * 0.42;
            for (int i = static_cast<int>(cy - r); i <= static_cast<int>(cy + r); ++i)
                for (int j = static_cast<int>(cx - r); j <= static_cast<int>(cx + r); ++j) {
                    if (std::fabs(j + 0.5 - cx) <= bar || std::fabs(i + 0.5 - cy) <= bar)
                        tracker.paint(i, j, color);
                }
            break;
        }
        case 4: { // diamond
            for (int i = static_cast<int>(cy - r); i <= static_cast<int>(cy + r); ++i)
                for (int j = static_cast<int>(cx - r); j <= static_cast<int>(cx + r); ++j) {
                    if (std::fabs(j + 0.5 - cx) + std::fabs(i + 0.5 - cy) <= r)
                        tracker.paint(i, j, color);
                }
            break;
        }
        case 5: { // ring
            for (int i = static_cast<int>(cy - r); i <= static_cast<int>(cy + r); ++i)
                for (int j = static_cast<int>(cx - r); j <= static_cast<int>(cx + r); ++j) {
                    const double dx = j + 0.5 - cx, dy = i + 0.5 - cy;
                    const double d2 = dx * dx + dy * dy;
                    if (d2 <= r * r && d2 >= 0.35 * r * r) tracker.paint(i, j, color);
                }
            break;
        }
        case 6: { // horizontal bar
            const double hh = r * 0.4;
            for (int i = static_cast<int>(cy - hh); i <= static_cast<int>(cy + hh); ++i)
                for (int j = static_cast<int>(cx - r); j <= static_cast<int>(cx + r); ++j)
                    tracker.paint(i, j, color);
            break;
        }
        default: { // hourglass
            for (int i = static_cast<int>(cy - r); i <= static_cast<int>(cy + r); ++i) {
                const double frac = std::fabs(i + 0.5 - cy) / r;
                const double hw = frac * r;
                for (int j = static_cast<int>(cx - hw); j <= static_cast<int>(cx + hw); ++j)
                    tracker.paint(i, j, color);
            }
            break;
        }
    }
    return tracker.box();
}

Image render_background(int size, RngStream& rng) {
    // Coarse random grid upsampled into smooth blobs, plus light pixel noise.
    const int cells = 5;
    Image coarse(cells, cells);
    for (auto& v : coarse.rgb) v = rng.uniform(0.25, 0.62);
    Image bg = resize_bilinear(coarse, size, size);
    for (auto& v : bg.rgb) v = std::clamp(v + rng.uniform(-0.03, 0.03), 0.0, 1.0);
    return bg;
}

bool boxes_overlap(const BoundingBox& a, const BoundingBox& b, double margin) {
    return a.x_min - margin < b.x_max && b.x_min - margin < a.x_max &&
           a.y_min - margin < b.y_max && b.y_min - margin < a.y_max;
}

} // namespace

int synthetic_max_classes() { return kMaxSyntheticClasses; }

Manifest generate_synthetic(const SyntheticSpec& spec, const std::string& out_dir) {
    if (spec.num_classes < 2 || spec.num_classes > kMaxSyntheticClasses)
        throw ShapeError("num_classes must be in [2," + std::to_string(kMaxSyntheticClasses) + "]");
    if (spec.canvas_size % 32 != 0) throw ShapeError("canvas_size must be a multiple of 32");
    if (spec.train_correlation < 0.0 || spec.train_correlation > 1.0)
        throw ShapeError("train_correlation must be in [0,1]");

    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "images", ec);
    if (ec) throw IOError("cannot create " + out_dir + ": " + ec.message());

    Manifest manifest;
    manifest.root_dir = out_dir;
    for (int c = 0; c < spec.num_classes; ++c)
        manifest.label_space.class_names.push_back(kPoses[c].name);

    const int C = spec.num_classes;
    const double S = spec.canvas_size;

    struct SplitPlan {
        const char* name;
        int count;
        double correlation;
        std::uint64_t tag;
    };
    const double test_corr = spec.test_correlation < 0.0 ? 1.0 / C : spec.test_correlation;
    const SplitPlan plans[] = {
        {"train", spec.train_samples, spec.train_correlation, 0},
        {"val", spec.val_samples, test_corr, 1},
        {"test", spec.test_samples, test_corr, 2},
    };

    for (const auto& plan : plans) {
        for (int idx = 0; idx < plan.count; ++idx) {
            RngStream rng(mix64(spec.seed, plan.tag, static_cast<std::uint64_t>(idx)));

            const int label = rng.below_int(C);
            int distractor = label;
            if (!rng.bernoulli(plan.correlation)) {
                distractor = rng.below_int(C - 1);
                if (distractor >= label) ++distractor;
            }

            Image img = render_background(spec.canvas_size, rng);

            const double height = rng.uniform(0.38, 0.55) * S;
            const double reach = 0.35 * height;
            const double cx = rng.uniform(reach + 2.0, S - reach - 2.0);
            const double top = rng.uniform(2.0, S - height - 2.0);
            const double stroke = std::max(1.6, 0.035 * height);
            const double jitter_l = rng.uniform(-4.0, 4.0);
            const double jitter_r = rng.uniform(-4.0, 4.0);
            const double shade = rng.uniform(0.02, 0.12);
            const std::array<double, 3> agent_color{shade, shade, shade};
            const BoundingBox agent_box =
                draw_agent(img, label, cx, top, height, stroke, jitter_l, jitter_r, agent_color);

            // Distractor: salient solid shape, larger than the agent half the
            // time, placed clear of the agent box.
            double d_size = rng.bernoulli(0.5) ? rng.uniform(1.0, 1.3) * height
                                               : rng.uniform(0.45, 0.8) * height;
            d_size = std::min(d_size, 0.45 * S);
            for (int attempt = 0;; ++attempt) {
                const double r = 0.5 * d_size;
                const double dcx = rng.uniform(r + 1.0, S - r - 1.0);
                const double dcy = rng.uniform(r + 1.0, S - r - 1.0);
                const BoundingBox d_box{dcx - r, dcy - r, dcx + r, dcy + r};
                if (!boxes_overlap(agent_box, d_box, 2.0)) {
                    draw_distractor(img, distractor, dcx, dcy, d_size);
                    break;
                }
                if (attempt > 0 && attempt % 50 == 0) d_size *= 0.85;
            }

            char name[64];
            std::snprintf(name, sizeof name, "images/%s_%05d.ppm", plan.name, idx);
            save_ppm(img, (fs::path(out_dir) / name).string());

            ManifestRecord rec;
            rec.image = name;
            rec.label = label;
            rec.label_name = manifest.label_space.class_names[static_cast<std::size_t>(label)];
            rec.split = plan.name;
            rec.boxes.push_back(agent_box);
            manifest.records.push_back(std::move(rec));
        }
    }

    save_manifest(manifest, (fs::path(out_dir) / "manifest.jsonl").string());
    return manifest;
}

// ---------------------------------------------------------------------------
// Batch iteration
// ---------------------------------------------------------------------------

BatchIterator::BatchIterator(const Manifest& manifest, const std::string& split, BatchOptions options)
    : manifest_(&manifest), options_(options) {
    if (options_.image_size % options_.heatmap_stride != 0)
        throw ShapeError("image_size must be a multiple of the heatmap stride");
    if (options_.batch_size <= 0) throw ShapeError("batch_size must be positive");
    order_ = manifest.split_indices(split);
    if (order_.empty()) throw EmptySplit("split \"" + split + "\" is empty");
    if (options_.training) {
        RngStream rng(mix64(options_.seed, 0x65706f6368ull, options_.epoch));
        rng.shuffle(order_);
    }
}

int BatchIterator::num_batches() const {
    return static_cast<int>((order_.size() + options_.batch_size - 1) / options_.batch_size);
}

void BatchIterator::skip(int n) {
    cursor_ = std::min(order_.size(), cursor_ + static_cast<std::size_t>(n) * options_.batch_size);
}

bool BatchIterator::next(Batch& batch) {
    batch = Batch{};
    if (cursor_ >= order_.size()) return false;

    const int S = options_.image_size;
    const int hm = S / options_.heatmap_stride;

    while (cursor_ < order_.size() && static_cast<int>(batch.images.size()) < options_.batch_size) {
        const int rec_idx = order_[cursor_++];
        const ManifestRecord& rec = manifest_->records[static_cast<std::size_t>(rec_idx)];

        Image raw = load_ppm(manifest_->resolve_image(rec));
        const double sx = static_cast<double>(S) / raw.width;
        const double sy = static_cast<double>(S) / raw.height;
        Image img = resize_bilinear(raw, S, S);

        HeatmapTarget target;
        bool has_target = false;
        if (options_.with_targets && rec.has_person_evidence()) {
            // Person evidence scaled into resized coordinates, then rasterized.
            std::vector<BoundingBox> boxes;
            if (!rec.boxes.empty()) {
                for (const auto& b : rec.boxes)
                    boxes.push_back(clamp_box({b.x_min * sx, b.y_min * sy, b.x_max * sx, b.y_max * sy},
                                              S, S));
            } else {
                Keypoints scaled = *rec.keypoints;
                for (auto& j : scaled.joints) {
                    j.x *= sx;
                    j.y *= sy;
                }
                boxes.push_back(keypoints_to_box(scaled, S, S, options_.min_keypoint_extent));
            }
            HumanMask mask = boxes_to_mask(boxes, S, S);
            if (options_.training) {
                const auto params = draw_params(options_.seed, options_.epoch,
                                                static_cast<std::uint64_t>(rec_idx),
                                                options_.rotation_signed);
                auto [aug_img, aug_mask] = apply_augmentation(img, mask, params);
                img = std::move(aug_img);
                mask = std::move(aug_mask);
            }
            target = downsample_mask(mask, hm, hm, options_.mask_target);
            has_target = true;
        } else if (options_.training) {
            const auto params = draw_params(options_.seed, options_.epoch,
                                            static_cast<std::uint64_t>(rec_idx),
                                            options_.rotation_signed);
            HumanMask empty(S, S);
            img = apply_augmentation(img, empty, params).first;
        }

        batch.images.push_back(image_to_tensor(img));
        batch.labels.push_back(rec.label);
        batch.targets.push_back(std::move(target));
        batch.has_target.push_back(has_target);
        batch.sample_indices.push_back(rec_idx);
    }
    return true;
}

} // namespace lga
