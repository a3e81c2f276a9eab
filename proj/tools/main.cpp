// lga: generate / train / evaluate / visualize / ablate / inspect for the
// mask-loss guided action recognition pipeline.

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lga/activation.hpp"
#include "lga/checkpoint.hpp"
#include "lga/dataset.hpp"
#include "lga/trainer.hpp"

namespace fs = std::filesystem;

namespace {

/// Concurrent runs must target distinct output directories; the lock file
/// makes a collision a hard error instead of silent interleaving.
class DirLock {
public:
    explicit DirLock(const std::string& out_dir) {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw lga::IOError("cannot create " + out_dir + ": " + ec.message());
        path_ = (fs::path(out_dir) / ".lock").string();
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0)
            throw lga::IOError("output directory is locked: " + path_ +
                               " (another run is active, or remove the stale lock)");
    }
    ~DirLock() {
        if (fd_ >= 0) {
            ::close(fd_);
            ::unlink(path_.c_str());
        }
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    int fd_ = -1;
    std::string path_;
};

lga::OptimizerKind parse_optimizer(const std::string& s) {
    if (s == "adam") return lga::OptimizerKind::adam;
    if (s == "momentum") return lga::OptimizerKind::momentum;
    throw CLI::ValidationError("optimizer must be adam or momentum");
}

/// TrainConfig options; config-file keys mirror the field names and command
/// line flags override file values.
struct TrainFlags {
    double learning_rate = 1e-5;
    int batch_size = 12;
    int epochs = 10;
    double lambda_mask = 1.0;
    std::string mask_loss_reduction = "mean";
    std::string optimizer = "adam";
    std::uint64_t seed = 0;
    long checkpoint_every = 0;
    int eval_every = 1;
    int image_size = 448;
    std::string mask_target = "soft";
    bool rotation_signed = true;
    std::vector<int> backbone_channels;
    int cls_channels = 1024;
    std::vector<int> loc_channels;
    std::string loc_output = "linear";
    bool no_mask_loss = false;

    std::map<std::string, CLI::Option*> opts;

    void add_to(CLI::App& app) {
        opts["learning_rate"] = app.add_option("--learning_rate,--lr", learning_rate, "Step size");
        opts["batch_size"] = app.add_option("--batch_size", batch_size, "Samples per optimizer step");
        opts["epochs"] = app.add_option("--epochs", epochs, "Training epochs");
        opts["lambda_mask"] = app.add_option("--lambda_mask", lambda_mask, "Mask-loss weight");
        opts["mask_loss_reduction"] =
            app.add_option("--mask_loss_reduction", mask_loss_reduction, "mean or sum")
                ->check(CLI::IsMember({"mean", "sum"}));
        opts["optimizer"] = app.add_option("--optimizer", optimizer, "adam or momentum")
                                ->check(CLI::IsMember({"adam", "momentum"}));
        opts["seed"] = app.add_option("--seed", seed, "Run seed");
        opts["checkpoint_every"] =
            app.add_option("--checkpoint_every", checkpoint_every, "Checkpoint every N steps (0 = last/best only)");
        opts["eval_every"] = app.add_option("--eval_every", eval_every, "Validate every N epochs (0 = never)");
        opts["image_size"] = app.add_option("--image_size", image_size, "Square input side");
        opts["mask_target"] = app.add_option("--mask_target", mask_target, "soft or hard heatmap target")
                                  ->check(CLI::IsMember({"soft", "hard"}));
        opts["rotation_signed"] =
            app.add_flag("--rotation_signed,!--no-rotation_signed", rotation_signed,
                         "Sample rotation direction randomly");
        opts["backbone_channels"] =
            app.add_option("--backbone_channels", backbone_channels, "Stage widths (stride 2 each)");
        opts["cls_channels"] = app.add_option("--cls_channels", cls_channels, "Classification conv width");
        opts["loc_channels"] = app.add_option("--loc_channels", loc_channels, "Localization hidden widths");
        opts["loc_output"] = app.add_option("--loc_output", loc_output, "linear or sigmoid")
                                 ->check(CLI::IsMember({"linear", "sigmoid"}));
        app.add_flag("--no-mask-loss", no_mask_loss, "Train the classification-only baseline (lambda_mask = 0)");
    }

    /// Overlays explicitly given options onto a base config (preset).
    lga::TrainConfig build(lga::TrainConfig base) const {
        auto given = [&](const char* key) { return opts.at(key)->count() > 0; };
        if (given("learning_rate")) base.learning_rate = learning_rate;
        if (given("batch_size")) base.batch_size = batch_size;
        if (given("epochs")) base.epochs = epochs;
        if (given("lambda_mask")) base.lambda_mask = lambda_mask;
        if (given("mask_loss_reduction"))
            base.mask_loss_reduction =
                mask_loss_reduction == "sum" ? lga::Reduction::sum : lga::Reduction::mean;
        if (given("optimizer")) base.optimizer = parse_optimizer(optimizer);
        if (given("seed")) base.seed = seed;
        if (given("checkpoint_every")) base.checkpoint_every = checkpoint_every;
        if (given("eval_every")) base.eval_every = eval_every;
        if (given("image_size")) base.image_size = image_size;
        if (given("mask_target"))
            base.mask_target = mask_target == "hard" ? lga::MaskTarget::hard : lga::MaskTarget::soft;
        if (given("rotation_signed")) base.rotation_signed = rotation_signed;
        if (given("backbone_channels")) base.model.backbone.stage_channels = backbone_channels;
        if (given("cls_channels")) base.model.cls_channels = cls_channels;
        if (given("loc_channels")) base.model.loc_channels = loc_channels;
        if (given("loc_output"))
            base.model.loc_output =
                loc_output == "sigmoid" ? lga::LocOutput::sigmoid : lga::LocOutput::linear;
        if (no_mask_loss) base.lambda_mask = 0.0;
        return base;
    }
};

int cmd_generate(const lga::SyntheticSpec& spec, const std::string& out_dir) {
    DirLock lock(out_dir);
    const lga::Manifest manifest = lga::generate_synthetic(spec, out_dir);
    std::cout << "manifest: " << (fs::path(out_dir) / "manifest.jsonl").string() << "\n";
    for (const char* split : {"train", "val", "test"}) {
        const auto n = manifest.split_indices(split).size();
        if (n > 0) std::cout << split << ": " << n << " samples\n";
    }
    return 0;
}

int cmd_train(const lga::TrainConfig& config, const std::string& manifest_path,
              const std::string& out_dir, const std::string& resume) {
    DirLock lock(out_dir);
    const lga::Manifest manifest = lga::load_manifest(manifest_path);
    const lga::TrainResult result = lga::train(config, manifest, out_dir, resume);
    std::cout << "trained " << result.state.step << " steps; checkpoints and metrics under "
              << out_dir << "\n";
    if (result.best_val_map > 0.0) std::cout << "best val mAP " << result.best_val_map << "\n";
    return 0;
}

int cmd_evaluate(const std::string& checkpoint_path, const std::string& manifest_path,
                 const std::string& split, const std::string& out_dir) {
    DirLock lock(out_dir);
    const lga::Checkpoint ckpt = lga::load_checkpoint(checkpoint_path);
    const lga::Manifest manifest = lga::load_manifest(manifest_path);
    // Inference consumes images only; annotation fields are never read here.
    const lga::SplitEval ev = lga::evaluate_split(ckpt.params, manifest, split, ckpt.image_size,
                                                  /*with_attention=*/false);
    lga::ActionLabelSpace labels;
    labels.class_names = ckpt.class_names;
    lga::write_report_text(ev.report, labels, (fs::path(out_dir) / "report.txt").string());
    lga::write_report_json(ev.report, labels, (fs::path(out_dir) / "report.json").string());
    std::printf("mAP %.6f (%s split, %d samples)\n", ev.report.map, split.c_str(),
                ev.table.num_samples());
    for (std::size_t c = 0; c < ev.report.per_class_ap.size(); ++c) {
        const auto name = c < labels.class_names.size() ? labels.class_names[c] : "class_" + std::to_string(c);
        if (!ev.report.per_class_ap[c])
            std::fprintf(stderr, "warning: class %s has no positives; excluded from mAP\n", name.c_str());
    }
    return 0;
}

int cmd_visualize(const std::string& checkpoint_path, std::vector<std::string> images,
                  const std::string& manifest_path, const std::string& split,
                  const std::string& out_dir, bool dump_maps) {
    DirLock lock(out_dir);
    const lga::Checkpoint ckpt = lga::load_checkpoint(checkpoint_path);

    // Optional manifest supplies person boxes for the attention statistic and
    // can enumerate a whole split.
    lga::Manifest manifest;
    std::map<std::string, const lga::ManifestRecord*> by_path;
    if (!manifest_path.empty()) {
        manifest = lga::load_manifest(manifest_path);
        for (const auto& rec : manifest.records) {
            if (!split.empty() && rec.split != split) continue;
            by_path[fs::weakly_canonical(manifest.resolve_image(rec)).string()] = &rec;
        }
        if (images.empty())
            for (const auto& [path, rec] : by_path) images.push_back(path);
    }
    if (images.empty()) throw CLI::ValidationError("no images given (pass paths or --manifest with --split)");

    std::ofstream records((fs::path(out_dir) / "visualize.jsonl").string());
    const int S = ckpt.image_size;
    const int stride = ckpt.params.config.backbone.stride();
    int failures = 0;

    for (const auto& path : images) {
        lga::Image raw;
        try {
            raw = lga::load_ppm(path);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "warning: skipping %s: %s\n", path.c_str(), e.what());
            ++failures;
            continue;
        }
        const lga::Image img = lga::resize_bilinear(raw, S, S);
        const lga::ForwardOutputs fwd = lga::forward(ckpt.params, lga::image_to_tensor(img));
        const int predicted = lga::predict(fwd);
        const auto probs = lga::softmax(fwd.logits);

        const lga::ActivationMap sam_map = lga::sam(fwd.f_cls);
        const lga::ActivationMap pam_map =
            lga::pam(fwd.f_cls, lga::cam_weights(ckpt.params, predicted), predicted);
        lga::ActivationMap mstar_map;
        mstar_map.grid = fwd.m_star;

        const std::string stem = (fs::path(out_dir) / fs::path(path).stem()).string();
        lga::save_ppm(lga::render_overlay(img, sam_map), stem + "_sam.ppm");
        lga::save_ppm(lga::render_overlay(img, pam_map), stem + "_pam.ppm");
        lga::save_ppm(lga::render_overlay(img, mstar_map), stem + "_mstar.ppm");
        if (dump_maps) {
            lga::save_map_text(sam_map.grid, stem + "_sam.txt");
            lga::save_map_text(pam_map.grid, stem + "_pam.txt");
            lga::save_map_text(fwd.m_star, stem + "_mstar.txt");
        }

        nlohmann::ordered_json rec;
        rec["image"] = path;
        rec["predicted_class"] = predicted < static_cast<int>(ckpt.class_names.size())
                                     ? ckpt.class_names[static_cast<std::size_t>(predicted)]
                                     : std::to_string(predicted);
        rec["confidence"] = probs[static_cast<std::size_t>(predicted)];

        const auto it = by_path.find(fs::weakly_canonical(path).string());
        if (it != by_path.end() && it->second->has_person_evidence()) {
            const auto& mrec = *it->second;
            const double sx = static_cast<double>(S) / raw.width;
            const double sy = static_cast<double>(S) / raw.height;
            std::vector<lga::BoundingBox> boxes;
            if (!mrec.boxes.empty()) {
                for (const auto& b : mrec.boxes)
                    boxes.push_back(lga::clamp_box(
                        {b.x_min * sx, b.y_min * sy, b.x_max * sx, b.y_max * sy}, S, S));
            } else {
                lga::Keypoints scaled = *mrec.keypoints;
                for (auto& j : scaled.joints) {
                    j.x *= sx;
                    j.y *= sy;
                }
                boxes.push_back(lga::keypoints_to_box(scaled, S, S));
            }
            const lga::HumanMask mask = lga::boxes_to_mask(boxes, S, S);
            const lga::HeatmapTarget target = lga::downsample_mask(mask, S / stride, S / stride);
            rec["attention_in_mask"] = lga::attention_in_mask(pam_map, target);
        }
        records << rec.dump() << "\n";
    }
    if (failures == static_cast<int>(images.size())) {
        std::fprintf(stderr, "error: no image could be processed\n");
        return 1;
    }
    std::cout << "overlays and records under " << out_dir << "\n";
    return 0;
}

int cmd_ablate(const lga::TrainConfig& base, const std::string& manifest_path,
               const std::vector<std::uint64_t>& seeds, const std::string& out_dir) {
    DirLock lock(out_dir);
    const lga::Manifest manifest = lga::load_manifest(manifest_path);
    const lga::AblationReport report = lga::ablation(base, manifest, seeds, out_dir);
    std::printf("mean test mAP: with mask loss %.4f, without %.4f (delta %+.4f)\n",
                report.mean_map_with, report.mean_map_without, report.map_delta());
    std::printf("mean attention in mask: with %.4f, without %.4f (delta %+.4f)\n",
                report.mean_attention_with, report.mean_attention_without,
                report.attention_delta());
    std::cout << "full report under " << out_dir << "\n";
    return 0;
}

int cmd_inspect(const std::string& checkpoint_path) {
    std::cout << lga::checkpoint_header(checkpoint_path) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-task action recognition with a human-mask loss: synthetic data, "
                 "training, evaluation and activation-map tooling"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Render the synthetic misleading-context benchmark");
    lga::SyntheticSpec spec;
    std::string gen_out;
    double test_correlation = -1.0;
    gen->add_option("--classes", spec.num_classes, "Action classes (2-8)");
    gen->add_option("--train", spec.train_samples, "Train samples");
    gen->add_option("--val", spec.val_samples, "Validation samples");
    gen->add_option("--test", spec.test_samples, "Test samples");
    gen->add_option("--canvas", spec.canvas_size, "Canvas side (multiple of 32)");
    gen->add_option("--correlation", spec.train_correlation,
                    "P(distractor identity == label) on the train split");
    gen->add_option("--test-correlation", test_correlation,
                    "Same for val/test; negative means uniform (1/C)");
    gen->add_option("--seed", spec.seed, "Generator seed");
    gen->add_option("--out", gen_out, "Output directory")->required();

    // train
    auto* train = app.add_subcommand("train", "Train the two-branch network");
    train->set_config("--config", "", "Key = value config file; flags override file values");
    std::string train_manifest, train_out, train_resume, train_preset = "paper";
    TrainFlags train_flags;
    train->add_option("--manifest", train_manifest, "Manifest path")->required();
    train->add_option("--out", train_out, "Run directory")->required();
    train->add_option("--resume", train_resume, "Checkpoint to resume from");
    train->add_option("--preset", train_preset, "Base defaults: paper or synthetic")
        ->check(CLI::IsMember({"paper", "synthetic"}));
    train_flags.add_to(*train);

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Score a split and write the AP report");
    std::string eval_ckpt, eval_manifest, eval_split = "test", eval_out;
    eval->add_option("--checkpoint", eval_ckpt, "Checkpoint path")->required();
    eval->add_option("--manifest", eval_manifest, "Manifest path")->required();
    eval->add_option("--split", eval_split, "Split to score");
    eval->add_option("--out", eval_out, "Report directory")->required();

    // visualize
    auto* vis = app.add_subcommand("visualize", "Write SAM/PAM/heatmap overlays");
    std::string vis_ckpt, vis_manifest, vis_split, vis_out;
    std::vector<std::string> vis_images;
    bool vis_dump = false;
    vis->add_option("--checkpoint", vis_ckpt, "Checkpoint path")->required();
    vis->add_option("--out", vis_out, "Output directory")->required();
    vis->add_option("--manifest", vis_manifest, "Manifest supplying boxes (and images via --split)");
    vis->add_option("--split", vis_split, "Take every image of this split from the manifest");
    vis->add_option("images", vis_images, "Image files");
    vis->add_flag("--dump-maps", vis_dump, "Also dump raw maps as text grids");

    // ablate
    auto* abl = app.add_subcommand("ablate", "Paired with/without-mask-loss comparison over seeds");
    abl->set_config("--config", "", "Key = value config file; flags override file values");
    std::string abl_manifest, abl_out;
    std::vector<std::uint64_t> abl_seeds{1, 2, 3, 4, 5};
    TrainFlags abl_flags;
    abl->add_option("--manifest", abl_manifest, "Manifest path")->required();
    abl->add_option("--out", abl_out, "Output directory")->required();
    abl->add_option("--seeds", abl_seeds, "Seeds (>= 3)");
    abl_flags.add_to(*abl);

    // inspect
    auto* ins = app.add_subcommand("inspect", "Print a checkpoint header");
    std::string ins_ckpt;
    ins->add_option("checkpoint", ins_ckpt, "Checkpoint path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) {
            spec.test_correlation = test_correlation;
            return cmd_generate(spec, gen_out);
        }
        if (train->parsed()) {
            const lga::TrainConfig base = train_preset == "synthetic"
                                              ? lga::TrainConfig::synthetic_defaults()
                                              : lga::TrainConfig{};
            return cmd_train(train_flags.build(base), train_manifest, train_out, train_resume);
        }
        if (eval->parsed()) return cmd_evaluate(eval_ckpt, eval_manifest, eval_split, eval_out);
        if (vis->parsed())
            return cmd_visualize(vis_ckpt, vis_images, vis_manifest, vis_split, vis_out, vis_dump);
        if (abl->parsed())
            return cmd_ablate(abl_flags.build(lga::TrainConfig::synthetic_defaults()), abl_manifest,
                              abl_seeds, abl_out);
        if (ins->parsed()) return cmd_inspect(ins_ckpt);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
