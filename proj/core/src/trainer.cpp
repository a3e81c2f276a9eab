#include "lga/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "lga/activation.hpp"

namespace fs = std::filesystem;

namespace lga {

TrainConfig TrainConfig::synthetic_defaults() {
    TrainConfig c;
    c.learning_rate = 1e-3;
    c.epochs = 30;
    c.image_size = 96;
    c.model.backbone.stage_channels = {8, 16, 24, 32, 48};
    c.model.cls_channels = 96;
    c.model.loc_channels = {32, 16, 8};
    return c;
}

namespace {

/// Adam or SGD-with-momentum over the flat parameter list.
struct Optimizer {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double momentum = 0.9;
    std::vector<Tensor> m, v;
    long updates = 0;

    void init(const ModelParams& params) {
        m.clear();
        v.clear();
        for (const auto* t : params.parameter_tensors()) {
            m.emplace_back(t->shape);
            v.emplace_back(t->shape);
        }
        updates = 0;
    }

    void step(ModelParams& params, const Gradients& grads) {
        auto tensors = params.parameter_tensors();
        if (kind == OptimizerKind::adam) {
            ++updates;
            const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(updates));
            const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(updates));
            for (std::size_t i = 0; i < tensors.size(); ++i) {
                auto& w = tensors[i]->v;
                auto& mi = m[i].v;
                auto& vi = v[i].v;
                const auto& g = grads.tensors[i].v;
                for (std::size_t k = 0; k < w.size(); ++k) {
                    mi[k] = beta1 * mi[k] + (1.0 - beta1) * g[k];
                    vi[k] = beta2 * vi[k] + (1.0 - beta2) * g[k] * g[k];
                    const double mhat = mi[k] / bc1;
                    const double vhat = vi[k] / bc2;
                    w[k] -= learning_rate * mhat / (std::sqrt(vhat) + eps);
                }
            }
        } else {
            for (std::size_t i = 0; i < tensors.size(); ++i) {
                auto& w = tensors[i]->v;
                auto& mi = m[i].v;
                const auto& g = grads.tensors[i].v;
                for (std::size_t k = 0; k < w.size(); ++k) {
                    mi[k] = momentum * mi[k] + g[k];
                    w[k] -= learning_rate * mi[k];
                }
            }
        }
    }
};

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Metrics lines are appended and flushed one at a time so a crash loses at
/// most the line being written.
class MetricsLog {
public:
    explicit MetricsLog(const std::string& path) : out_(path, std::ios::app) {
        if (!out_) throw IOError("cannot open metrics log: " + path);
    }

    void step(long step, int epoch, double l_cls, double l_mask, double lambda, double total) {
        out_ << "{\"type\":\"step\",\"step\":" << step << ",\"epoch\":" << epoch
             << ",\"l_cls\":" << format_double(l_cls) << ",\"l_mask\":" << format_double(l_mask)
             << ",\"lambda_mask\":" << format_double(lambda)
             << ",\"total\":" << format_double(total) << "}\n";
        out_.flush();
    }

    void eval(int epoch, long step, double val_map, double attention) {
        out_ << "{\"type\":\"eval\",\"epoch\":" << epoch << ",\"step\":" << step
             << ",\"val_map\":" << format_double(val_map)
             << ",\"mean_attention_in_mask\":" << format_double(attention) << "}\n";
        out_.flush();
    }

private:
    std::ofstream out_;
};

BatchOptions train_batch_options(const TrainConfig& config, std::uint64_t epoch) {
    BatchOptions opt;
    opt.image_size = config.image_size;
    opt.heatmap_stride = config.model.backbone.stride();
    opt.batch_size = config.batch_size;
    opt.training = true;
    opt.with_targets = true;
    opt.mask_target = config.mask_target;
    opt.rotation_signed = config.rotation_signed;
    opt.seed = config.seed;
    opt.epoch = epoch;
    return opt;
}

void dump_bad_batch(const std::string& out_dir, long step, const Batch& batch,
                    const std::vector<double>& l_cls, const std::vector<double>& l_mask) {
    nlohmann::ordered_json j;
    j["step"] = step;
    j["sample_indices"] = batch.sample_indices;
    j["l_cls"] = l_cls;
    j["l_mask"] = l_mask;
    std::ofstream out(fs::path(out_dir) / "diagnostics.json");
    out << j.dump(2) << "\n";
}

} // namespace

SplitEval evaluate_split(const ModelParams& params, const Manifest& manifest,
                         const std::string& split, int image_size, bool with_attention,
                         MaskTarget mask_target, double min_keypoint_extent) {
    BatchOptions opt;
    opt.image_size = image_size;
    opt.heatmap_stride = params.config.backbone.stride();
    opt.batch_size = 16;
    opt.training = false;
    opt.with_targets = with_attention;
    opt.mask_target = mask_target;
    opt.min_keypoint_extent = min_keypoint_extent;
    BatchIterator it(manifest, split, opt);

    const int C = params.config.num_classes;
    SplitEval out;
    out.table.scores = Tensor({static_cast<int>(it.num_samples()), C});
    out.table.gt_labels.reserve(static_cast<std::size_t>(it.num_samples()));

    double attention_sum = 0.0;
    long attention_count = 0;

    int row = 0;
    Batch batch;
    while (it.next(batch)) {
        for (std::size_t b = 0; b < batch.images.size(); ++b) {
            const ForwardOutputs fwd = forward(params, batch.images[b]);
            const auto probs = softmax(fwd.logits);
            for (int c = 0; c < C; ++c) out.table.scores.at2(row, c) = probs[static_cast<std::size_t>(c)];
            out.table.gt_labels.push_back(batch.labels[b]);
            ++row;

            if (with_attention && batch.has_target[b]) {
                const int predicted = predict(fwd);
                const ActivationMap map = pam(fwd.f_cls, cam_weights(params, predicted), predicted);
                attention_sum += attention_in_mask(map, batch.targets[b]);
                ++attention_count;
            }
        }
    }

    out.report = evaluate(out.table);
    if (with_attention && attention_count > 0)
        out.report.mean_attention_in_mask = attention_sum / static_cast<double>(attention_count);
    return out;
}

TrainResult train(TrainConfig config, const Manifest& manifest, const std::string& out_dir,
                  const std::string& resume_path) {
    config.model.num_classes = manifest.label_space.num_classes();

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IOError("cannot create " + out_dir + ": " + ec.message());

    const auto train_indices = manifest.split_indices("train");
    if (train_indices.empty()) throw EmptySplit("manifest has no train records");
    const bool has_val = !manifest.split_indices("val").empty();

    ModelParams params;
    Optimizer opt;
    opt.kind = config.optimizer;
    opt.learning_rate = config.learning_rate;
    long step = 0;

    if (!resume_path.empty()) {
        Checkpoint ckpt = load_checkpoint(resume_path);
        params = std::move(ckpt.params);
        step = ckpt.step;
        opt.init(params);
        if (!ckpt.opt_m.empty()) {
            opt.m = std::move(ckpt.opt_m);
            opt.v = std::move(ckpt.opt_v);
            opt.updates = ckpt.opt_updates;
        }
        if (params.config.num_classes != config.model.num_classes)
            throw ShapeError("checkpoint class count does not match the manifest");
    } else {
        params = build_model(config.model, config.seed);
        opt.init(params);
    }

    const long steps_per_epoch =
        (static_cast<long>(train_indices.size()) + config.batch_size - 1) / config.batch_size;
    const long total_steps = steps_per_epoch * config.epochs;

    MetricsLog log((fs::path(out_dir) / "metrics.jsonl").string());

    auto make_checkpoint = [&](long at_step) {
        Checkpoint ckpt;
        ckpt.params = params;
        ckpt.step = at_step;
        ckpt.rng_state = config.seed;
        ckpt.image_size = config.image_size;
        ckpt.class_names = manifest.label_space.class_names;
        ckpt.optimizer = config.optimizer == OptimizerKind::adam ? "adam" : "momentum";
        ckpt.opt_m = opt.m;
        ckpt.opt_v = opt.v;
        ckpt.opt_updates = opt.updates;
        return ckpt;
    };

    Gradients grads = Gradients::zeros_like(params);
    double best_val_map = -1.0;

    while (step < total_steps) {
        const int epoch = static_cast<int>(step / steps_per_epoch);
        BatchIterator it(manifest, "train", train_batch_options(config, static_cast<std::uint64_t>(epoch)));
        it.skip(static_cast<int>(step % steps_per_epoch));

        Batch batch;
        while (step < total_steps && it.next(batch)) {
            const int B = static_cast<int>(batch.images.size());
            grads.zero();
            std::vector<double> sample_cls(static_cast<std::size_t>(B));
            std::vector<double> sample_mask(static_cast<std::size_t>(B));

            for (int b = 0; b < B; ++b) {
                ForwardCache cache;
                const ForwardOutputs fwd = forward(params, batch.images[static_cast<std::size_t>(b)], &cache);
                const HeatmapTarget& target = batch.targets[static_cast<std::size_t>(b)];
                sample_cls[static_cast<std::size_t>(b)] =
                    classification_loss(fwd.logits, batch.labels[static_cast<std::size_t>(b)]);
                sample_mask[static_cast<std::size_t>(b)] =
                    mask_loss(fwd.m_star, target, config.mask_loss_reduction);

                auto dlogits = classification_loss_grad(fwd.logits, batch.labels[static_cast<std::size_t>(b)]);
                for (auto& g : dlogits) g /= B;
                Tensor dm_star;
                if (config.lambda_mask != 0.0) {
                    dm_star = mask_loss_grad(fwd.m_star, target, config.mask_loss_reduction);
                    const double scale = config.lambda_mask / B;
                    for (auto& g : dm_star.v) g *= scale;
                } else {
                    dm_star = Tensor(fwd.m_star.shape);
                }
                backward(params, cache, fwd, dlogits, dm_star, grads);
            }

            double l_cls = 0.0, l_mask = 0.0;
            for (int b = 0; b < B; ++b) {
                l_cls += sample_cls[static_cast<std::size_t>(b)];
                l_mask += sample_mask[static_cast<std::size_t>(b)];
            }
            l_cls /= B;
            l_mask /= B;
            const double total = l_cls + config.lambda_mask * l_mask;
            if (!std::isfinite(total)) {
                dump_bad_batch(out_dir, step, batch, sample_cls, sample_mask);
                throw Error("non-finite loss at step " + std::to_string(step) +
                            "; offending batch written to diagnostics.json");
            }

            opt.step(params, grads);
            ++step;
            log.step(step, epoch, l_cls, l_mask, config.lambda_mask, total);

            if (config.checkpoint_every > 0 && step % config.checkpoint_every == 0) {
                char name[64];
                std::snprintf(name, sizeof name, "step_%06ld.ckpt", step);
                fs::create_directories(fs::path(out_dir) / "checkpoints");
                save_checkpoint(make_checkpoint(step), (fs::path(out_dir) / "checkpoints" / name).string());
            }
        }

        const int finished_epoch = static_cast<int>(step / steps_per_epoch);
        const bool epoch_boundary = step % steps_per_epoch == 0;
        if (epoch_boundary && has_val && config.eval_every > 0 && finished_epoch % config.eval_every == 0) {
            const SplitEval ev = evaluate_split(params, manifest, "val", config.image_size,
                                                /*with_attention=*/true, config.mask_target);
            const double attention = ev.report.mean_attention_in_mask.value_or(0.0);
            log.eval(finished_epoch, step, ev.report.map, attention);
            if (ev.report.map > best_val_map) {
                best_val_map = ev.report.map;
                save_checkpoint(make_checkpoint(step), (fs::path(out_dir) / "checkpoint_best.ckpt").string());
            }
        }
    }

    TrainResult result;
    result.state = make_checkpoint(step);
    result.best_val_map = std::max(best_val_map, 0.0);
    result.out_dir = out_dir;
    save_checkpoint(result.state, (fs::path(out_dir) / "checkpoint_last.ckpt").string());
    return result;
}

AblationReport ablation(const TrainConfig& base_config, const Manifest& manifest,
                        const std::vector<std::uint64_t>& seeds, const std::string& out_dir) {
    if (seeds.size() < 3) throw ShapeError("ablation needs at least 3 seeds");

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IOError("cannot create " + out_dir + ": " + ec.message());

    AblationReport report;
    double sum_map[2] = {0.0, 0.0};
    double sum_att[2] = {0.0, 0.0};

    for (std::size_t si = 0; si < seeds.size(); ++si) {
        EvalReport per_lambda[2];
        for (int with_mask = 0; with_mask <= 1; ++with_mask) {
            TrainConfig config = base_config;
            config.seed = seeds[si];
            config.lambda_mask = with_mask ? 1.0 : 0.0;
            char run_name[64];
            std::snprintf(run_name, sizeof run_name, "seed%zu_lambda%d", si, with_mask);
            const std::string run_dir = (fs::path(out_dir) / run_name).string();

            const TrainResult result = train(config, manifest, run_dir);
            const SplitEval ev = evaluate_split(result.state.params, manifest, "test",
                                                config.image_size, /*with_attention=*/true,
                                                config.mask_target);
            per_lambda[with_mask] = ev.report;

            AblationRun run;
            run.seed = seeds[si];
            run.lambda_mask = config.lambda_mask;
            run.test_map = ev.report.map;
            run.mean_attention = ev.report.mean_attention_in_mask.value_or(0.0);
            report.runs.push_back(run);
            sum_map[with_mask] += run.test_map;
            sum_att[with_mask] += run.mean_attention;
        }
        // Per-class AP deltas (with minus without), descending.
        const auto deltas = compare_runs(per_lambda[1], per_lambda[0]);
        char delta_name[64];
        std::snprintf(delta_name, sizeof delta_name, "seed%zu_ap_deltas.tsv", si);
        write_deltas_tsv(deltas, manifest.label_space, (fs::path(out_dir) / delta_name).string());
    }

    const double n = static_cast<double>(seeds.size());
    report.mean_map_without = sum_map[0] / n;
    report.mean_map_with = sum_map[1] / n;
    report.mean_attention_without = sum_att[0] / n;
    report.mean_attention_with = sum_att[1] / n;

    nlohmann::ordered_json j;
    j["seeds"] = seeds;
    auto& runs = j["runs"] = nlohmann::ordered_json::array();
    for (const auto& r : report.runs) {
        nlohmann::ordered_json rj;
        rj["seed"] = r.seed;
        rj["lambda_mask"] = r.lambda_mask;
        rj["test_map"] = r.test_map;
        rj["mean_attention_in_mask"] = r.mean_attention;
        runs.push_back(rj);
    }
    j["mean_test_map_with_mask_loss"] = report.mean_map_with;
    j["mean_test_map_without_mask_loss"] = report.mean_map_without;
    j["map_delta"] = report.map_delta();
    j["mean_attention_with_mask_loss"] = report.mean_attention_with;
    j["mean_attention_without_mask_loss"] = report.mean_attention_without;
    j["attention_delta"] = report.attention_delta();
    {
        std::ofstream out(fs::path(out_dir) / "ablation.json");
        out << j.dump(2) << "\n";
    }
    {
        std::ofstream out(fs::path(out_dir) / "ablation.txt");
        char line[160];
        out << "seed        lambda   test_mAP  attention_in_mask\n";
        for (const auto& r : report.runs) {
            std::snprintf(line, sizeof line, "%-11llu %6.1f  %9.4f  %17.4f\n",
                          static_cast<unsigned long long>(r.seed), r.lambda_mask, r.test_map,
                          r.mean_attention);
            out << line;
        }
        std::snprintf(line, sizeof line, "mean mAP delta (with - without): %+.4f\n", report.map_delta());
        out << line;
        std::snprintf(line, sizeof line, "mean attention delta (with - without): %+.4f\n",
                      report.attention_delta());
        out << line;
    }
    return report;
}

} // namespace lga
