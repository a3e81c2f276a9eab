#include "lga/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

namespace lga {

std::optional<double> average_precision(const std::vector<double>& scores,
                                        const std::vector<bool>& positives) {
    if (scores.size() != positives.size())
        throw DimensionMismatch("scores and labels differ in length");
    const long total_pos = std::count(positives.begin(), positives.end(), true);
    if (total_pos == 0) return std::nullopt;

    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)]; });

    double ap = 0.0;
    long tp = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (!positives[static_cast<std::size_t>(order[rank])]) continue;
        ++tp;
        const double precision = static_cast<double>(tp) / static_cast<double>(rank + 1);
        ap += precision / static_cast<double>(total_pos);
    }
    return ap;
}

EvalReport evaluate(const ScoreTable& table) {
    const int N = table.num_samples();
    const int C = table.num_classes();
    if (N == 0 || C == 0) throw EmptyTable("score table is empty");
    if (static_cast<int>(table.gt_labels.size()) != N)
        throw DimensionMismatch("gt label count does not match score rows");
    for (int i = 0; i < N; ++i) {
        const int gt = table.gt_labels[static_cast<std::size_t>(i)];
        if (gt < 0 || gt >= C) throw IndexOutOfRange("gt label out of range at row " + std::to_string(i));
        double row_sum = 0.0;
        for (int c = 0; c < C; ++c) row_sum += table.scores.at2(i, c);
        if (std::fabs(row_sum - 1.0) > 1e-5)
            throw ShapeError("score row " + std::to_string(i) + " does not sum to 1");
    }

    EvalReport report;
    report.per_class_ap.assign(static_cast<std::size_t>(C), std::nullopt);
    report.per_class_support.assign(static_cast<std::size_t>(C), 0);

    double ap_sum = 0.0;
    int defined = 0;
    std::vector<double> col(static_cast<std::size_t>(N));
    std::vector<bool> pos(static_cast<std::size_t>(N));
    for (int c = 0; c < C; ++c) {
        long support = 0;
        for (int i = 0; i < N; ++i) {
            col[static_cast<std::size_t>(i)] = table.scores.at2(i, c);
            const bool p = table.gt_labels[static_cast<std::size_t>(i)] == c;
            pos[static_cast<std::size_t>(i)] = p;
            support += p;
        }
        report.per_class_support[static_cast<std::size_t>(c)] = support;
        const auto ap = average_precision(col, pos);
        report.per_class_ap[static_cast<std::size_t>(c)] = ap;
        if (ap) {
            ap_sum += *ap;
            ++defined;
        }
    }
    report.map = defined > 0 ? ap_sum / defined : 0.0;
    return report;
}

std::vector<ClassDelta> compare_runs(const EvalReport& a, const EvalReport& b) {
    if (a.per_class_ap.size() != b.per_class_ap.size())
        throw ClassCountMismatch("reports have different class counts");
    std::vector<ClassDelta> deltas;
    deltas.reserve(a.per_class_ap.size());
    for (std::size_t c = 0; c < a.per_class_ap.size(); ++c) {
        const double ap_a = a.per_class_ap[c].value_or(0.0);
        const double ap_b = b.per_class_ap[c].value_or(0.0);
        const bool both = a.per_class_ap[c] && b.per_class_ap[c];
        deltas.push_back({static_cast<int>(c), both ? ap_a - ap_b : 0.0});
    }
    std::stable_sort(deltas.begin(), deltas.end(),
                     [](const ClassDelta& x, const ClassDelta& y) { return x.delta > y.delta; });
    return deltas;
}

namespace {

std::string class_name(const ActionLabelSpace& labels, int c) {
    if (c < labels.num_classes()) return labels.class_names[static_cast<std::size_t>(c)];
    return "class_" + std::to_string(c);
}

} // namespace

void write_report_text(const EvalReport& report, const ActionLabelSpace& labels,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IOError("cannot open for writing: " + path);
    char line[256];
    out << "class                            support        AP\n";
    for (std::size_t c = 0; c < report.per_class_ap.size(); ++c) {
        const auto& ap = report.per_class_ap[c];
        if (ap)
            std::snprintf(line, sizeof line, "%-32s %7ld  %8.4f\n", class_name(labels, static_cast<int>(c)).c_str(),
                          report.per_class_support[c], *ap);
        else
            std::snprintf(line, sizeof line, "%-32s %7ld       n/a\n", class_name(labels, static_cast<int>(c)).c_str(),
                          report.per_class_support[c]);
        out << line;
    }
    std::snprintf(line, sizeof line, "mAP %.6f\n", report.map);
    out << line;
    if (report.mean_attention_in_mask) {
        std::snprintf(line, sizeof line, "mean_attention_in_mask %.6f\n", *report.mean_attention_in_mask);
        out << line;
    }
}

void write_report_json(const EvalReport& report, const ActionLabelSpace& labels,
                       const std::string& path) {
    nlohmann::ordered_json j;
    j["map"] = report.map;
    if (report.mean_attention_in_mask) j["mean_attention_in_mask"] = *report.mean_attention_in_mask;
    auto& classes = j["classes"] = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < report.per_class_ap.size(); ++c) {
        nlohmann::ordered_json entry;
        entry["name"] = class_name(labels, static_cast<int>(c));
        entry["support"] = report.per_class_support[c];
        if (report.per_class_ap[c])
            entry["ap"] = *report.per_class_ap[c];
        else
            entry["ap"] = nullptr;
        classes.push_back(entry);
    }
    std::ofstream out(path);
    if (!out) throw IOError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

void write_deltas_tsv(const std::vector<ClassDelta>& deltas, const ActionLabelSpace& labels,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IOError("cannot open for writing: " + path);
    char line[256];
    for (const auto& d : deltas) {
        std::snprintf(line, sizeof line, "%s\t%.6f\n", class_name(labels, d.class_index).c_str(), d.delta);
        out << line;
    }
}

} // namespace lga
