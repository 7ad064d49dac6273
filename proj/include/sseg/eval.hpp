#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "sseg/instance.hpp"
#include "sseg/projection.hpp"

namespace sseg {

// A metric value, or the reason it is undefined (division by zero).
struct Metric {
    double value = 0.0;
    bool defined = false;
    std::string reason;

    static Metric of(double v) { return {v, true, {}}; }
    static Metric undefined(std::string why) {
        return {0.0, false, std::move(why)};
    }
};

struct ClassMetrics {
    Metric precision, recall, iou;
};

// match[i] = ground-truth index matched to prediction i, or -1.
struct Matching {
    std::vector<int> match;
};

// Raw set-cardinality accumulators; ratios are taken at report time so
// multi-frame aggregation is a plain sum (micro-averaging).
struct ClassCounts {
    long long pred = 0;        // |P_c|
    long long gt = 0;          // |G_c|
    long long inter = 0;       // |P_c n G_c|
    long long inst_inter = 0;  // sum_i |P_ic n G_M(i)c|

    void add(const ClassCounts& o) {
        pred += o.pred;
        gt += o.gt;
        inter += o.inter;
        inst_inter += o.inst_inter;
    }
};

struct EvalReport {
    std::array<ClassCounts, kNumClasses> counts;
    ClassMetrics class_level(int c) const;
    ClassMetrics instance_level(int c) const;
};

// Point-wise metrics over occupied cells.
std::array<ClassMetrics, kNumClasses> class_metrics(const LabelGrid& pred,
                                                    const LabelGrid& gt);

std::array<ClassCounts, kNumClasses> class_counts(const LabelGrid& pred,
                                                  const LabelGrid& gt);

// Greedy instance matching: ground truth sorted by point count descending
// (ties: lower index first); each claims the unmatched prediction with the
// largest IoU. Zero-IoU candidates never match.
Matching match_instances(const InstanceSet& pred, const InstanceSet& gt,
                         int cls);

ClassMetrics instance_metrics(const InstanceSet& pred, const InstanceSet& gt,
                              const Matching& matching, int cls);

struct FrameEval {
    const LabelGrid* pred_labels;
    const LabelGrid* gt_labels;
    const InstanceSet* pred_instances;  // may be null: class-level only
    const InstanceSet* gt_instances;
};

EvalReport report(const std::vector<FrameEval>& frames);

// Aligned per-class table, class-level and instance-level columns.
std::string format_report(const EvalReport& rep);
// Flat key=value form.
std::string report_keyvalues(const EvalReport& rep);

}  // namespace sseg
