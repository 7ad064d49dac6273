#include "sseg/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace sseg {

namespace {

Metric ratio(long long num, long long den, const char* what) {
    if (den == 0)
        return Metric::undefined(std::string(what) + ": empty denominator");
    return Metric::of(double(num) / double(den));
}

long long overlap(const std::vector<int>& a, const std::vector<int>& b) {
    // both sorted ascending
    long long n = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j])
            ++i;
        else if (a[i] > b[j])
            ++j;
        else {
            ++n;
            ++i;
            ++j;
        }
    }
    return n;
}

long long class_size(const InstanceSet& s, int c) {
    long long n = 0;
    for (const auto& inst : s.instances[c]) n += inst.cells.size();
    n += s.noise[c].size();
    return n;
}

// |P_c u G_c| from instance sets (union of all cells of the class).
long long class_union(const InstanceSet& a, const InstanceSet& b, int c) {
    std::vector<int> ca, cb;
    for (const auto& inst : a.instances[c])
        ca.insert(ca.end(), inst.cells.begin(), inst.cells.end());
    ca.insert(ca.end(), a.noise[c].begin(), a.noise[c].end());
    for (const auto& inst : b.instances[c])
        cb.insert(cb.end(), inst.cells.begin(), inst.cells.end());
    cb.insert(cb.end(), b.noise[c].begin(), b.noise[c].end());
    std::sort(ca.begin(), ca.end());
    std::sort(cb.begin(), cb.end());
    return static_cast<long long>(ca.size() + cb.size()) - overlap(ca, cb);
}

}  // namespace

std::array<ClassCounts, kNumClasses> class_counts(const LabelGrid& pred,
                                                  const LabelGrid& gt) {
    SSEG_CHECK(pred.rows == gt.rows && pred.cols == gt.cols,
               "class_metrics: grid shape mismatch");
    std::array<ClassCounts, kNumClasses> out{};
    for (std::size_t i = 0; i < gt.classes.size(); ++i) {
        if (!gt.mask[i]) continue;
        int p = pred.classes[i], g = gt.classes[i];
        out[p].pred++;
        out[g].gt++;
        if (p == g) out[p].inter++;
    }
    return out;
}

std::array<ClassMetrics, kNumClasses> class_metrics(const LabelGrid& pred,
                                                    const LabelGrid& gt) {
    auto counts = class_counts(pred, gt);
    std::array<ClassMetrics, kNumClasses> out;
    for (int c = 0; c < kNumClasses; ++c) {
        const ClassCounts& n = counts[c];
        out[c].precision = ratio(n.inter, n.pred, "precision");
        out[c].recall = ratio(n.inter, n.gt, "recall");
        out[c].iou = ratio(n.inter, n.pred + n.gt - n.inter, "iou");
    }
    return out;
}

Matching match_instances(const InstanceSet& pred, const InstanceSet& gt,
                         int cls) {
    const auto& P = pred.instances[cls];
    const auto& G = gt.instances[cls];
    Matching m;
    m.match.assign(P.size(), -1);

    std::vector<int> gt_order(G.size());
    std::iota(gt_order.begin(), gt_order.end(), 0);
    std::sort(gt_order.begin(), gt_order.end(), [&](int a, int b) {
        if (G[a].cells.size() != G[b].cells.size())
            return G[a].cells.size() > G[b].cells.size();
        return a < b;
    });

    std::vector<bool> pred_taken(P.size(), false);
    for (int gi : gt_order) {
        double best_iou = 0.0;
        int best_pi = -1;
        for (int pi = 0; pi < static_cast<int>(P.size()); ++pi) {
            if (pred_taken[pi]) continue;
            long long inter = overlap(P[pi].cells, G[gi].cells);
            if (inter == 0) continue;
            long long uni = static_cast<long long>(P[pi].cells.size() +
                                                   G[gi].cells.size()) -
                            inter;
            double iou = double(inter) / double(uni);
            if (iou > best_iou) {
                best_iou = iou;
                best_pi = pi;
            }
        }
        if (best_pi >= 0) {
            pred_taken[best_pi] = true;
            m.match[best_pi] = gi;
        }
    }
    return m;
}

ClassMetrics instance_metrics(const InstanceSet& pred, const InstanceSet& gt,
                              const Matching& matching, int cls) {
    const auto& P = pred.instances[cls];
    const auto& G = gt.instances[cls];
    long long num = 0;
    for (int pi = 0; pi < static_cast<int>(P.size()); ++pi) {
        int gi = matching.match[pi];
        if (gi < 0) continue;
        num += overlap(P[pi].cells, G[gi].cells);
    }
    long long p_c = class_size(pred, cls);
    long long g_c = class_size(gt, cls);
    long long uni = class_union(pred, gt, cls);
    ClassMetrics out;
    out.precision = ratio(num, p_c, "instance precision");
    out.recall = ratio(num, g_c, "instance recall");
    out.iou = ratio(num, uni, "instance iou");
    return out;
}

ClassMetrics EvalReport::class_level(int c) const {
    const ClassCounts& n = counts[c];
    ClassMetrics out;
    out.precision = ratio(n.inter, n.pred, "precision");
    out.recall = ratio(n.inter, n.gt, "recall");
    out.iou = ratio(n.inter, n.pred + n.gt - n.inter, "iou");
    return out;
}

ClassMetrics EvalReport::instance_level(int c) const {
    const ClassCounts& n = counts[c];
    ClassMetrics out;
    out.precision = ratio(n.inst_inter, n.pred, "instance precision");
    out.recall = ratio(n.inst_inter, n.gt, "instance recall");
    out.iou =
        ratio(n.inst_inter, n.pred + n.gt - n.inter, "instance iou");
    return out;
}

EvalReport report(const std::vector<FrameEval>& frames) {
    SSEG_CHECK(!frames.empty(), "report: no frames");
    EvalReport rep{};
    for (const auto& f : frames) {
        auto counts = class_counts(*f.pred_labels, *f.gt_labels);
        for (int c = 0; c < kNumClasses; ++c) rep.counts[c].add(counts[c]);
        if (f.pred_instances && f.gt_instances) {
            for (int c = 1; c < kNumClasses; ++c) {
                Matching m =
                    match_instances(*f.pred_instances, *f.gt_instances, c);
                const auto& P = f.pred_instances->instances[c];
                const auto& G = f.gt_instances->instances[c];
                for (int pi = 0; pi < static_cast<int>(P.size()); ++pi)
                    if (m.match[pi] >= 0)
                        rep.counts[c].inst_inter +=
                            overlap(P[pi].cells, G[m.match[pi]].cells);
            }
        }
    }
    return rep;
}

namespace {
const char* kClassNames[kNumClasses] = {"background", "car", "pedestrian",
                                        "cyclist"};

std::string fmt_metric(const Metric& m) {
    if (!m.defined) return "   n/a";
    char buf[16];
    std::snprintf(buf, sizeof buf, "%6.3f", m.value);
    return buf;
}
}  // namespace

std::string format_report(const EvalReport& rep) {
    std::ostringstream os;
    os << "class       |  class-level P      R    IoU |  instance-level P   "
          "   R    IoU\n";
    for (int c = 1; c < kNumClasses; ++c) {
        ClassMetrics cl = rep.class_level(c);
        ClassMetrics il = rep.instance_level(c);
        char name[16];
        std::snprintf(name, sizeof name, "%-11s", kClassNames[c]);
        os << name << " |        " << fmt_metric(cl.precision) << " "
           << fmt_metric(cl.recall) << " " << fmt_metric(cl.iou)
           << " |           " << fmt_metric(il.precision) << " "
           << fmt_metric(il.recall) << " " << fmt_metric(il.iou) << "\n";
    }
    return os.str();
}

std::string report_keyvalues(const EvalReport& rep) {
    std::ostringstream os;
    auto emit = [&os](const std::string& key, const Metric& m) {
        if (m.defined)
            os << key << "=" << m.value << "\n";
        else
            os << key << "=undefined(" << m.reason << ")\n";
    };
    for (int c = 0; c < kNumClasses; ++c) {
        std::string base = kClassNames[c];
        ClassMetrics cl = rep.class_level(c);
        ClassMetrics il = rep.instance_level(c);
        emit(base + ".class.precision", cl.precision);
        emit(base + ".class.recall", cl.recall);
        emit(base + ".class.iou", cl.iou);
        emit(base + ".instance.precision", il.precision);
        emit(base + ".instance.recall", il.recall);
        emit(base + ".instance.iou", il.iou);
        os << base << ".support.pred=" << rep.counts[c].pred << "\n";
        os << base << ".support.gt=" << rep.counts[c].gt << "\n";
    }
    return os.str();
}

}  // namespace sseg
