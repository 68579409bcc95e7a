#ifndef OWLEYE_METRICS_HPP
#define OWLEYE_METRICS_HPP

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>

#include "owleye/augmentor.hpp"

namespace owleye {

/// Confusion counts with buggy as the positive class.
struct Confusion {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long tn = 0;

    void add(bool truth_buggy, bool predicted_buggy) {
        if (truth_buggy) {
            (predicted_buggy ? tp : fn) += 1;
        } else {
            (predicted_buggy ? fp : tn) += 1;
        }
    }

    long total() const { return tp + fp + fn + tn; }

    // Undefined ratios (zero denominator) are absent, never 0.
    std::optional<double> precision() const {
        if (tp + fp == 0) return std::nullopt;
        return static_cast<double>(tp) / static_cast<double>(tp + fp);
    }
    std::optional<double> recall() const {
        if (tp + fn == 0) return std::nullopt;
        return static_cast<double>(tp) / static_cast<double>(tp + fn);
    }
    std::optional<double> f1() const {
        const auto p = precision();
        const auto r = recall();
        if (!p || !r || *p + *r == 0.0) return std::nullopt;
        return 2.0 * *p * *r / (*p + *r);
    }
    std::optional<double> accuracy() const {
        if (total() == 0) return std::nullopt;
        return static_cast<double>(tp + tn) / static_cast<double>(total());
    }

    friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// Overall counts plus a per-category breakdown. A row with a category
/// counts toward that category whatever its label, so clean rows tagged with
/// a category (the untouched counterpart of an augmented screenshot) supply
/// that category's false positives. Untagged clean rows only reach the
/// overall row.
struct MetricsReport {
    Confusion overall;
    std::map<BugCategory, Confusion> per_category;

    void add(bool truth_buggy, std::optional<BugCategory> category, bool predicted_buggy) {
        overall.add(truth_buggy, predicted_buggy);
        if (category) per_category[*category].add(truth_buggy, predicted_buggy);
    }

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Three decimals, rounded half-up; absent values print as "-".
inline std::string format_metric(std::optional<double> v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", std::floor(*v * 1000.0 + 0.5) / 1000.0);
    return buf;
}

/// Evaluation table: overall row, then one row per category present.
inline std::string format_metrics_table(const MetricsReport& report) {
    std::string out;
    char line[128];
    std::snprintf(line, sizeof line, "%-20s %9s %9s %9s\n", "", "Precision", "Recall", "F1");
    out += line;
    auto row = [&](const std::string& name, const Confusion& c) {
        std::snprintf(line, sizeof line, "%-20s %9s %9s %9s\n", name.c_str(), format_metric(c.precision()).c_str(),
                      format_metric(c.recall()).c_str(), format_metric(c.f1()).c_str());
        out += line;
    };
    row("Overall", report.overall);
    for (BugCategory c : kAllCategories) {
        if (auto it = report.per_category.find(c); it != report.per_category.end()) row(std::string(display_name(c)), it->second);
    }
    return out;
}

}  // namespace owleye

#endif
