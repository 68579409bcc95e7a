#include <gtest/gtest.h>

#include "owleye/metrics.hpp"

using namespace owleye;

namespace {

Confusion counts(long tp, long fp, long fn, long tn) {
    Confusion c;
    c.tp = tp;
    c.fp = fp;
    c.fn = fn;
    c.tn = tn;
    return c;
}

}  // namespace

TEST(Metrics, Counts679Of798And800) {
    // 679 true positives out of 798 predicted and 800 actual buggy.
    const auto c = counts(679, 798 - 679, 800 - 679, 0);
    EXPECT_EQ(format_metric(c.precision()), "0.851");
    EXPECT_EQ(format_metric(c.recall()), "0.849");
    EXPECT_EQ(format_metric(c.f1()), "0.850");
    EXPECT_NEAR(*c.precision(), 0.850, 0.001);
    EXPECT_NEAR(*c.recall(), 0.848, 0.001);
    EXPECT_NEAR(*c.f1(), 0.849, 0.001);
    EXPECT_NEAR(*c.f1(), 2.0 * 679 / (798 + 800), 1e-15);
}

TEST(Metrics, PerfectClassifier) {
    const auto c = counts(5, 0, 0, 7);
    EXPECT_EQ(c.precision(), 1.0);
    EXPECT_EQ(c.recall(), 1.0);
    EXPECT_EQ(c.f1(), 1.0);
    EXPECT_EQ(c.accuracy(), 1.0);
}

TEST(Metrics, AllCleanPredictions) {
    const auto c = counts(0, 0, 4, 6);
    EXPECT_FALSE(c.precision());
    EXPECT_EQ(c.recall(), 0.0);
    EXPECT_FALSE(c.f1());
    EXPECT_EQ(format_metric(c.precision()), "-");
}

TEST(Metrics, EmptyIsAbsent) {
    const Confusion c;
    EXPECT_FALSE(c.precision());
    EXPECT_FALSE(c.recall());
    EXPECT_FALSE(c.accuracy());
}

TEST(Metrics, AddRoutesCounts) {
    Confusion c;
    c.add(true, true);
    c.add(true, false);
    c.add(false, true);
    c.add(false, false);
    c.add(false, false);
    EXPECT_EQ(c, counts(1, 1, 1, 2));
    EXPECT_EQ(c.total(), 5);
}

TEST(Metrics, RoundHalfUp) {
    EXPECT_EQ(format_metric(0.8505), "0.851");
    EXPECT_EQ(format_metric(0.0), "0.000");
    EXPECT_EQ(format_metric(1.0), "1.000");
}

TEST(Report, CategoryRowsAndOverall) {
    MetricsReport r;
    r.add(true, BugCategory::NullValue, true);
    r.add(false, BugCategory::NullValue, true);
    r.add(true, BugCategory::MissingImage, false);
    r.add(false, std::nullopt, true);
    EXPECT_EQ(r.overall, counts(1, 2, 1, 0));
    EXPECT_EQ(r.per_category.at(BugCategory::NullValue), counts(1, 1, 0, 0));
    EXPECT_EQ(r.per_category.at(BugCategory::MissingImage), counts(0, 0, 1, 0));
    EXPECT_FALSE(r.per_category.count(BugCategory::TextOverlap));
}

TEST(Report, TableLayout) {
    MetricsReport r;
    r.add(true, BugCategory::TextOverlap, true);
    r.add(false, BugCategory::TextOverlap, false);
    const auto t = format_metrics_table(r);
    EXPECT_NE(t.find("Precision"), std::string::npos);
    EXPECT_NE(t.find("Overall"), std::string::npos);
    EXPECT_NE(t.find("Text overlap"), std::string::npos);
    EXPECT_EQ(t.find("NULL value"), std::string::npos);
    EXPECT_LT(t.find("Overall"), t.find("Text overlap"));
}
