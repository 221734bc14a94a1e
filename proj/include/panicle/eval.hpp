#ifndef PANICLE_EVAL_HPP
#define PANICLE_EVAL_HPP

#include <string>
#include <vector>

#include "panicle/types.hpp"

namespace panicle {

struct PairedSeries {
    std::vector<double> predicted;
    std::vector<double> measured;  // ground truth
    std::string units;

    void validate() const;  // equal lengths >= 2, finite values
};

// 1 - SS_res/SS_tot against the measured values. Throws when the measured
// series has zero variance.
double rSquared(const PairedSeries& s);

double rmse(const PairedSeries& s);

// 100 * rmse / mean(measured); the denominator is the measured mean, which
// reproduces the published accuracy figures. Throws when that mean is zero.
double rrmse(const PairedSeries& s);

// Pearson correlation matrix; unit diagonal, symmetric. Throws naming the
// offending vector when one has zero variance.
std::vector<std::vector<double>> correlationMatrix(
    const std::vector<std::string>& names, const std::vector<std::vector<double>>& series);

struct NamedSeries {
    std::string name;
    PairedSeries series;
};

// Deterministic report files in out_dir: metrics.csv, corr.csv,
// scatter_<trait>.svg per series, heatmap.svg.
void writeReport(const std::vector<NamedSeries>& series,
                 const std::vector<std::string>& corr_names,
                 const std::vector<std::vector<double>>& corr, const std::string& out_dir);

// pairs.csv rows: sample_id,trait,predicted,measured. Groups by trait,
// computes the metrics and the cross-trait correlation of predicted values
// (over samples shared by all traits), and writes the report.
void evalRegressionFile(const std::string& pairs_csv, const std::string& out_dir);

}  // namespace panicle

#endif
