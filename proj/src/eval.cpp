#include "panicle/eval.hpp"

#include <cmath>

namespace panicle {

void PairedSeries::validate() const {
    if (predicted.size() != measured.size())
        throw UsageError("paired series: predicted and measured lengths differ");
    if (predicted.size() < 2) throw UsageError("paired series: at least 2 pairs required");
    for (const double v : predicted)
        if (!std::isfinite(v)) throw UsageError("paired series: non-finite predicted value");
    for (const double v : measured)
        if (!std::isfinite(v)) throw UsageError("paired series: non-finite measured value");
}

namespace {
double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x;
    return s / static_cast<double>(v.size());
}
}  // namespace

double rSquared(const PairedSeries& s) {
    s.validate();
    const double m = mean(s.measured);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < s.measured.size(); ++i) {
        const double r = s.measured[i] - s.predicted[i];
        const double d = s.measured[i] - m;
        ss_res += r * r;
        ss_tot += d * d;
    }
    if (ss_tot <= 0.0) throw UsageError("rSquared: measured series has zero variance");
    return 1.0 - ss_res / ss_tot;
}

double rmse(const PairedSeries& s) {
    s.validate();
    double ss = 0.0;
    for (std::size_t i = 0; i < s.measured.size(); ++i) {
        const double r = s.measured[i] - s.predicted[i];
        ss += r * r;
    }
    return std::sqrt(ss / static_cast<double>(s.measured.size()));
}

double rrmse(const PairedSeries& s) {
    const double m = mean(s.measured);
    if (m == 0.0) throw UsageError("rrmse: measured mean is zero");
    return 100.0 * rmse(s) / m;
}

std::vector<std::vector<double>> correlationMatrix(
    const std::vector<std::string>& names, const std::vector<std::vector<double>>& series) {
    if (names.size() != series.size())
        throw UsageError("correlationMatrix: names and series count differ");
    if (series.empty()) return {};
    const std::size_t n = series[0].size();
    if (n < 2) throw UsageError("correlationMatrix: vectors need at least 2 entries");
    std::vector<double> means(series.size()), sds(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i].size() != n)
            throw UsageError("correlationMatrix: vector lengths differ");
        means[i] = mean(series[i]);
        double ss = 0.0;
        for (const double v : series[i]) ss += (v - means[i]) * (v - means[i]);
        sds[i] = std::sqrt(ss);
        if (sds[i] <= 0.0)
            throw UsageError("correlationMatrix: zero variance in vector '" + names[i] + "'");
    }
    std::vector<std::vector<double>> corr(series.size(),
                                          std::vector<double>(series.size(), 1.0));
    for (std::size_t i = 0; i < series.size(); ++i) {
        for (std::size_t j = i + 1; j < series.size(); ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                dot += (series[i][k] - means[i]) * (series[j][k] - means[j]);
            corr[i][j] = corr[j][i] = dot / (sds[i] * sds[j]);
        }
    }
    return corr;
}

}  // namespace panicle
