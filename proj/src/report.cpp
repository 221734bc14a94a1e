#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "panicle/eval.hpp"

namespace panicle {

namespace {
namespace fs = std::filesystem;

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::ofstream openOut(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    return out;
}

struct SvgCanvas {
    std::ostringstream body;
    int width, height;

    SvgCanvas(int w, int h) : width(w), height(h) {}

    std::string finish() const {
        std::ostringstream out;
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
            << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
            << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n"
            << body.str() << "</svg>\n";
        return out.str();
    }
};

// Diverging blue-white-red map on [-1, 1].
std::string heatColor(double v) {
    v = std::clamp(v, -1.0, 1.0);
    int r, g, b;
    if (v >= 0) {
        r = 255;
        g = b = static_cast<int>(std::lround(255 * (1.0 - v)));
    } else {
        b = 255;
        r = g = static_cast<int>(std::lround(255 * (1.0 + v)));
    }
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

void writeScatter(const NamedSeries& ns, const fs::path& path) {
    const auto& pred = ns.series.predicted;
    const auto& meas = ns.series.measured;
    double lo = meas[0], hi = meas[0];
    for (const double v : meas) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (const double v : pred) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi <= lo) hi = lo + 1.0;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    constexpr int kSize = 480, kMargin = 56;
    const double span = kSize - 2 * kMargin;
    const auto sx = [&](double v) { return kMargin + (v - lo) / (hi - lo) * span; };
    const auto sy = [&](double v) { return kSize - kMargin - (v - lo) / (hi - lo) * span; };

    SvgCanvas svg(kSize, kSize);
    svg.body << "<line x1=\"" << num(sx(lo)) << "\" y1=\"" << num(sy(lo)) << "\" x2=\""
             << num(sx(hi)) << "\" y2=\"" << num(sy(hi))
             << "\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n";
    svg.body << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << num(span)
             << "\" height=\"" << num(span) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (std::size_t i = 0; i < meas.size(); ++i)
        svg.body << "<circle cx=\"" << num(sx(meas[i])) << "\" cy=\"" << num(sy(pred[i]))
                 << "\" r=\"3\" fill=\"#1f77b4\" fill-opacity=\"0.8\"/>\n";
    svg.body << "<text x=\"" << kSize / 2 << "\" y=\"" << kSize - 16
             << "\" text-anchor=\"middle\" font-size=\"13\">measured";
    if (!ns.series.units.empty()) svg.body << " (" << ns.series.units << ")";
    svg.body << "</text>\n";
    svg.body << "<text x=\"16\" y=\"" << kSize / 2 << "\" text-anchor=\"middle\" font-size=\"13\""
             << " transform=\"rotate(-90 16 " << kSize / 2 << ")\">predicted</text>\n";
    svg.body << "<text x=\"" << kMargin + 8 << "\" y=\"" << kMargin + 18 << "\" font-size=\"13\">"
             << ns.name << ": R\xc2\xb2=" << num(rSquared(ns.series))
             << " RMSE=" << num(rmse(ns.series)) << " rRMSE=" << num(rrmse(ns.series))
             << "%</text>\n";
    openOut(path) << svg.finish();
}

void writeHeatmap(const std::vector<std::string>& names,
                  const std::vector<std::vector<double>>& corr, const fs::path& path) {
    const std::size_t n = names.size();
    constexpr int kCell = 64, kMargin = 96;
    const int size = kMargin + static_cast<int>(n) * kCell + 24;
    SvgCanvas svg(size, size);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const int x = kMargin + static_cast<int>(j) * kCell;
            const int y = kMargin + static_cast<int>(i) * kCell;
            svg.body << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCell
                     << "\" height=\"" << kCell << "\" fill=\"" << heatColor(corr[i][j])
                     << "\" stroke=\"#444444\"/>\n";
            svg.body << "<text x=\"" << x + kCell / 2 << "\" y=\"" << y + kCell / 2 + 4
                     << "\" text-anchor=\"middle\" font-size=\"12\">" << num(corr[i][j])
                     << "</text>\n";
        }
        svg.body << "<text x=\"" << kMargin - 6 << "\" y=\""
                 << kMargin + static_cast<int>(i) * kCell + kCell / 2 + 4
                 << "\" text-anchor=\"end\" font-size=\"12\">" << names[i] << "</text>\n";
        svg.body << "<text x=\"" << kMargin + static_cast<int>(i) * kCell + kCell / 2 << "\" y=\""
                 << kMargin - 8 << "\" text-anchor=\"middle\" font-size=\"12\">" << names[i]
                 << "</text>\n";
    }
    openOut(path) << svg.finish();
}

}  // namespace

void writeReport(const std::vector<NamedSeries>& series,
                 const std::vector<std::string>& corr_names,
                 const std::vector<std::vector<double>>& corr, const std::string& out_dir) {
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) throw DataError("cannot create output directory: " + out_dir);

    auto metrics = openOut(dir / "metrics.csv");
    metrics << "trait,n,r2,rmse,rrmse_percent\n";
    for (const NamedSeries& ns : series) {
        metrics << ns.name << "," << ns.series.measured.size() << "," << num(rSquared(ns.series))
                << "," << num(rmse(ns.series)) << "," << num(rrmse(ns.series)) << "\n";
        writeScatter(ns, dir / ("scatter_" + ns.name + ".svg"));
    }

    if (!corr_names.empty()) {
        auto corr_csv = openOut(dir / "corr.csv");
        corr_csv << "trait";
        for (const std::string& name : corr_names) corr_csv << "," << name;
        corr_csv << "\n";
        for (std::size_t i = 0; i < corr_names.size(); ++i) {
            corr_csv << corr_names[i];
            for (std::size_t j = 0; j < corr_names.size(); ++j) corr_csv << "," << num(corr[i][j]);
            corr_csv << "\n";
        }
        writeHeatmap(corr_names, corr, dir / "heatmap.svg");
    }
}

void evalRegressionFile(const std::string& pairs_csv, const std::string& out_dir) {
    std::ifstream in(pairs_csv);
    if (!in) throw DataError("cannot open: " + pairs_csv);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty pairs file: " + pairs_csv);

    struct TraitData {
        std::map<std::string, std::pair<double, double>> by_sample;  // ordered for determinism
    };
    std::map<std::string, TraitData> traits;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string sample, trait, pred_s, meas_s;
        if (!std::getline(ls, sample, ',') || !std::getline(ls, trait, ',') ||
            !std::getline(ls, pred_s, ',') || !std::getline(ls, meas_s))
            throw DataError(pairs_csv + ":" + std::to_string(lineno) + ": expected 4 columns");
        try {
            traits[trait].by_sample[sample] = {std::stod(pred_s), std::stod(meas_s)};
        } catch (const std::exception&) {
            throw DataError(pairs_csv + ":" + std::to_string(lineno) + ": bad numeric value");
        }
    }
    if (traits.empty()) {
        writeReport({}, {}, {}, out_dir);
        return;
    }

    std::vector<NamedSeries> series;
    for (const auto& [name, data] : traits) {
        NamedSeries ns;
        ns.name = name;
        for (const auto& [sample, pm] : data.by_sample) {
            ns.series.predicted.push_back(pm.first);
            ns.series.measured.push_back(pm.second);
        }
        series.push_back(std::move(ns));
    }

    // Cross-trait correlation over samples present for every trait.
    std::vector<std::string> corr_names;
    std::vector<std::vector<double>> corr;
    if (traits.size() >= 2) {
        std::vector<std::string> shared;
        for (const auto& [sample, pm] : traits.begin()->second.by_sample) {
            bool everywhere = true;
            for (const auto& [name, data] : traits)
                if (!data.by_sample.count(sample)) everywhere = false;
            if (everywhere) shared.push_back(sample);
        }
        if (shared.size() >= 2) {
            std::vector<std::vector<double>> vectors;
            for (const auto& [name, data] : traits) {
                corr_names.push_back(name);
                std::vector<double> v;
                for (const std::string& s : shared) v.push_back(data.by_sample.at(s).first);
                vectors.push_back(std::move(v));
            }
            corr = correlationMatrix(corr_names, vectors);
        }
    }
    writeReport(series, corr_names, corr, out_dir);
}

}  // namespace panicle
