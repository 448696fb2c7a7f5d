#include "mtrl/plotting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace mtrl {

std::vector<double> smooth(const std::vector<double>& values, int window) {
    require(window >= 1, "smooth: window must be >= 1");
    std::vector<double> out(values.size());
    double acc = 0.0;
    for (size_t i = 0; i < values.size(); ++i) {
        acc += values[i];
        if (i >= size_t(window)) acc -= values[i - size_t(window)];
        size_t n = std::min(i + 1, size_t(window));
        out[i] = acc / double(n);
    }
    return out;
}

AggregatedCurve aggregate_metrics(const std::vector<std::string>& metrics_paths,
                                  const std::string& column, int window) {
    require(!metrics_paths.empty(), "aggregate: need at least one metrics file");
    std::vector<MetricsTable> tables;
    for (const auto& p : metrics_paths) tables.push_back(load_metrics(p));
    for (size_t i = 1; i < tables.size(); ++i)
        require(tables[i].columns == tables[0].columns,
                "aggregate: metrics files have mismatched columns (" +
                    metrics_paths[0] + " vs " + metrics_paths[i] + ")");
    size_t rows = tables[0].rows.size();
    for (const auto& t : tables)
        require(t.rows.size() == rows, "aggregate: metrics files have different lengths");

    std::vector<std::vector<double>> curves;
    for (auto& t : tables) curves.push_back(smooth(t.numeric_column(column), window));
    AggregatedCurve out;
    out.seeds = int(tables.size());
    out.episode = tables[0].numeric_column("episode");
    out.mean.resize(rows);
    out.stddev.assign(rows, 0.0);
    for (size_t r = 0; r < rows; ++r) {
        double m = 0.0;
        for (const auto& c : curves) m += c[r];
        m /= double(curves.size());
        out.mean[r] = m;
        if (curves.size() > 1) {
            double var = 0.0;
            for (const auto& c : curves) var += (c[r] - m) * (c[r] - m);
            out.stddev[r] = std::sqrt(var / double(curves.size()));
        }
    }
    return out;
}

void write_curve_csv(const AggregatedCurve& curve, const std::string& path) {
    std::ofstream f(path);
    require(f.good(), "cannot write: " + path);
    f << "episode,mean,stddev\n";
    for (size_t i = 0; i < curve.mean.size(); ++i)
        f << MetricsWriter::fmt(curve.episode[i]) << ','
          << MetricsWriter::fmt(curve.mean[i]) << ','
          << MetricsWriter::fmt(curve.stddev[i]) << "\n";
}

void write_curve_svg(const AggregatedCurve& curve, const std::string& title,
                     const std::string& path) {
    require(!curve.mean.empty(), "svg: empty curve");
    const double W = 720, H = 420;
    const double ml = 60, mr = 20, mt = 40, mb = 45;
    const double pw = W - ml - mr, ph = H - mt - mb;

    double x0 = curve.episode.front(), x1 = curve.episode.back();
    if (x1 <= x0) x1 = x0 + 1;
    double y0 = 0.0, y1 = 0.0;
    for (size_t i = 0; i < curve.mean.size(); ++i) {
        y0 = std::min(y0, curve.mean[i] - curve.stddev[i]);
        y1 = std::max(y1, curve.mean[i] + curve.stddev[i]);
    }
    if (y1 <= y0) y1 = y0 + 1;
    double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return mt + (y1 - y) / (y1 - y0) * ph; };
    auto n2 = [](double v) {
        char b[32];
        std::snprintf(b, sizeof b, "%.1f", v);
        return std::string(b);
    };

    std::ofstream f(path);
    require(f.good(), "cannot write: " + path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    f << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" "
         "font-family=\"sans-serif\">"
      << title << "</text>\n";

    // axes and ticks
    f << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw
      << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n";
    f << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
      << mt + ph << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        double xv = x0 + (x1 - x0) * i / 5.0;
        double yv = y0 + (y1 - y0) * i / 5.0;
        f << "<line x1=\"" << px(xv) << "\" y1=\"" << mt + ph << "\" x2=\"" << px(xv)
          << "\" y2=\"" << mt + ph + 4 << "\" stroke=\"black\"/>\n";
        f << "<text x=\"" << px(xv) << "\" y=\"" << mt + ph + 18
          << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
          << int(std::lround(xv)) << "</text>\n";
        f << "<line x1=\"" << ml - 4 << "\" y1=\"" << py(yv) << "\" x2=\"" << ml
          << "\" y2=\"" << py(yv) << "\" stroke=\"black\"/>\n";
        f << "<text x=\"" << ml - 8 << "\" y=\"" << py(yv) + 4
          << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
          << n2(yv) << "</text>\n";
    }
    f << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 8
      << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">episode"
         "</text>\n";

    // +-1 std band across seeds
    if (curve.seeds > 1) {
        f << "<polygon fill=\"#4477aa\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
        for (size_t i = 0; i < curve.mean.size(); ++i)
            f << px(curve.episode[i]) << ',' << py(curve.mean[i] + curve.stddev[i]) << ' ';
        for (size_t i = curve.mean.size(); i-- > 0;)
            f << px(curve.episode[i]) << ',' << py(curve.mean[i] - curve.stddev[i]) << ' ';
        f << "\"/>\n";
    }
    f << "<polyline fill=\"none\" stroke=\"#4477aa\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < curve.mean.size(); ++i)
        f << px(curve.episode[i]) << ',' << py(curve.mean[i]) << ' ';
    f << "\"/>\n</svg>\n";
}

}  // namespace mtrl
