#pragma once

#include <string>
#include <vector>

#include "mtrl/metrics.hpp"

namespace mtrl {

// Smoothed per-seed curves aggregated to mean +- one standard deviation.
struct AggregatedCurve {
    std::vector<double> episode;
    std::vector<double> mean;
    std::vector<double> stddev;  // zero when a single seed is given
    int seeds = 0;
};

// trailing moving average; window 1 reproduces the input
std::vector<double> smooth(const std::vector<double>& values, int window);

// All metrics files must share the same column set and episode axis.
AggregatedCurve aggregate_metrics(const std::vector<std::string>& metrics_paths,
                                  const std::string& column, int window);

void write_curve_csv(const AggregatedCurve& curve, const std::string& path);

// Static SVG line plot with an optional +-1 std band.
void write_curve_svg(const AggregatedCurve& curve, const std::string& title,
                     const std::string& path);

}  // namespace mtrl
