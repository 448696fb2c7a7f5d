#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtrl/common.hpp"

namespace mtrl {

// Append-only CSV with a fixed column set declared up front. One row per test
// episode.
class MetricsWriter {
public:
    MetricsWriter() = default;
    MetricsWriter(const std::string& path, std::vector<std::string> columns);

    const std::vector<std::string>& columns() const { return columns_; }
    void append(const std::map<std::string, std::string>& row);
    void flush();
    int rows_written() const { return rows_; }

    static std::string fmt(double v);
    static std::string fmt(int v);

private:
    std::ofstream out_;
    std::vector<std::string> columns_;
    int rows_ = 0;
};

struct MetricsTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    int column_index(const std::string& name) const;
    std::vector<double> numeric_column(const std::string& name) const;
};

MetricsTable load_metrics(const std::string& path);

}  // namespace mtrl
