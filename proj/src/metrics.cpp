#include "mtrl/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace mtrl {

MetricsWriter::MetricsWriter(const std::string& path, std::vector<std::string> columns)
    : out_(path), columns_(std::move(columns)) {
    require(out_.good(), "cannot open metrics file for writing: " + path);
    for (size_t i = 0; i < columns_.size(); ++i) {
        if (i) out_ << ',';
        out_ << columns_[i];
    }
    out_ << '\n';
}

std::string MetricsWriter::fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string MetricsWriter::fmt(int v) { return std::to_string(v); }

void MetricsWriter::append(const std::map<std::string, std::string>& row) {
    for (size_t i = 0; i < columns_.size(); ++i) {
        if (i) out_ << ',';
        auto it = row.find(columns_[i]);
        out_ << (it == row.end() ? "" : it->second);
    }
    out_ << '\n';
    ++rows_;
}

void MetricsWriter::flush() { out_.flush(); }

int MetricsTable::column_index(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return int(i);
    fail("metrics: no column named '" + name + "'");
}

std::vector<double> MetricsTable::numeric_column(const std::string& name) const {
    int c = column_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(std::strtod(r[size_t(c)].c_str(), nullptr));
    return out;
}

MetricsTable load_metrics(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open metrics file: " + path);
    MetricsTable t;
    std::string line;
    require(bool(std::getline(in, line)), "empty metrics file: " + path);
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.columns.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> row;
        std::stringstream ls(line);
        while (std::getline(ls, cell, ',')) row.push_back(cell);
        row.resize(t.columns.size());
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace mtrl
