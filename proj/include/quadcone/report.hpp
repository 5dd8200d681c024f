#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace qc {

struct Table {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

// Numbers are printed with 17 significant digits so reruns compare byte for byte.
std::string to_csv(const Table& t);

struct Series {
    std::string label;
    std::vector<double> x, y;
};

// Standalone log-log plot; each series is annotated with its fitted slope.
std::string loglog_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<Series>& series);

struct LogLogFit {
    double slope = 0;
    double intercept = 0;
};
LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

void write_text(const std::string& path, const std::string& content);

std::string version_string();

}  // namespace qc
