#pragma once

#include <optional>
#include <string>
#include <vector>

namespace polypseg::svg {

struct Series {
    std::string name;
    std::string color;
    std::vector<std::optional<double>> values;
    /// Optional symmetric error bar per point; empty for none.
    std::vector<std::optional<double>> errors;
};

/// Standalone SVG line chart of metrics in [0,1] against categorical x labels.
std::string line_plot(const std::string& title, const std::vector<int>& xs, const std::vector<Series>& series);

}  // namespace polypseg::svg
