#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ssgl::detail {

// Plain comma-separated records: no quoting, `\n` or `\r\n` line ends.
struct CsvRecord {
    std::size_t line = 0;  // 1-based
    std::vector<std::string_view> cells;
};

inline std::vector<std::string_view> split_cells(std::string_view line, char sep = ',') {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

// Empty lines are skipped; line numbers still count them.
inline std::vector<CsvRecord> split_records(std::string_view text) {
    std::vector<CsvRecord> records;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        if (!line.empty()) records.push_back({line_no, split_cells(line)});
        start = end + 1;
    }
    return records;
}

inline std::string at_line(std::string_view source, std::size_t line) {
    return std::string(source) + ":" + std::to_string(line);
}

}  // namespace ssgl::detail
