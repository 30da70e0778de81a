#include "sfde/report.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include <json.hpp>

namespace sfde {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string to_csv(const ReportTable& table) {
    std::string out;
    for (size_t i = 0; i < table.header.size(); ++i)
        out += (i ? "," : "") + table.header[i];
    out += "\n";
    for (const auto& row : table.rows) {
        for (size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
        out += "\n";
    }
    return out;
}

std::string to_json(const ReportTable& table) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& row : table.rows) {
        nlohmann::json obj;
        for (size_t i = 0; i < table.header.size() && i < row.size(); ++i)
            obj[table.header[i]] = row[i];
        arr.push_back(obj);
    }
    return arr.dump(2) + "\n";
}

void write_report(const ReportTable& table, const std::string& format,
                  const std::string& path) {
    const std::string text = format == "json" ? to_json(table) : to_csv(table);
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << text;
}

} // namespace sfde
