#pragma once

#include <string>
#include <vector>

namespace sfde {

/// Tabular report with a fixed header per subcommand; CSV cells use 17
/// significant digits so doubles round-trip.
struct ReportTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string format_double(double v);  // %.17g
std::string to_csv(const ReportTable& table);
std::string to_json(const ReportTable& table);

/// Writes to the path, or stdout when path is empty.
void write_report(const ReportTable& table, const std::string& format,
                  const std::string& path);

} // namespace sfde
