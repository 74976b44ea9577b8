#pragma once

#include <string>
#include <vector>

namespace flowproc {

// full precision decimal form, reparses to the identical double
std::string format_full(double v);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;  // every row matches the header width
};

// comma separated, one header row, LF endings; empty tables still get
// their header.  All writes go through a temp file + rename so a report
// either exists completely or not at all.
void write_csv(const std::string& path, const Table& t);

void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace flowproc
