#include "flowproc/report.hpp"

#include <cstdio>
#include <fstream>

#include "flowproc/errors.hpp"

namespace flowproc {

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp + " for writing");
        out << content;
        if (!out) throw IoError("short write to " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw IoError("cannot move " + tmp + " into place");
}

void write_csv(const std::string& path, const Table& t) {
    std::string body;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        if (i) body += ',';
        body += t.header[i];
    }
    body += '\n';
    for (const auto& row : t.rows) {
        if (row.size() != t.header.size()) throw IoError("csv row width mismatch");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) body += ',';
            body += format_full(row[i]);
        }
        body += '\n';
    }
    write_text_atomic(path, body);
}

}  // namespace flowproc
