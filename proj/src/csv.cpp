#include "meso/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "meso/error.hpp"

namespace meso {

const char* to_string(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::config: return "config";
        case ErrorCategory::io: return "io";
        case ErrorCategory::domain: return "domain";
        case ErrorCategory::budget: return "budget";
        case ErrorCategory::internal: return "internal";
    }
    return "internal";
}

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

bool needs_quotes(const std::string& s) {
    return s.find_first_of(",\"\n\r") != std::string::npos;
}

std::string quote(const std::string& s) {
    if (!needs_quotes(s)) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) {
    add_row(header);
    width_ = header.size();
}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
    if (width_ > 0 && cells.size() != width_)
        throw Error(ErrorCategory::internal, "csv row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) buffer_ += ',';
        buffer_ += quote(cells[i]);
    }
    buffer_ += '\n';
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
    CsvTable table;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_has_data = false;

    auto end_field = [&] {
        row.push_back(field);
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        if (table.header.empty())
            table.header = row;
        else
            table.rows.push_back(row);
        row.clear();
        row_has_data = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"': in_quotes = true; row_has_data = true; break;
            case ',': end_field(); row_has_data = true; break;
            case '\r': break;
            case '\n':
                if (row_has_data || !field.empty() || !row.empty()) end_row();
                break;
            default: field += c; row_has_data = true; break;
        }
    }
    if (in_quotes) throw io_error(origin + ": unterminated quoted field");
    if (row_has_data || !field.empty() || !row.empty()) end_row();
    if (table.header.empty()) throw io_error(origin + ": missing header row");
    return table;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str(), path);
}

SeriesData read_series(const std::string& path) {
    CsvTable table = read_csv(path);
    SeriesData data;
    data.names = table.header;
    data.columns.assign(table.header.size(), {});
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != table.header.size())
            throw io_error(path + ": row " + std::to_string(r + 2) + " has " +
                           std::to_string(row.size()) + " fields, expected " +
                           std::to_string(table.header.size()));
        for (std::size_t c = 0; c < row.size(); ++c) {
            char* end = nullptr;
            double v = std::strtod(row[c].c_str(), &end);
            if (end == row[c].c_str() || *end != '\0')
                throw io_error(path + ": row " + std::to_string(r + 2) + ", column " +
                               table.header[c] + ": not a number: '" + row[c] + "'");
            data.columns[c].push_back(v);
        }
    }
    return data;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot write " + tmp.string());
        out << content;
        if (!out.good()) throw io_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw io_error("rename failed: " + target.string() + ": " + ec.message());
}

}  // namespace meso
