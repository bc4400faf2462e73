#ifndef MESO_CSV_HPP
#define MESO_CSV_HPP

#include <string>
#include <vector>

namespace meso {

// Minimal RFC-style CSV: mandatory header row, comma separator, quoting for
// fields containing comma/quote/newline.  Numbers are written with %.17g so
// reruns of the same build produce byte-identical files.

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // -1 when absent
};

std::string format_double(double v);

class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header);

    void add_row(const std::vector<std::string>& cells);
    std::string str() const { return buffer_; }

  private:
    std::string buffer_;
    std::size_t width_;
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& origin);

// Reads a numeric series file: header of variable names, one row per epoch.
struct SeriesData {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;  // columns[i][t]
    std::size_t epochs() const { return columns.empty() ? 0 : columns.front().size(); }
};

SeriesData read_series(const std::string& path);

// Atomic write: temp file in the target directory, then rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace meso

#endif
