#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "robustbp/sample.hpp"

namespace robustbp {

struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// 12 significant digits; infinities serialize as "inf"/"-inf"
std::string format_double(double v);

struct ColumnSpec {
    std::string value_col;  // name or 0-based index; empty = first column
    std::string group_col;  // optional: name or 0-based index splitting two groups
    bool mad_normalize = false;  // per-group x / (1.4826 * MAD)
};

struct IngestResult {
    Sample x{std::vector<double>{0.0}};
    std::optional<Sample> y;
    int rejected_rows = 0;  // blank / NaN rows skipped
    std::vector<std::string> group_labels;
};

// One or two numeric samples from a delimited text file. The first row is
// treated as a header when its value cell is not numeric. Unparseable cells
// raise DataError with the line number; blank/NaN cells drop the row.
IngestResult ingest_csv(const std::string& path, const ColumnSpec& spec);

// median absolute deviation scale, normal-consistency constant 1.4826
double mad_scale(const std::vector<double>& xs);

// minimal CSV writer with deterministic float formatting
class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header);
    void row(const std::vector<std::string>& cells);
    void row_values(const std::vector<double>& values);
    const std::string& str() const { return out_; }
    void write_file(const std::string& path) const;

  private:
    std::size_t width_;
    std::string out_;
};

}  // namespace robustbp
