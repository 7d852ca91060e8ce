#include "robustbp/csv.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace robustbp {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    if (line.find(',') == std::string::npos) {
        // whitespace-separated fallback for bare single/multi column files
        std::istringstream iss(line);
        std::string tok;
        while (iss >> tok) cells.push_back(tok);
        return cells;
    }
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(trim(cur));
    return cells;
}

bool parse_number(const std::string& cell, double& out) {
    if (cell.empty()) return false;
    char* end = nullptr;
    out = std::strtod(cell.c_str(), &end);
    return end == cell.c_str() + cell.size();
}

bool is_blank_or_nan(const std::string& cell) {
    if (cell.empty()) return true;
    std::string low = cell;
    std::transform(low.begin(), low.end(), low.begin(), ::tolower);
    return low == "nan" || low == "na";
}

int resolve_column(const std::string& spec, const std::vector<std::string>& header,
                   bool has_header, int fallback) {
    if (spec.empty()) return fallback;
    // numeric index?
    bool digits = !spec.empty() && std::all_of(spec.begin(), spec.end(), ::isdigit);
    if (digits) return std::stoi(spec);
    if (!has_header) throw DataError("column '" + spec + "' named but the file has no header");
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == spec) return int(i);
    throw DataError("column '" + spec + "' not found in header");
}

}  // namespace

double mad_scale(const std::vector<double>& xs) {
    std::vector<double> v = xs;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    const double med = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    std::vector<double> dev(n);
    for (std::size_t i = 0; i < n; ++i) dev[i] = std::fabs(xs[i] - med);
    std::sort(dev.begin(), dev.end());
    const double mad = n % 2 ? dev[n / 2] : 0.5 * (dev[n / 2 - 1] + dev[n / 2]);
    return 1.4826 * mad;
}

IngestResult ingest_csv(const std::string& path, const ColumnSpec& spec) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open input file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    if (lines.empty()) throw DataError("empty input file: " + path);

    // header detection: the value cell of the first non-empty row
    std::size_t first = 0;
    while (first < lines.size() && trim(lines[first]).empty()) ++first;
    if (first == lines.size()) throw DataError("no data rows in " + path);
    std::vector<std::string> head = split_row(lines[first]);
    bool has_header = false;
    {
        double tmp;
        // a header row has a non-numeric, non-blank first cell
        if (!head.empty() && !is_blank_or_nan(head[0]) && !parse_number(head[0], tmp))
            has_header = true;
    }
    const int vcol = resolve_column(spec.value_col, head, has_header, 0);
    const int gcol = spec.group_col.empty() ? -1 : resolve_column(spec.group_col, head, has_header, -1);

    std::vector<double> values;
    std::vector<std::string> groups;
    IngestResult res;
    for (std::size_t i = first + (has_header ? 1 : 0); i < lines.size(); ++i) {
        const std::string raw = trim(lines[i]);
        if (raw.empty()) {
            ++res.rejected_rows;
            continue;
        }
        const auto cells = split_row(lines[i]);
        if (vcol >= int(cells.size()))
            throw DataError("line " + std::to_string(i + 1) + ": missing value column");
        const std::string& cell = cells[vcol];
        if (is_blank_or_nan(cell)) {
            ++res.rejected_rows;
            continue;
        }
        double v;
        if (!parse_number(cell, v))
            throw DataError("line " + std::to_string(i + 1) + ": cannot parse '" + cell + "'");
        if (std::isnan(v)) {
            ++res.rejected_rows;
            continue;
        }
        values.push_back(v);
        if (gcol >= 0) {
            if (gcol >= int(cells.size()))
                throw DataError("line " + std::to_string(i + 1) + ": missing group column");
            groups.push_back(cells[gcol]);
        }
    }
    if (values.empty()) throw DataError("no usable rows in " + path);

    auto normalize = [&](std::vector<double>& xs) {
        if (!spec.mad_normalize) return;
        const double s = mad_scale(xs);
        if (!(s > 0.0)) throw DataError("MAD normalization failed: zero scale");
        for (double& x : xs) x /= s;
    };

    if (gcol < 0) {
        normalize(values);
        res.x = Sample(values);
        return res;
    }
    // split by the two group labels in order of first appearance
    std::vector<std::string> labels;
    for (const auto& g : groups)
        if (std::find(labels.begin(), labels.end(), g) == labels.end()) labels.push_back(g);
    if (labels.size() != 2)
        throw DataError("group column must define exactly two groups, found " +
                        std::to_string(labels.size()));
    std::vector<double> gx, gy;
    for (std::size_t i = 0; i < values.size(); ++i)
        (groups[i] == labels[0] ? gx : gy).push_back(values[i]);
    if (gx.empty() || gy.empty()) throw DataError("one of the groups is empty");
    normalize(gx);
    normalize(gy);
    res.x = Sample(gx);
    res.y = Sample(gy);
    res.group_labels = labels;
    return res;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out_ += ',';
        out_ += header[i];
    }
    out_ += '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ += ',';
        out_ += cells[i];
    }
    out_ += '\n';
}

void CsvWriter::row_values(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_double(v));
    row(cells);
}

void CsvWriter::write_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write output file: " + path);
    out << out_;
}

}  // namespace robustbp
