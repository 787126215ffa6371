#ifndef TALOS_CSV_HPP
#define TALOS_CSV_HPP

#include <charconv>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace talos {

// Shortest representation that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns)
        : out_(path), n_cols_(columns.size()) {
        if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path);
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) out_ << ',';
            out_ << columns[i];
        }
        out_ << '\n';
    }

    void row(const std::vector<double>& values) {
        if (values.size() != n_cols_)
            throw std::runtime_error("CsvWriter: row width mismatch");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out_ << ',';
            out_ << format_double(values[i]);
        }
        out_ << '\n';
    }

    void close() { out_.close(); }

private:
    std::ofstream out_;
    std::size_t n_cols_;
};

} // namespace talos

#endif // TALOS_CSV_HPP
