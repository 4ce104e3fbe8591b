#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace aggdiff {

/// Fixed 17-significant-digit decimal so CSVs diff stably across runs.
inline std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
        if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path.string());
    }

    void header(const std::vector<std::string>& names) { write_line(names); }

    void row(const std::vector<double>& values) {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (double v : values) cells.push_back(format_g17(v));
        write_line(cells);
    }

    void row(const std::vector<std::string>& cells) { write_line(cells); }

private:
    void write_line(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    std::ofstream out_;
};

/// Run manifest: written with status=running before the work, rewritten with
/// status=complete (plus wall time and output list) after it.
class Manifest {
public:
    Manifest(std::filesystem::path path, std::vector<std::pair<std::string, std::string>> entries)
        : path_(std::move(path)), entries_(std::move(entries)),
          start_(std::chrono::steady_clock::now()) {
        write("running", -1.0);
    }

    void add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }

    void add_output(const std::string& file) { outputs_.push_back(file); }

    void finalize() {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        write("complete", secs);
    }

private:
    void write(const std::string& status, double seconds) const {
        std::ofstream out(path_, std::ios::trunc);
        out << "status = " << status << "\n";
        for (const auto& [k, v] : entries_) out << k << " = " << v << "\n";
        for (const auto& f : outputs_) out << "output = " << f << "\n";
        if (seconds >= 0.0) out << "wall_seconds = " << format_g17(seconds) << "\n";
    }

    std::filesystem::path path_;
    std::vector<std::pair<std::string, std::string>> entries_;
    std::vector<std::string> outputs_;
    std::chrono::steady_clock::time_point start_;
};

} // namespace aggdiff
