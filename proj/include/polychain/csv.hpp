#pragma once

// CSV output: UTF-8, LF line endings, '.' decimal separator, reals at 17
// significant digits. Every file starts with a comment line carrying the
// config hash, then a header row. Files are written whole and renamed into
// place so readers never see a partial result.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace polychain {

inline std::string format_real(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

inline std::string format_int(long long value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%lld", value);
  return buf;
}

inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

class CsvWriter {
 public:
  CsvWriter(std::filesystem::path path, const std::vector<std::string>& columns,
            const std::string& config_hash)
      : path_(std::move(path)), n_columns_(columns.size()) {
    buffer_ = "# config_hash=" + config_hash + "\n";
    append_row(columns);
  }

  struct Cell {
    std::string text;
    Cell(double v) : text(format_real(v)) {}
    Cell(int v) : text(format_int(v)) {}
    Cell(long v) : text(format_int(v)) {}
    Cell(long long v) : text(format_int(v)) {}
    Cell(unsigned long v) : text(format_int(static_cast<long long>(v))) {}
    Cell(bool v) : text(v ? "1" : "0") {}
    Cell(const char* v) : text(v) {}
    Cell(std::string v) : text(std::move(v)) {}
  };

  void row(std::initializer_list<Cell> cells) {
    if (cells.size() != n_columns_)
      throw std::logic_error("CsvWriter: row width does not match header");
    std::vector<std::string> texts;
    texts.reserve(cells.size());
    for (const auto& c : cells) texts.push_back(c.text);
    append_row(texts);
  }

  // Flushes atomically; the file appears only once complete.
  void close() {
    if (closed_) return;
    write_file_atomic(path_, buffer_);
    closed_ = true;
  }

  const std::filesystem::path& path() const { return path_; }

  ~CsvWriter() {
    try {
      close();
    } catch (...) {
      // destructor must not throw; an explicit close() reports errors
    }
  }

 private:
  void append_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) buffer_ += ',';
      buffer_ += cells[i];
    }
    buffer_ += '\n';
  }

  std::filesystem::path path_;
  std::size_t n_columns_;
  std::string buffer_;
  bool closed_ = false;
};

}  // namespace polychain
