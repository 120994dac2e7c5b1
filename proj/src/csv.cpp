#include "noncanon/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace noncanon {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

CsvWriter::CsvWriter(std::vector<std::string> columns) : columns_(columns.size()) {
  if (columns.empty()) throw std::invalid_argument("CSV needs at least one column");
  for (const auto& c : columns) raw(c);
  end_row();
}

void CsvWriter::raw(const std::string& s) {
  if (in_row_ > 0) body_ += ',';
  bool needs_quote = s.find_first_of(",\"\n\r") != std::string::npos;
  if (needs_quote) {
    body_ += '"';
    for (char c : s) {
      if (c == '"') body_ += '"';
      body_ += c;
    }
    body_ += '"';
  } else {
    body_ += s;
  }
  ++in_row_;
}

CsvWriter& CsvWriter::field(const std::string& s) { raw(s); return *this; }
CsvWriter& CsvWriter::field(double x) { raw(format_double(x)); return *this; }
CsvWriter& CsvWriter::field(long long n) { raw(std::to_string(n)); return *this; }
CsvWriter& CsvWriter::field(const Rational& r) { raw(r.to_string()); return *this; }
CsvWriter& CsvWriter::field(Complex z) {
  raw(format_double(z.real()));
  raw(format_double(z.imag()));
  return *this;
}
CsvWriter& CsvWriter::empty_field() { raw(""); return *this; }

void CsvWriter::end_row() {
  if (in_row_ != columns_)
    throw std::logic_error("CSV row has " + std::to_string(in_row_) + " fields, header has " +
                           std::to_string(columns_));
  body_ += '\n';
  in_row_ = 0;
}

CsvWriter::FileInfo CsvWriter::write_file(const std::string& path) const {
  if (in_row_ != 0) throw std::logic_error("CSV row in progress at write_file");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(body_.data(), static_cast<std::streamsize>(body_.size()));
  out.close();
  if (!out) throw std::runtime_error("write failed: " + path);
  return FileInfo{path, body_.size(), checksum()};
}

}  // namespace noncanon
