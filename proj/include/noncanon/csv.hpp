#ifndef NONCANON_CSV_HPP
#define NONCANON_CSV_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "noncanon/rational.hpp"
#include "noncanon/types.hpp"

namespace noncanon {

// Shortest decimal string that round-trips to the same double. This keeps
// CSV output bit-stable under parse/serialize cycles and renders exact
// decimals (0.72, 0.01) verbatim.
std::string format_double(double x);

std::uint64_t fnv1a64(std::string_view bytes);

// RFC 4180 quoting (fields holding comma, quote or newline are quoted with
// doubled quotes), LF line endings. Bodies are built in memory so the file
// contents are a pure function of the appended data.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns);

  CsvWriter& field(const std::string& s);
  CsvWriter& field(double x);
  CsvWriter& field(long long n);
  CsvWriter& field(const Rational& r);
  CsvWriter& field(Complex z);  // expands to two fields: re, im
  CsvWriter& empty_field();
  void end_row();

  const std::string& body() const { return body_; }
  std::uint64_t checksum() const { return fnv1a64(body_); }

  struct FileInfo {
    std::string path;
    std::size_t bytes;
    std::uint64_t checksum;
  };
  FileInfo write_file(const std::string& path) const;

 private:
  void raw(const std::string& s);

  std::string body_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

}  // namespace noncanon

#endif
