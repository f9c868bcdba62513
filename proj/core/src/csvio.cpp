#include "equinash/csvio.hpp"

#include <cstdio>
#include <stdexcept>

namespace equinash {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& file) : out_(file, std::ios::binary) {
  if (!out_) throw std::runtime_error("cannot open for writing: " + file);
}

void CsvWriter::sep() {
  if (!first_in_row_) out_ << ',';
  first_in_row_ = false;
}

void CsvWriter::write_header(const std::vector<std::string>& names) {
  begin_row();
  for (const auto& n : names) field(n);
  end_row();
}

void CsvWriter::begin_row() { first_in_row_ = true; }

void CsvWriter::field(double v) {
  sep();
  out_ << format_double(v);
}

void CsvWriter::field(long long v) {
  sep();
  out_ << v;
}

void CsvWriter::field(const std::string& s) {
  sep();
  out_ << s;
}

void CsvWriter::end_row() { out_ << '\n'; }

}  // namespace equinash
