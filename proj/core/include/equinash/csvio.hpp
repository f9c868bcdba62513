#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace equinash {

// %.17g decimal text so every double round-trips exactly; byte-stable output.
std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& file);

  void write_header(const std::vector<std::string>& names);
  void begin_row();
  void field(double v);
  void field(long long v);
  void field(const std::string& s);
  void end_row();

 private:
  std::ofstream out_;
  bool first_in_row_ = true;
  void sep();
};

}  // namespace equinash
