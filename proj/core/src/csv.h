// CSV emission with a fixed number format so reruns are byte-identical.

#ifndef MFG_SRC_CSV_H_
#define MFG_SRC_CSV_H_

#include <optional>
#include <string>
#include <vector>

namespace mfg::detail {

// Shortest round-trip-safe form ("%.17g"); throws NumericError on
// non-finite values.
std::string format_number(double x);
// Empty for nullopt.
std::string format_cell(const std::optional<double>& x);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  // Throws ConfigError when the width does not match the header.
  void add_row(std::vector<std::string> cells);
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Creates parent directories; throws IoError on failure.
void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace mfg::detail

#endif  // MFG_SRC_CSV_H_
