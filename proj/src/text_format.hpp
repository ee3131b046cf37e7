#pragma once

// Shared line-oriented encoding for the model files: decimal numbers with 17
// significant digits, one matrix row per line, space separated.

#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace isarec::text {

std::string format_double(double v);
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

void write_row(std::ostream& out, const Eigen::Ref<const Eigen::RowVectorXd>& row);
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m);

// Reads the next line, failing on end of input. Strips a trailing '\r'.
std::string next_line(std::istream& in, std::string_view what);
Eigen::RowVectorXd read_row(std::istream& in, Eigen::Index cols,
                            std::string_view what);
Eigen::MatrixXd read_matrix(std::istream& in, Eigen::Index rows,
                            Eigen::Index cols, std::string_view what);

// A section line "[name] key=value key=value".
struct Section {
  std::string name;
  std::map<std::string, std::string> fields;

  const std::string& get(const std::string& key) const;
  double number(const std::string& key) const;
  long long integer(const std::string& key) const;
};

Section parse_section(const std::string& line);
Section expect_section(std::istream& in, std::string_view name);

std::vector<std::string> split(std::string_view s, char sep);
std::string trim(std::string_view s);

}  // namespace isarec::text
