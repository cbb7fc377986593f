#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gsdeepc::csv {

// Shortest representation that parses back to the same double.
std::string format_double(double value);
std::string format_fixed(double value, int decimals);

double parse_double(std::string_view text);
long parse_long(std::string_view text);

std::vector<std::string_view> split(std::string_view line, char sep = ',');
std::string_view trim(std::string_view text);

// Row-major dense matrix, one CSV row per matrix row, no header.
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(std::istream& in);

}  // namespace gsdeepc::csv
