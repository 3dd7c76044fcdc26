#pragma once

#include <string>
#include <vector>

namespace cpg {

// shortest decimal representation that round-trips to the same double;
// keeps golden files stable across platforms
std::string fmt_double(double v);

std::string csv_row(const std::vector<std::string>& cells);

}  // namespace cpg
