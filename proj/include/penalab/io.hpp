#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace penalab {

// 17 significant digits; round-trips any double.
std::string fmt17(double v);

// Writes one CSV line (LF terminated). Fields are written verbatim.
void write_csv_row(std::ostream& os, const std::vector<std::string>& fields);

}  // namespace penalab
