#pragma once

#include <string>

namespace vransplit {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

}  // namespace vransplit
