#pragma once

#include <string>

namespace fairdyn {

// Shortest text that parses back to the same double ("%.17g" fallback).
std::string format_number(double value);

}  // namespace fairdyn
