#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mcqn {

/// Locale-independent, 12 significant digits; "inf", "-inf", "nan".
std::string format_number(double value);

/// Parses a locale-independent decimal. Throws InputError on junk.
double parse_number(std::string_view text);

/// Splits "1,0,0.5" into numbers. Throws InputError.
std::vector<double> parse_number_list(std::string_view text);

}  // namespace mcqn
