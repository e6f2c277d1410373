#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace pitchcast {

using Date = std::chrono::sys_days;

/// Parses YYYY-MM-DD. Returns nullopt on any malformed or out-of-range input.
std::optional<Date> parse_iso_date(std::string_view text);

/// Parses a date using a pattern built from the tokens %Y, %m, %d (and %y
/// for two-digit years, mapped to 19xx for values >= 70). Every other
/// pattern character must match literally.
std::optional<Date> parse_date(std::string_view text, std::string_view pattern);

std::string format_iso_date(Date d);

inline long days_between(Date from, Date to) { return (to - from).count(); }

/// Calendar quarter 1..4.
int quarter_of(Date d);

}  // namespace pitchcast
