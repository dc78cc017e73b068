#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace tempcast {

using Date = std::chrono::sys_days;

// Strict ISO-8601 calendar date (YYYY-MM-DD). Throws InputError on anything
// else, including impossible dates like 2009-02-29.
Date parse_date(std::string_view text);

std::string format_date(Date d);

inline int year_of(Date d) {
    return static_cast<int>(std::chrono::year_month_day{d}.year());
}

inline Date first_day_of_year(int y) {
    return std::chrono::sys_days{std::chrono::year{y} / std::chrono::January / 1};
}

// Whole days from a to b (negative if b precedes a).
inline long days_between(Date a, Date b) {
    return (b - a).count();
}

} // namespace tempcast
