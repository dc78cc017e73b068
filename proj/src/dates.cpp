#include "tempcast/dates.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

#include "tempcast/errors.hpp"

namespace tempcast {

namespace {

bool parse_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

} // namespace

Date parse_date(std::string_view text) {
    int y = 0, m = 0, d = 0;
    const bool shape_ok = text.size() == 10 && text[4] == '-' && text[7] == '-' &&
                          parse_int(text.substr(0, 4), y) && parse_int(text.substr(5, 2), m) &&
                          parse_int(text.substr(8, 2), d);
    if (!shape_ok)
        throw InputError("bad date '" + std::string(text) + "' (expected YYYY-MM-DD)");
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw InputError("impossible calendar date '" + std::string(text) + "'");
    return std::chrono::sys_days{ymd};
}

std::string format_date(Date d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

} // namespace tempcast
