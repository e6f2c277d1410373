#include "pitchcast/date.hpp"

#include <cstdio>

namespace pitchcast {

namespace {

bool read_digits(std::string_view text, std::size_t& pos, std::size_t count, int& out) {
    if (pos + count > text.size()) {
        return false;
    }
    int value = 0;
    for (std::size_t i = 0; i < count; ++i) {
        char c = text[pos + i];
        if (c < '0' || c > '9') {
            return false;
        }
        value = value * 10 + (c - '0');
    }
    pos += count;
    out = value;
    return true;
}

}  // namespace

std::optional<Date> parse_date(std::string_view text, std::string_view pattern) {
    int y = -1, m = -1, d = -1;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        if (pattern[i] == '%' && i + 1 < pattern.size()) {
            char token = pattern[++i];
            bool ok = false;
            switch (token) {
                case 'Y': ok = read_digits(text, pos, 4, y); break;
                case 'y':
                    ok = read_digits(text, pos, 2, y);
                    if (ok) y += (y >= 70 ? 1900 : 2000);
                    break;
                case 'm': ok = read_digits(text, pos, 2, m); break;
                case 'd': ok = read_digits(text, pos, 2, d); break;
                default: return std::nullopt;
            }
            if (!ok) {
                return std::nullopt;
            }
        } else {
            if (pos >= text.size() || text[pos] != pattern[i]) {
                return std::nullopt;
            }
            ++pos;
        }
    }
    if (pos != text.size() || y < 0 || m < 0 || d < 0) {
        return std::nullopt;
    }
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                    std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    return Date{ymd};
}

std::optional<Date> parse_iso_date(std::string_view text) { return parse_date(text, "%Y-%m-%d"); }

std::string format_iso_date(Date d) {
    std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

int quarter_of(Date d) {
    std::chrono::year_month_day ymd{d};
    return static_cast<int>((static_cast<unsigned>(ymd.month()) - 1) / 3 + 1);
}

}  // namespace pitchcast
