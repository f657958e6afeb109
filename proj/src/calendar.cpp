#include "actiml/calendar.hpp"

#include <array>
#include <charconv>
#include <cstdio>

#include "actiml/errors.hpp"

namespace actiml {

namespace {

bool parse_int_field(std::string_view text, int& out) {
    if (text.empty()) return false;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto result = std::from_chars(begin, end, out);
    return result.ec == std::errc{} && result.ptr == end;
}

int days_in_month(int year, int month) {
    static constexpr std::array<int, 12> lengths = {31, 28, 31, 30, 31, 30,
                                                    31, 31, 30, 31, 30, 31};
    if (month == 2) {
        const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
        return leap ? 29 : 28;
    }
    return lengths[month - 1];
}

} // namespace

// Howard Hinnant's civil-day algorithms.
std::int64_t days_from_civil(const Date& d) {
    int y = d.year;
    const int m = d.month;
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy =
        (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
        static_cast<unsigned>(d.day) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) -
           719468;
}

Date civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m),
                static_cast<int>(d)};
}

Date add_days(const Date& d, int n) {
    return civil_from_days(days_from_civil(d) + n);
}

bool is_valid_date(const Date& d) {
    return d.month >= 1 && d.month <= 12 && d.day >= 1 &&
           d.day <= days_in_month(d.year, d.month);
}

std::optional<Date> try_parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    Date d;
    if (!parse_int_field(text.substr(0, 4), d.year) ||
        !parse_int_field(text.substr(5, 2), d.month) ||
        !parse_int_field(text.substr(8, 2), d.day)) {
        return std::nullopt;
    }
    if (!is_valid_date(d)) return std::nullopt;
    return d;
}

std::optional<DateTime> try_parse_datetime(std::string_view text) {
    if (text.size() != 19 || text[10] != ' ' || text[13] != ':' || text[16] != ':') {
        return std::nullopt;
    }
    const auto date = try_parse_date(text.substr(0, 10));
    if (!date) return std::nullopt;
    DateTime t;
    t.date = *date;
    if (!parse_int_field(text.substr(11, 2), t.hour) ||
        !parse_int_field(text.substr(14, 2), t.minute) ||
        !parse_int_field(text.substr(17, 2), t.second)) {
        return std::nullopt;
    }
    if (t.hour > 23 || t.minute > 59 || t.second > 59 || t.hour < 0 ||
        t.minute < 0 || t.second < 0) {
        return std::nullopt;
    }
    return t;
}

Date parse_date(std::string_view text) {
    const auto d = try_parse_date(text);
    if (!d) throw ParseError("expected date 'YYYY-MM-DD', got '" + std::string(text) + "'");
    return *d;
}

DateTime parse_datetime(std::string_view text) {
    const auto t = try_parse_datetime(text);
    if (!t) {
        throw ParseError("expected timestamp 'YYYY-MM-DD HH:MM:SS', got '" +
                         std::string(text) + "'");
    }
    return *t;
}

std::string to_string(const Date& d) {
    char buffer[16];
    std::snprintf(buffer, sizeof(buffer), "%04d-%02d-%02d", d.year, d.month, d.day);
    return buffer;
}

std::string to_string(const DateTime& t) {
    char buffer[24];
    std::snprintf(buffer, sizeof(buffer), "%04d-%02d-%02d %02d:%02d:%02d",
                  t.date.year, t.date.month, t.date.day, t.hour, t.minute, t.second);
    return buffer;
}

} // namespace actiml
