#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace actiml {

// Calendar date, no timezone semantics. The dataset layout is local time.
struct Date {
    int year{0};
    int month{0}; // 1..12
    int day{0};   // 1..31

    auto operator<=>(const Date&) const = default;
};

// Minute-resolution wall-clock timestamp (seconds kept for the file format).
struct DateTime {
    Date date;
    int hour{0};
    int minute{0};
    int second{0};

    auto operator<=>(const DateTime&) const = default;
};

// Days since 1970-01-01 (proleptic Gregorian), and its inverse.
std::int64_t days_from_civil(const Date& d);
Date civil_from_days(std::int64_t days);

Date add_days(const Date& d, int n);

bool is_valid_date(const Date& d);

// Strict formats: "YYYY-MM-DD" and "YYYY-MM-DD HH:MM:SS".
std::optional<Date> try_parse_date(std::string_view text);
std::optional<DateTime> try_parse_datetime(std::string_view text);

// Throwing variants; raise ParseError on malformed text.
Date parse_date(std::string_view text);
DateTime parse_datetime(std::string_view text);

std::string to_string(const Date& d);
std::string to_string(const DateTime& t);

} // namespace actiml
