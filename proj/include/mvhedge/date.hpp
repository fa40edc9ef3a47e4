#pragma once

#include <cstdint>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace mvhedge {

/// Calendar date stored as days since 1970-01-01. Civil conversions use the
/// Gregorian-calendar day algorithms of Howard Hinnant's date library.
class Date {
public:
    Date() = default;
    Date(int year, unsigned month, unsigned day);

    static std::optional<Date> parse_iso(std::string_view text);  // "YYYY-MM-DD"
    static Date from_days(std::int64_t days) {
        Date d;
        d.days_ = days;
        return d;
    }

    std::int64_t days_since_epoch() const { return days_; }
    std::string to_iso() const;

    Date plus_days(std::int64_t n) const { return from_days(days_ + n); }

    friend std::int64_t operator-(Date a, Date b) { return a.days_ - b.days_; }
    auto operator<=>(const Date&) const = default;

private:
    std::int64_t days_ = 0;
};

}  // namespace mvhedge
