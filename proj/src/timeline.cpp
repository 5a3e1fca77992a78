#include "ticksync/timeline.hpp"

#include <limits>
#include <numeric>

namespace ticksync {

namespace {

constexpr std::int64_t kNsPerSec = 1'000'000'000;
constexpr std::int64_t kSecPerDay = 86'400;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

// Proleptic Gregorian civil <-> day count (days since 1970-01-01).
std::int64_t days_from_civil(std::int64_t y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = floor_div(y, 400);
    const std::int64_t yoe = y - era * 400;                                 // [0, 399]
    const std::int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1; // [0, 365]
    const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;          // [0, 146096]
    return era * 146097 + doe - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = floor_div(z, 146097);
    const std::int64_t doe = z - era * 146097;
    const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = yoe + era * 400;
    const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const std::int64_t mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y += m <= 2;
}

void append_padded(std::string& out, std::int64_t value, int width) {
    char buf[20];
    int n = 0;
    do {
        buf[n++] = static_cast<char>('0' + value % 10);
        value /= 10;
    } while (value > 0);
    for (int i = n; i < width; ++i) out.push_back('0');
    while (n > 0) out.push_back(buf[--n]);
}

} // namespace

std::string to_rfc3339(UtcInstant t) {
    std::int64_t days = floor_div(t.ns, kNsPerSec * kSecPerDay);
    std::int64_t rem_ns = t.ns - days * kNsPerSec * kSecPerDay; // [0, 86400e9)
    std::int64_t secs = rem_ns / kNsPerSec;
    std::int64_t frac = rem_ns % kNsPerSec;

    std::int64_t year;
    int month, day;
    civil_from_days(days, year, month, day);
    if (year < 0 || year > 9999) throw Error("timestamp outside representable year range");

    std::string out;
    out.reserve(30);
    append_padded(out, year, 4);
    out.push_back('-');
    append_padded(out, month, 2);
    out.push_back('-');
    append_padded(out, day, 2);
    out.push_back('T');
    append_padded(out, secs / 3600, 2);
    out.push_back(':');
    append_padded(out, (secs / 60) % 60, 2);
    out.push_back(':');
    append_padded(out, secs % 60, 2);
    out.push_back('.');
    append_padded(out, frac, 9);
    out.push_back('Z');
    return out;
}

namespace {

std::int64_t parse_digits(std::string_view s, std::size_t pos, std::size_t count) {
    std::int64_t v = 0;
    for (std::size_t i = pos; i < pos + count; ++i) {
        if (i >= s.size() || s[i] < '0' || s[i] > '9')
            throw SchemaError("bad timestamp: " + std::string(s));
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

} // namespace

UtcInstant parse_rfc3339(std::string_view s) {
    // YYYY-MM-DDTHH:MM:SS[.fffffffff]Z
    if (s.size() < 20) throw SchemaError("bad timestamp: " + std::string(s));
    auto expect = [&](std::size_t i, char c) {
        if (s[i] != c) throw SchemaError("bad timestamp: " + std::string(s));
    };
    const std::int64_t year = parse_digits(s, 0, 4);
    expect(4, '-');
    const std::int64_t month = parse_digits(s, 5, 2);
    expect(7, '-');
    const std::int64_t day = parse_digits(s, 8, 2);
    expect(10, 'T');
    const std::int64_t hh = parse_digits(s, 11, 2);
    expect(13, ':');
    const std::int64_t mm = parse_digits(s, 14, 2);
    expect(16, ':');
    const std::int64_t ss = parse_digits(s, 17, 2);

    std::size_t pos = 19;
    std::int64_t frac = 0;
    if (s[pos] == '.') {
        ++pos;
        int digits = 0;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
            if (digits < 9) frac = frac * 10 + (s[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0 || digits > 9) throw SchemaError("bad timestamp fraction: " + std::string(s));
        for (int i = digits; i < 9; ++i) frac *= 10;
    }
    if (pos + 1 != s.size() || s[pos] != 'Z')
        throw SchemaError("bad timestamp (expected trailing Z): " + std::string(s));

    if (month < 1 || month > 12 || hh > 23 || mm > 59 || ss > 59)
        throw SchemaError("timestamp field out of range: " + std::string(s));
    const bool leap = year % 4 == 0 && (year % 100 != 0 || year % 400 == 0);
    static constexpr int days_in_month[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const int month_days = month == 2 && leap ? 29 : days_in_month[month - 1];
    if (day < 1 || day > month_days)
        throw SchemaError("timestamp day out of range: " + std::string(s));

    const std::int64_t days = days_from_civil(year, static_cast<int>(month), static_cast<int>(day));
    return UtcInstant{((days * kSecPerDay + hh * 3600 + mm * 60 + ss) * kNsPerSec) + frac};
}

Rate::Rate(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    if (num_ <= 0 || den_ <= 0) throw Error("rate must be positive");
    const std::int64_t g = std::gcd(num_, den_);
    num_ /= g;
    den_ /= g;
}

Rate Rate::from_period_ns(std::int64_t period_ns) {
    if (period_ns <= 0) throw Error("sample period must be positive");
    return Rate(kNsPerSec, period_ns);
}

std::int64_t Rate::tick_duration_ns() const {
    // 1e9 * den / num, required to be integral.
    const __int128 total = static_cast<__int128>(kNsPerSec) * den_;
    if (total % num_ != 0)
        throw Error("tick duration is not a whole number of nanoseconds");
    const __int128 ticks = total / num_;
    if (ticks > std::numeric_limits<std::int64_t>::max())
        throw Error("tick duration overflows");
    return static_cast<std::int64_t>(ticks);
}

AnchoredBinarySeries::AnchoredBinarySeries(UtcInstant start, Rate rate, std::vector<std::uint8_t> bits)
    : start_(start), rate_(rate), bits_(std::move(bits)) {
    rate_.tick_duration_ns(); // must be representable
    for (std::uint8_t b : bits_)
        if (b > 1) throw Error("binary series values must be 0 or 1");
}

TickEventSeries::TickEventSeries(Rate rate, std::vector<std::int64_t> event_ticks, std::int64_t horizon)
    : rate_(rate), event_ticks_(std::move(event_ticks)), horizon_(horizon) {
    rate_.tick_duration_ns();
    if (horizon_ <= 0) throw Error("horizon must be positive");
    std::int64_t prev = -1;
    for (std::int64_t t : event_ticks_) {
        if (t <= prev) throw Error("event ticks must be strictly increasing and non-negative");
        if (t >= horizon_) throw Error("event tick beyond horizon");
        prev = t;
    }
}

TickEventSeries TickEventSeries::from_dense(Rate rate, const std::vector<std::uint8_t>& dense) {
    std::vector<std::int64_t> ticks;
    for (std::size_t i = 0; i < dense.size(); ++i) {
        if (dense[i] > 1) throw Error("dense series values must be 0 or 1");
        if (dense[i] == 1) ticks.push_back(static_cast<std::int64_t>(i));
    }
    return TickEventSeries(rate, std::move(ticks), static_cast<std::int64_t>(dense.size()));
}

UtcInstant sample_index_to_utc(const AnchoredBinarySeries& series, std::int64_t t) {
    return series.start() + t * series.rate().tick_duration_ns();
}

std::vector<std::uint8_t> densify(const TickEventSeries& f) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(f.horizon()), 0);
    for (std::int64_t t : f.event_ticks()) out[static_cast<std::size_t>(t)] = 1;
    return out;
}

} // namespace ticksync
