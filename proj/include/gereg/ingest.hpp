#pragma once

// Daily rainfall preprocessing: monsoon-month and wet-day filters, regional
// averaging of pixel rows and adjusted-boxplot outlier removal.

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "diagnostics.hpp"
#include "format.hpp"

namespace gereg {

/// Malformed input; line is 1-based, 0 when not tied to a line.
class InputError : public std::runtime_error {
public:
    InputError(std::size_t line, const std::string& what)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class UnknownRegion : public std::invalid_argument {
public:
    explicit UnknownRegion(const std::string& region) : std::invalid_argument("unknown region '" + region + "'") {}
};

struct DailyRecord {
    std::chrono::year_month_day date;
    std::string region;
    double rainfall = 0.0;  // mm
};

struct SeriesRow {
    int year = 0;
    double rainfall = 0.0;
};

using WetDaySeries = std::vector<SeriesRow>;

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline bool parse_fixed_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

// Reads the next line, stripping a UTF-8 byte order mark from the first.
inline bool next_line(std::istream& in, std::string& line, std::size_t& lineno) {
    if (!std::getline(in, line)) return false;
    ++lineno;
    if (lineno == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    return true;
}

inline void expect_header(std::istream& in, std::size_t& lineno, std::string_view expected) {
    std::string line;
    if (!next_line(in, line, lineno)) throw InputError(0, "empty input: expected header '" + std::string(expected) + "'");
    if (trim(line) != expected)
        throw InputError(lineno, "expected header '" + std::string(expected) + "', got '" + std::string(trim(line)) + "'");
}

}  // namespace detail

/// Parses YYYY-MM-DD.
inline bool parse_iso_date(std::string_view s, std::chrono::year_month_day& out) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    int y = 0, m = 0, d = 0;
    if (!detail::parse_fixed_int(s.substr(0, 4), y) || !detail::parse_fixed_int(s.substr(5, 2), m) ||
        !detail::parse_fixed_int(s.substr(8, 2), d))
        return false;
    out = std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                      std::chrono::day{static_cast<unsigned>(d)}};
    return out.ok();
}

inline std::string format_iso_date(const std::chrono::year_month_day& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                  static_cast<unsigned>(d.day()));
    return buf;
}

/// Reads `date,region,rainfall_mm`. Blank lines are skipped.
inline std::vector<DailyRecord> read_daily_csv(std::istream& in) {
    std::size_t lineno = 0;
    detail::expect_header(in, lineno, "date,region,rainfall_mm");
    std::vector<DailyRecord> out;
    std::string line;
    while (detail::next_line(in, line, lineno)) {
        if (detail::trim(line).empty()) continue;
        const auto f = detail::split_commas(line);
        if (f.size() != 3) throw InputError(lineno, "expected 3 fields, found " + std::to_string(f.size()));
        DailyRecord r;
        if (!parse_iso_date(f[0], r.date)) throw InputError(lineno, "invalid date '" + std::string(f[0]) + "'");
        if (f[1].empty()) throw InputError(lineno, "empty region label");
        r.region = std::string(f[1]);
        if (!parse_double(f[2], r.rainfall)) throw InputError(lineno, "invalid rainfall '" + std::string(f[2]) + "'");
        if (r.rainfall < 0.0) throw InputError(lineno, "negative rainfall " + std::string(f[2]));
        out.push_back(std::move(r));
    }
    return out;
}

/// Reads `year,rainfall_mm`; rainfall must be strictly positive.
inline WetDaySeries read_series_csv(std::istream& in) {
    std::size_t lineno = 0;
    detail::expect_header(in, lineno, "year,rainfall_mm");
    WetDaySeries out;
    std::string line;
    while (detail::next_line(in, line, lineno)) {
        if (detail::trim(line).empty()) continue;
        const auto f = detail::split_commas(line);
        if (f.size() != 2) throw InputError(lineno, "expected 2 fields, found " + std::to_string(f.size()));
        long long year = 0;
        SeriesRow r;
        if (!parse_int(f[0], year) || year < -32767 || year > 32767)
            throw InputError(lineno, "invalid year '" + std::string(f[0]) + "'");
        r.year = static_cast<int>(year);
        if (!parse_double(f[1], r.rainfall)) throw InputError(lineno, "invalid rainfall '" + std::string(f[1]) + "'");
        if (!(r.rainfall > 0.0)) throw InputError(lineno, "rainfall must be positive, got " + std::string(f[1]));
        out.push_back(r);
    }
    return out;
}

inline void write_series_csv(std::ostream& os, const WetDaySeries& s) {
    os << "year,rainfall_mm\n";
    for (const auto& r : s) os << r.year << ',' << format_double(r.rainfall) << '\n';
}

/// June through September.
inline std::vector<DailyRecord> filter_jjas(std::span<const DailyRecord> records) {
    std::vector<DailyRecord> out;
    for (const auto& r : records) {
        const unsigned m = static_cast<unsigned>(r.date.month());
        if (m >= 6 && m <= 9) out.push_back(r);
    }
    return out;
}

inline std::vector<DailyRecord> drop_dry_days(std::span<const DailyRecord> records) {
    std::vector<DailyRecord> out;
    for (const auto& r : records) {
        if (r.rainfall < 0.0 || !std::isfinite(r.rainfall))
            throw std::invalid_argument("drop_dry_days: rainfall must be finite and non-negative");
        if (r.rainfall > 0.0) out.push_back(r);
    }
    return out;
}

/// One row per date for the region, averaging same-date rows (pixels).
/// Rows follow the first appearance of each date.
inline WetDaySeries build_series(std::span<const DailyRecord> records, const std::string& region) {
    std::vector<std::chrono::year_month_day> dates;
    std::vector<double> sum;
    std::vector<int> count;
    std::unordered_map<int, std::size_t> index;  // days since epoch -> row
    bool seen = false;
    for (const auto& r : records) {
        if (r.region != region) continue;
        seen = true;
        const int key = std::chrono::sys_days(r.date).time_since_epoch().count();
        auto [it, inserted] = index.try_emplace(key, dates.size());
        if (inserted) {
            dates.push_back(r.date);
            sum.push_back(0.0);
            count.push_back(0);
        }
        sum[it->second] += r.rainfall;
        ++count[it->second];
    }
    if (!seen) throw UnknownRegion(region);
    WetDaySeries out(dates.size());
    for (std::size_t i = 0; i < dates.size(); ++i)
        out[i] = SeriesRow{static_cast<int>(dates[i].year()), sum[i] / count[i]};
    return out;
}

namespace detail {

inline double sample_median(std::span<const double> sorted) {
    const std::size_t n = sorted.size();
    return n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

inline double mc_kernel(double xi, double xj, double m) { return ((xj - m) - (m - xi)) / (xj - xi); }

inline std::vector<double> sorted_copy(std::span<const double> sample) {
    if (sample.size() < 3) throw std::invalid_argument("medcouple: need at least 3 values");
    std::vector<double> x(sample.begin(), sample.end());
    for (double v : x)
        if (!std::isfinite(v)) throw std::invalid_argument("medcouple: values must be finite");
    std::sort(x.begin(), x.end());
    return x;
}

// Order-preserving map between doubles and signed integers.
inline std::int64_t ordered_key(double d) {
    const auto k = std::bit_cast<std::int64_t>(d);
    return k >= 0 ? k : k ^ std::numeric_limits<std::int64_t>::max();
}

inline double from_ordered_key(std::int64_t k) {
    return std::bit_cast<double>(k >= 0 ? k : k ^ std::numeric_limits<std::int64_t>::max());
}

}  // namespace detail

/// Medcouple by enumerating all kernel pairs, O(n^2) time and memory.
/// Pairs with x_i = x_j = median take -1, 0 or +1 by index.
inline double medcouple_naive(std::span<const double> sample) {
    const auto x = detail::sorted_copy(sample);
    const double m = detail::sample_median(x);
    std::vector<double> lower, upper;  // strictly below / above the median
    std::size_t ties = 0;
    for (double v : x) {
        if (v < m)
            lower.push_back(v);
        else if (v > m)
            upper.push_back(v);
        else
            ++ties;
    }
    std::vector<double> h;
    h.reserve((lower.size() + ties) * (upper.size() + ties));
    for (double xi : lower)
        for (double xj : upper) h.push_back(detail::mc_kernel(xi, xj, m));
    for (std::size_t i = 0; i < ties; ++i)
        for (std::size_t j = 0; j < upper.size(); ++j) h.push_back(1.0);
    for (std::size_t i = 0; i < lower.size(); ++i)
        for (std::size_t j = 0; j < ties; ++j) h.push_back(-1.0);
    const auto k = static_cast<long long>(ties);
    for (long long i = 1; i <= k; ++i)
        for (long long j = 1; j <= k; ++j) {
            const long long s = i + j - 1;
            h.push_back(s < k ? -1.0 : (s == k ? 0.0 : 1.0));
        }
    std::sort(h.begin(), h.end());
    return detail::sample_median(h);
}

/// Same statistic in O(n log n) time and O(n) memory: the two middle kernel
/// values are located by bisection over the ordered doubles in [-1, 1],
/// counting kernel values <= t with a two-pointer sweep.
inline double medcouple(std::span<const double> sample) {
    const auto x = detail::sorted_copy(sample);
    const double m = detail::sample_median(x);
    const auto lo_end = static_cast<std::size_t>(std::lower_bound(x.begin(), x.end(), m) - x.begin());
    const auto hi_begin = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), m) - x.begin());
    const std::span<const double> lower(x.data(), lo_end);                 // ascending
    const std::span<const double> upper(x.data() + hi_begin, x.size() - hi_begin);
    const auto p = static_cast<std::uint64_t>(lower.size());
    const auto q = static_cast<std::uint64_t>(upper.size());
    const auto k = static_cast<std::uint64_t>(hi_begin - lo_end);
    const std::uint64_t total = (p + k) * (q + k);

    // h(x_i, x_j) is non-decreasing in both arguments, so for each x_i the
    // qualifying x_j form a prefix that shrinks as x_i grows.
    auto count_le = [&](double t) {
        std::uint64_t c = 0;
        std::size_t j = upper.size();
        for (std::size_t i = 0; i < lower.size(); ++i) {
            while (j > 0 && detail::mc_kernel(lower[i], upper[j - 1], m) > t) --j;
            c += j;
            if (j == 0) break;
        }
        if (t >= -1.0) c += p * k + k * (k - 1) / 2;
        if (t >= 0.0) c += k;
        if (t >= 1.0) c += k * q + k * (k - 1) / 2;
        return c;
    };
    // Smallest kernel value whose rank reaches r (1-based).
    auto select = [&](std::uint64_t r) {
        std::int64_t lo = detail::ordered_key(-1.0), hi = detail::ordered_key(1.0);
        while (lo < hi) {
            const std::int64_t mid = lo + (hi - lo) / 2;
            if (count_le(detail::from_ordered_key(mid)) >= r)
                hi = mid;
            else
                lo = mid + 1;
        }
        return detail::from_ordered_key(lo);
    };
    if (total % 2) return select(total / 2 + 1);
    return 0.5 * (select(total / 2) + select(total / 2 + 1));
}

struct BoxplotFences {
    double q1 = 0.0;
    double q3 = 0.0;
    double medcouple = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool degenerate = false;  // IQR == 0: nothing is removed

    bool inside(double v) const noexcept { return degenerate || (v >= lower && v <= upper); }
};

/// Fences for given quartiles and medcouple; mc = 0 gives the classical rule.
inline BoxplotFences fences_from(double q1, double q3, double mc) {
    BoxplotFences f;
    f.q1 = q1;
    f.q3 = q3;
    f.medcouple = mc;
    const double iqr = q3 - q1;
    f.degenerate = !(iqr > 0.0);
    if (mc >= 0.0) {
        f.lower = q1 - 1.5 * std::exp(-4.0 * mc) * iqr;
        f.upper = q3 + 1.5 * std::exp(3.0 * mc) * iqr;
    } else {
        f.lower = q1 - 1.5 * std::exp(-3.0 * mc) * iqr;
        f.upper = q3 + 1.5 * std::exp(4.0 * mc) * iqr;
    }
    return f;
}

/// Adjusted-boxplot fences with type-7 quartiles.
inline BoxplotFences adjusted_boxplot_fences(std::span<const double> sample) {
    if (sample.size() < 5) throw std::invalid_argument("adjusted_boxplot: need at least 5 values");
    std::vector<double> s(sample.begin(), sample.end());
    std::sort(s.begin(), s.end());
    return fences_from(sorted_quantile(s, 0.25), sorted_quantile(s, 0.75), medcouple(s));
}

struct BoxplotSplit {
    std::vector<double> kept;
    std::vector<double> removed;
    BoxplotFences fences;
    std::vector<std::string> warnings;
};

inline BoxplotSplit adjusted_boxplot_filter(std::span<const double> sample) {
    BoxplotSplit out;
    out.fences = adjusted_boxplot_fences(sample);
    if (out.fences.degenerate) out.warnings.push_back("interquartile range is zero; no outliers removed");
    for (double v : sample) (out.fences.inside(v) ? out.kept : out.removed).push_back(v);
    return out;
}

struct SeriesFilterResult {
    WetDaySeries kept;
    WetDaySeries removed;
    BoxplotFences fences;
    std::vector<std::string> warnings;
};

/// Pooled adjusted-boxplot filtering of a series, preserving row order.
inline SeriesFilterResult filter_outliers(const WetDaySeries& series) {
    std::vector<double> v;
    v.reserve(series.size());
    for (const auto& r : series) v.push_back(r.rainfall);
    SeriesFilterResult out;
    out.fences = adjusted_boxplot_fences(v);
    if (out.fences.degenerate) out.warnings.push_back("interquartile range is zero; no outliers removed");
    for (const auto& r : series) (out.fences.inside(r.rainfall) ? out.kept : out.removed).push_back(r);
    return out;
}

}  // namespace gereg
