#include "fkg/rational.hpp"

#include <charconv>
#include <limits>
#include <numeric>

#include "fkg/error.hpp"

namespace fkg {

namespace {

using i128 = __int128;

Rational from_wide(i128 num, i128 den) {
    require(den != 0, Errc::invalid_argument, "rational with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    i128 a = num < 0 ? -num : num;
    i128 b = den;
    while (b != 0) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    if (a > 1) {
        num /= a;
        den /= a;
    }
    constexpr auto lim = static_cast<i128>(std::numeric_limits<std::int64_t>::max());
    require(num <= lim && -num <= lim && den <= lim, Errc::numeric, "rational overflow");
    return Rational(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

} // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
    require(den != 0, Errc::invalid_argument, "rational with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t g = std::gcd(num, den);
    num_ = g > 1 ? num / g : num;
    den_ = g > 1 ? den / g : den;
}

std::int64_t Rational::floor() const noexcept {
    std::int64_t q = num_ / den_;
    if (num_ % den_ != 0 && num_ < 0) --q;
    return q;
}

std::int64_t Rational::ceil() const noexcept {
    std::int64_t q = num_ / den_;
    if (num_ % den_ != 0 && num_ > 0) ++q;
    return q;
}

Rational Rational::parse(std::string_view text) {
    auto bad = [&]() { fail(Errc::config, "cannot parse rational '" + std::string(text) + "'"); };
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
    if (text.empty()) bad();

    auto parse_int = [&](std::string_view s) {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size()) bad();
        return v;
    };

    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        return Rational(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
    }
    auto dot = text.find('.');
    if (dot == std::string_view::npos) return Rational(parse_int(text));

    bool negative = text.front() == '-';
    std::string_view body = (negative || text.front() == '+') ? text.substr(1) : text;
    dot = body.find('.');
    std::string_view whole = body.substr(0, dot);
    std::string_view frac = body.substr(dot + 1);
    if (frac.size() > 17 || (whole.empty() && frac.empty())) bad();
    for (char c : frac) {
        if (c < '0' || c > '9') bad();
    }
    std::int64_t w = whole.empty() ? 0 : parse_int(whole);
    std::int64_t scale = 1;
    std::int64_t f = 0;
    for (char c : frac) {
        scale *= 10;
        f = f * 10 + (c - '0');
    }
    i128 num = static_cast<i128>(w) * scale + f;
    if (negative) num = -num;
    return from_wide(num, scale);
}

std::string Rational::str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational operator+(const Rational& a, const Rational& b) {
    return from_wide(static_cast<i128>(a.num_) * b.den_ + static_cast<i128>(b.num_) * a.den_,
                     static_cast<i128>(a.den_) * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }

Rational operator*(const Rational& a, const Rational& b) {
    return from_wide(static_cast<i128>(a.num_) * b.num_, static_cast<i128>(a.den_) * b.den_);
}

Rational operator/(const Rational& a, const Rational& b) {
    require(b.num_ != 0, Errc::invalid_argument, "division by zero rational");
    return from_wide(static_cast<i128>(a.num_) * b.den_, static_cast<i128>(a.den_) * b.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) noexcept {
    const i128 lhs = static_cast<i128>(a.num_) * b.den_;
    const i128 rhs = static_cast<i128>(b.num_) * a.den_;
    if (lhs < rhs) return std::strong_ordering::less;
    if (lhs > rhs) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

} // namespace fkg
