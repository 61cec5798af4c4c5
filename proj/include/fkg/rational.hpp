#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace fkg {

/// Exact rational number in lowest terms with a positive denominator.
///
/// Lattice spacings and region corners are kept exact so that deciding
/// whether a point of aZ^2 lies inside a region never depends on rounding.
class Rational {
public:
    constexpr Rational() = default;
    Rational(std::int64_t num, std::int64_t den = 1);

    std::int64_t num() const noexcept { return num_; }
    std::int64_t den() const noexcept { return den_; }
    double value() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

    std::int64_t floor() const noexcept;
    std::int64_t ceil() const noexcept;
    bool is_integer() const noexcept { return den_ == 1; }

    /// Accepts "3", "-1/2", "0.125", "-.25".
    static Rational parse(std::string_view text);
    std::string str() const;

    friend Rational operator+(const Rational& a, const Rational& b);
    friend Rational operator-(const Rational& a, const Rational& b);
    friend Rational operator*(const Rational& a, const Rational& b);
    friend Rational operator/(const Rational& a, const Rational& b);
    Rational operator-() const { return Rational(-num_, den_); }

    friend bool operator==(const Rational& a, const Rational& b) noexcept {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) noexcept;

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

} // namespace fkg
