#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace ipps {

// Fixed-point time value with three decimal places. All makespans, start and
// end times are exact multiples of one milli-unit, so comparisons across
// modules never depend on floating-point rounding.
class Time {
 public:
  static constexpr std::int64_t kScale = 1000;

  constexpr Time() = default;

  static constexpr Time from_milli(std::int64_t milli) {
    Time t;
    t.milli_ = milli;
    return t;
  }
  static constexpr Time units(std::int64_t whole) { return from_milli(whole * kScale); }

  static Time from_double(double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("time value is not finite");
    return from_milli(static_cast<std::int64_t>(std::llround(value * kScale)));
  }

  static constexpr Time max() { return from_milli(std::numeric_limits<std::int64_t>::max() / 4); }

  constexpr std::int64_t milli() const { return milli_; }
  double to_double() const { return static_cast<double>(milli_) / kScale; }
  constexpr bool is_integral() const { return milli_ % kScale == 0; }

  constexpr Time& operator+=(Time o) {
    milli_ += o.milli_;
    return *this;
  }
  constexpr Time& operator-=(Time o) {
    milli_ -= o.milli_;
    return *this;
  }
  friend constexpr Time operator+(Time a, Time b) { return a += b; }
  friend constexpr Time operator-(Time a, Time b) { return a -= b; }
  friend constexpr Time operator-(Time a) { return from_milli(-a.milli_); }
  friend constexpr auto operator<=>(Time, Time) = default;

  std::string str() const {
    if (is_integral()) return std::to_string(milli_ / kScale);
    std::string s = std::to_string(to_double());
    while (!s.empty() && s.back() == '0') s.pop_back();
    return s;
  }

 private:
  std::int64_t milli_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, Time t) { return os << t.str(); }

}  // namespace ipps
