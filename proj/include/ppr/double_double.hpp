#pragma once

// Double-double arithmetic: a value is the unevaluated sum hi + lo of two
// doubles with |lo| <= ulp(hi)/2, giving roughly 32 significant digits.
// All operations are built from error-free transformations and do not touch
// the floating-point environment, so they are safe to use from any thread.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ppr {

class DD {
 public:
  constexpr DD() = default;
  constexpr DD(double x) : hi_(x), lo_(0.0) {}  // NOLINT(google-explicit-constructor)
  constexpr DD(double hi, double lo) : hi_(hi), lo_(lo) {}

  constexpr double hi() const { return hi_; }
  constexpr double lo() const { return lo_; }

  // Round to nearest double.
  explicit operator double() const { return hi_ + lo_; }
  double to_double() const { return hi_ + lo_; }

  static DD from_string(std::string_view text);

  friend DD operator+(DD a, DD b);
  friend DD operator-(DD a, DD b);
  friend DD operator*(DD a, DD b);
  friend DD operator/(DD a, DD b);
  friend DD operator*(DD a, double b);
  friend DD operator+(DD a, double b);

  DD operator-() const { return {-hi_, -lo_}; }
  DD& operator+=(DD b) { return *this = *this + b; }
  DD& operator-=(DD b) { return *this = *this - b; }
  DD& operator*=(DD b) { return *this = *this * b; }
  DD& operator/=(DD b) { return *this = *this / b; }

  friend bool operator==(DD a, DD b) { return a.hi_ == b.hi_ && a.lo_ == b.lo_; }
  friend bool operator<(DD a, DD b) { return a.hi_ < b.hi_ || (a.hi_ == b.hi_ && a.lo_ < b.lo_); }
  friend bool operator>(DD a, DD b) { return b < a; }

 private:
  double hi_ = 0.0;
  double lo_ = 0.0;
};

namespace dd_detail {

inline DD quick_two_sum(double a, double b) {
  double s = a + b;
  double e = b - (s - a);
  return {s, e};
}

inline DD two_sum(double a, double b) {
  double s = a + b;
  double bb = s - a;
  double e = (a - (s - bb)) + (b - bb);
  return {s, e};
}

inline DD two_prod(double a, double b) {
  double p = a * b;
  double e = std::fma(a, b, -p);
  return {p, e};
}

}  // namespace dd_detail

inline DD operator+(DD a, DD b) {
  using namespace dd_detail;
  DD s = two_sum(a.hi_, b.hi_);
  DD t = two_sum(a.lo_, b.lo_);
  double lo = s.lo() + t.hi();
  DD r = quick_two_sum(s.hi(), lo);
  lo = r.lo() + t.lo();
  return quick_two_sum(r.hi(), lo);
}

inline DD operator+(DD a, double b) {
  using namespace dd_detail;
  DD s = two_sum(a.hi_, b);
  return quick_two_sum(s.hi(), s.lo() + a.lo_);
}

inline DD operator-(DD a, DD b) { return a + (-b); }

inline DD operator*(DD a, DD b) {
  using namespace dd_detail;
  DD p = two_prod(a.hi_, b.hi_);
  double lo = p.lo() + (a.hi_ * b.lo_ + a.lo_ * b.hi_);
  return quick_two_sum(p.hi(), lo);
}

inline DD operator*(DD a, double b) {
  using namespace dd_detail;
  DD p = two_prod(a.hi_, b);
  return quick_two_sum(p.hi(), p.lo() + a.lo_ * b);
}

inline DD operator/(DD a, DD b) {
  using namespace dd_detail;
  double q1 = a.hi_ / b.hi_;
  DD r = a - b * q1;
  double q2 = r.hi_ / b.hi_;
  r = r - b * q2;
  double q3 = r.hi_ / b.hi_;
  DD q = quick_two_sum(q1, q2);
  return q + q3;
}

inline DD operator*(double a, DD b) { return b * a; }
inline DD operator+(double a, DD b) { return b + a; }
inline DD operator-(DD a, double b) { return a + (-b); }
inline DD operator-(double a, DD b) { return (-b) + a; }
inline DD operator/(DD a, double b) { return a / DD(b); }

inline DD abs(DD a) { return a.hi() < 0.0 ? -a : a; }

inline DD sqrt(DD a) {
  if (a.hi() <= 0.0) {
    if (a.hi() == 0.0) return DD(0.0);
    throw std::domain_error("sqrt of negative double-double");
  }
  // One Newton correction of the double estimate (Karp's trick).
  double x = 1.0 / std::sqrt(a.hi());
  double ax = a.hi() * x;
  DD diff = a - dd_detail::two_prod(ax, ax);
  return DD(ax) + DD(diff.hi() * (x * 0.5));
}

inline bool isfinite(DD a) { return std::isfinite(a.hi()) && std::isfinite(a.lo()); }

// Parses decimal text such as "-0.38947496264484728640807860" or "1.5e-3"
// with full double-double accuracy.
inline DD DD::from_string(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
  bool negative = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
    negative = text[i] == '-';
    ++i;
  }
  DD mantissa(0.0);
  int exponent = 0;
  bool seen_digit = false;
  bool after_point = false;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (c >= '0' && c <= '9') {
      mantissa = mantissa * 10.0 + static_cast<double>(c - '0');
      if (after_point) --exponent;
      seen_digit = true;
    } else if (c == '.' && !after_point) {
      after_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) throw std::invalid_argument("not a number: " + std::string(text));
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    std::size_t used = 0;
    exponent += std::stoi(std::string(text.substr(i)), &used);
    i += used;
  }
  while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
  if (i != text.size()) throw std::invalid_argument("trailing characters in number: " + std::string(text));

  DD scale(1.0);
  DD ten(10.0);
  for (int e = std::abs(exponent); e > 0; --e) scale *= ten;
  DD value = exponent < 0 ? mantissa / scale : mantissa * scale;
  return negative ? -value : value;
}

// Scalar helpers that dispatch on double and DD alike.
template <class T>
inline T from_double(double x) {
  return T(x);
}

inline double to_double(double x) { return x; }
inline double to_double(DD x) { return x.to_double(); }

}  // namespace ppr
