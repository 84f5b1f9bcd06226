#include "shortlist/rational.hpp"

#include <ostream>
#include <stdexcept>

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace shortlist {

Rational::Rational(BigInt numerator, BigInt denominator)
    : num_(std::move(numerator)), den_(std::move(denominator)) {
    if (den_ == 0) {
        throw std::domain_error("Rational: zero denominator");
    }
    normalize();
}

void Rational::normalize() {
    if (den_.sign() < 0) {
        num_ = -num_;
        den_ = -den_;
    }
    if (num_ == 0) {
        den_ = 1;
        return;
    }
    BigInt g = boost::multiprecision::gcd(num_, den_);
    if (g != 1) {
        num_ /= g;
        den_ /= g;
    }
}

Rational& Rational::operator+=(const Rational& rhs) {
    if (den_ == rhs.den_) {
        num_ += rhs.num_;
    } else {
        num_ = num_ * rhs.den_ + rhs.num_ * den_;
        den_ *= rhs.den_;
    }
    normalize();
    return *this;
}

Rational& Rational::operator-=(const Rational& rhs) {
    if (den_ == rhs.den_) {
        num_ -= rhs.num_;
    } else {
        num_ = num_ * rhs.den_ - rhs.num_ * den_;
        den_ *= rhs.den_;
    }
    normalize();
    return *this;
}

Rational& Rational::operator*=(const Rational& rhs) {
    num_ *= rhs.num_;
    den_ *= rhs.den_;
    normalize();
    return *this;
}

Rational& Rational::operator/=(const Rational& rhs) {
    if (rhs.num_ == 0) {
        throw std::domain_error("Rational: division by zero");
    }
    num_ *= rhs.den_;
    den_ *= rhs.num_;
    normalize();
    return *this;
}

Rational Rational::operator-() const {
    Rational r = *this;
    r.num_ = -r.num_;
    return r;
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    const int c = a.den_ == b.den_ ? a.num_.compare(b.num_) : BigInt(a.num_ * b.den_).compare(b.num_ * a.den_);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
}

Rational Rational::abs() const {
    Rational r = *this;
    if (r.num_.sign() < 0) {
        r.num_ = -r.num_;
    }
    return r;
}

double Rational::to_double() const {
    using boost::multiprecision::cpp_bin_float_100;
    cpp_bin_float_100 q = cpp_bin_float_100(num_) / cpp_bin_float_100(den_);
    return q.convert_to<double>();
}

std::string Rational::to_string() const {
    if (den_ == 1) {
        return num_.str();
    }
    return num_.str() + "/" + den_.str();
}

std::string Rational::to_decimal(int digits) const {
    if (digits < 0) {
        throw std::invalid_argument("Rational::to_decimal: negative digit count");
    }
    BigInt scale = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(digits));
    BigInt magnitude = num_.sign() < 0 ? BigInt(-num_) : num_;
    BigInt scaled = magnitude * scale;
    BigInt quotient = scaled / den_;
    BigInt remainder = scaled % den_;

    // round half to even
    BigInt twice = remainder * 2;
    if (twice > den_ || (twice == den_ && (quotient & 1) != 0)) {
        ++quotient;
    }

    std::string body = quotient.str();
    if (digits > 0) {
        if (body.size() <= static_cast<std::size_t>(digits)) {
            body.insert(0, static_cast<std::size_t>(digits) + 1 - body.size(), '0');
        }
        body.insert(body.size() - static_cast<std::size_t>(digits), ".");
    }
    if (num_.sign() < 0 && quotient != 0) {
        body.insert(0, "-");
    }
    return body;
}

std::ostream& operator<<(std::ostream& os, const Rational& value) {
    return os << value.to_string();
}

} // namespace shortlist
