#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qdw {

/// Exact rational literal such as "1/2000", "1", or "0.005".  Table keys and
/// file labels keep the exact form; conversion to double happens only at the
/// computation boundary.
struct Rational {
    long long num = 1;
    long long den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }

    std::string str() const {
        if (den == 1) return std::to_string(num);
        return std::to_string(num) + "/" + std::to_string(den);
    }

    static Rational parse(std::string_view text) {
        if (text.empty()) throw std::invalid_argument("rational: empty literal");
        const auto parse_int = [](std::string_view s) -> long long {
            if (s.empty()) throw std::invalid_argument("rational: malformed literal");
            std::size_t pos = 0;
            long long v = 0;
            bool neg = false;
            if (s[pos] == '+' || s[pos] == '-') neg = s[pos++] == '-';
            if (pos == s.size()) throw std::invalid_argument("rational: malformed literal");
            for (; pos < s.size(); ++pos) {
                if (s[pos] < '0' || s[pos] > '9')
                    throw std::invalid_argument("rational: unexpected character in '" +
                                                std::string(s) + "'");
                if (v > (INT64_MAX - 9) / 10) throw std::invalid_argument("rational: overflow");
                v = v * 10 + (s[pos] - '0');
            }
            return neg ? -v : v;
        };
        Rational r;
        if (const auto slash = text.find('/'); slash != std::string_view::npos) {
            r.num = parse_int(text.substr(0, slash));
            r.den = parse_int(text.substr(slash + 1));
            if (r.den == 0) throw std::invalid_argument("rational: zero denominator");
        } else if (const auto dot = text.find('.'); dot != std::string_view::npos) {
            const std::string_view frac = text.substr(dot + 1);
            if (frac.size() > 15) throw std::invalid_argument("rational: too many decimal digits");
            const std::string whole = std::string(text.substr(0, dot)) + std::string(frac);
            r.num = parse_int(whole);
            r.den = 1;
            for (std::size_t i = 0; i < frac.size(); ++i) r.den *= 10;
        } else {
            r.num = parse_int(text);
            r.den = 1;
        }
        if (r.den < 0) {
            r.den = -r.den;
            r.num = -r.num;
        }
        const long long g = std::gcd(r.num < 0 ? -r.num : r.num, r.den);
        if (g > 1) {
            r.num /= g;
            r.den /= g;
        }
        return r;
    }
};

}  // namespace qdw
