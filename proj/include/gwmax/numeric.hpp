#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace gwmax {

// Neumaier's variant of Kahan summation; tolerates terms larger than the
// running sum.
class CompensatedSum {
public:
    CompensatedSum& operator+=(double x) noexcept
    {
        const double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
        return *this;
    }

    CompensatedSum& operator+=(const CompensatedSum& other) noexcept
    {
        *this += other.sum_;
        *this += other.comp_;
        return *this;
    }

    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Shortest round-trip decimal form; stable across runs and platforms.
inline std::string format_double(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

// (1 - z)^m for 0 <= z <= 1, accurate when z is tiny.
inline double pow_one_minus(double z, double m) noexcept
{
    if (m == 0.0) return 1.0;
    if (z >= 1.0) return 0.0;
    return std::exp(m * std::log1p(-z));
}

// 1 - (1 - z)^m, accurate when z is tiny.
inline double one_minus_pow_one_minus(double z, double m) noexcept
{
    if (m == 0.0) return 0.0;
    if (z >= 1.0) return 1.0;
    return -std::expm1(m * std::log1p(-z));
}

}  // namespace gwmax
