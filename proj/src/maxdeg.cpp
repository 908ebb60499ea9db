#include "gwmax/maxdeg.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <ostream>
#include <span>
#include <stdexcept>

#include "gwmax/error.hpp"
#include "gwmax/numeric.hpp"

namespace gwmax {

namespace {

constexpr double bisection_width = 1e-9;
constexpr int newton_iterations = 100;
constexpr double precision_floor = 1e-300;

// r_m(z) = (1 - z)^m - 1 + m z >= 0. For small m z the closed form cancels
// almost completely, so the alternating binomial series is summed instead.
double binomial_remainder(std::size_t m, double z)
{
    const double md = static_cast<double>(m);
    if (md * z >= 0.1) return std::expm1(md * std::log1p(-z)) + md * z;
    double term = md * (md - 1.0) / 2.0 * z * z;
    CompensatedSum s;
    for (std::size_t j = 2; j <= m && term != 0.0; ++j) {
        s += (j % 2 == 0) ? term : -term;
        if (term < 1e-18 * std::fabs(s.value())) break;
        term *= (md - static_cast<double>(j)) / static_cast<double>(j + 1) * z;
    }
    return s.value();
}

// g(z) = f_n(1 - z) = z (1 - μ_n) - F̄(n) + Σ_{2<=m<=n} p_m r_m(z), with
// 1 - μ_n = 1 - Σ_{m<=n} m p_m supplied separately. Apart from -F̄(n) every
// term is non-negative, so g keeps its relative accuracy near a tiny root
// even for critical laws, where 1 - μ_n is itself tiny.
struct TailEquation {
    std::span<const double> pmf;  // p_0..p_n
    double fbar;
    double gap;  // 1 - μ_n

    [[nodiscard]] double value(double z) const
    {
        CompensatedSum s;
        s += z * gap;
        s += -fbar;
        for (std::size_t m = 2; m < pmf.size(); ++m) {
            if (pmf[m] == 0.0) continue;
            s += pmf[m] * (z >= 1.0 ? static_cast<double>(m) - 1.0 : binomial_remainder(m, z));
        }
        return s.value();
    }

    [[nodiscard]] double slope(double z) const
    {
        CompensatedSum s;
        s += gap;
        const double log_y = std::log1p(-z);
        for (std::size_t m = 2; m < pmf.size(); ++m) {
            if (pmf[m] == 0.0) continue;
            const double md = static_cast<double>(m);
            s += md * pmf[m] * (z >= 1.0 ? 1.0 : -std::expm1((md - 1.0) * log_y));
        }
        return s.value();
    }
};

HSolution solve_with_pmf(std::span<const double> pmf, double fbar, double law_mean, double tail_moment)
{
    const std::size_t n = pmf.size() - 1;
    if (n == 0) return HSolution{pmf[0], fbar, 0.0};
    if (fbar <= 0.0) {
        // all offspring counts are <= n, so every tree has M <= n
        return HSolution{1.0, 0.0, 0.0};
    }
    // 1 - μ_n = (1 - μ) + Σ_{m>n} m p_m; for critical laws the first term
    // vanishes and the difference 1 - Σ_{m<=n} m p_m would cancel completely
    const double gap = (1.0 - law_mean) + tail_moment;
    const TailEquation g{pmf, fbar, gap};

    // z - F̄ - z μ_n <= g(z) <= z - F̄
    double lo = std::min(fbar, 1.0);
    double hi = gap > 0.0 ? std::min(1.0, fbar / gap) : 1.0;
    if (g.value(hi) < 0.0) hi = 1.0;

    // the root can sit many decades below 1, so bisect on a log scale
    while (hi - lo > bisection_width * hi) {
        const double mid = hi > 4.0 * lo ? std::sqrt(lo) * std::sqrt(hi) : 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi)) break;
        if (g.value(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    double z = lo;
    for (int it = 0; it < newton_iterations; ++it) {
        const double gz = g.value(z);
        const double dg = g.slope(z);
        if (gz == 0.0 || !(dg > 0.0)) break;
        const double next = std::clamp(z - gz / dg, lo, hi);
        if (next == z || std::fabs(next - z) <= 1e-17 * std::fabs(z)) {
            z = next;
            break;
        }
        z = next;
    }
    return HSolution{1.0 - z, z, std::fabs(g.value(z))};
}

std::vector<double> pmf_prefix(const OffspringLaw& law, std::uint64_t n_max)
{
    std::vector<double> pmf(n_max + 1);
    for (std::uint64_t m = 0; m <= n_max; ++m) pmf[m] = law.pmf(m);
    return pmf;
}

}  // namespace

void require_maxdeg_law(const OffspringLaw& law)
{
    if (law.classify() == Criticality::supercritical) {
        throw InvalidInput("super-critical offspring law: the maximal out-degree equation has several roots in [0,1]; "
                           "only critical and sub-critical laws are supported");
    }
    if (!(law.p0() > 0.0)) throw InvalidInput("offspring law needs p_0 > 0 for the maximal out-degree law");
}

HSolution solve_H(const OffspringLaw& law, std::uint64_t n)
{
    require_maxdeg_law(law);
    const std::vector<double> pmf = pmf_prefix(law, n);
    const auto i = static_cast<std::int64_t>(n);
    return solve_with_pmf(pmf, law.tail(i), law.mean(), law.tail_moment(i));
}

MaxDegTable::MaxDegTable(OffspringLaw law, std::uint64_t n_max) : law_(std::move(law))
{
    require_maxdeg_law(law_);
    const std::vector<double> pmf = pmf_prefix(law_, n_max);
    std::vector<double> fbar(n_max + 1), moment(n_max + 1);
    for (std::uint64_t n = 0; n <= n_max; ++n) {
        fbar[n] = law_.tail(static_cast<std::int64_t>(n));
        moment[n] = law_.tail_moment(static_cast<std::int64_t>(n));
    }
    const double mean = law_.mean();
    entries_.resize(n_max + 1);
    const auto count = static_cast<std::int64_t>(n_max + 1);
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t n = 0; n < count; ++n) {
        try {
            entries_[static_cast<std::size_t>(n)] =
                solve_with_pmf(std::span<const double>(pmf).first(static_cast<std::size_t>(n) + 1),
                               fbar[static_cast<std::size_t>(n)], mean, moment[static_cast<std::size_t>(n)]);
        } catch (...) {
#pragma omp critical(gwmax_table_failure)
            failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

MaxDegTable::MaxDegTable(Serial, OffspringLaw law, std::uint64_t n_max) : law_(std::move(law))
{
    require_maxdeg_law(law_);
    const std::vector<double> pmf = pmf_prefix(law_, n_max);
    entries_.reserve(n_max + 1);
    for (std::uint64_t n = 0; n <= n_max; ++n) {
        const auto i = static_cast<std::int64_t>(n);
        entries_.push_back(
            solve_with_pmf(std::span<const double>(pmf).first(n + 1), law_.tail(i), law_.mean(), law_.tail_moment(i)));
    }
}

MaxDegTable MaxDegTable::build_serial(OffspringLaw law, std::uint64_t n_max)
{
    return MaxDegTable(Serial{}, std::move(law), n_max);
}

const HSolution& MaxDegTable::entry(std::uint64_t n) const
{
    if (n >= entries_.size()) {
        throw std::out_of_range("maximal out-degree table holds n <= " + std::to_string(n_max()) + ", asked for " +
                                std::to_string(n));
    }
    return entries_[n];
}

double MaxDegTable::tail_at(std::uint64_t n) const
{
    if (n < entries_.size()) return entries_[n].tail;
    return solve_H(law_, n).tail;
}

double MaxDegTable::q(std::uint64_t n) const
{
    if (n == 0) return cdf(0);
    return std::max(tail(n - 1) - tail(n), 0.0);
}

double MaxDegTable::forest_cdf(std::uint64_t k, std::uint64_t n) const
{
    if (k == 0) return 1.0;
    return pow_one_minus(tail(n), static_cast<double>(k));
}

double MaxDegTable::forest_q(std::uint64_t m, std::uint64_t n) const
{
    if (m == 0) return 0.0;
    if (n == 0) return forest_cdf(m, 0);
    // H(n)^m - H(n-1)^m, with H(n-1)/H(n) = 1 - q_n/H(n) kept in log1p form
    const double h = cdf(n);
    const double ratio_log = std::log1p(-q(n) / h);
    const double mm = static_cast<double>(m);
    return -std::exp(mm * std::log1p(-tail(n))) * std::expm1(mm * ratio_log);
}

TheoremCReport theorem_c_report(const MaxDegTable& table)
{
    const OffspringLaw& law = table.law();
    if (!law.unbounded()) {
        throw InvalidInput("bounded offspring law: conditioning on large maximal out-degree is a null event "
                           "(p_n = 0 for all large n)");
    }
    TheoremCReport report;
    report.ratio_limit_applies = law.classify() == Criticality::subcritical;
    report.limit_ratio = 1.0 - law.mean();
    for (std::uint64_t n = 0; n <= table.n_max(); ++n) {
        const double p_n = law.pmf(n);
        if (!(p_n > 0.0)) continue;
        TheoremCRow row;
        row.n = n;
        row.p_n = p_n;
        row.q_n = table.q(n);
        row.below_precision = row.q_n < precision_floor;
        row.ratio = row.below_precision ? 0.0 : p_n / row.q_n;
        row.h_pow_n = table.forest_cdf(n, n);
        row.n_fbar = static_cast<double>(n) * law.tail(static_cast<std::int64_t>(n));
        row.residual = table.residual(n);
        report.rows.push_back(row);
    }
    return report;
}

TheoremCReport theorem_c_report(const OffspringLaw& law, std::uint64_t n_max)
{
    if (!law.unbounded()) {
        throw InvalidInput("bounded offspring law: conditioning on large maximal out-degree is a null event "
                           "(p_n = 0 for all large n)");
    }
    return theorem_c_report(MaxDegTable(law, n_max));
}

void write_theorem_c_csv(std::ostream& out, const TheoremCReport& report)
{
    out << "n,p_n,q_n,ratio,H_n_n,nFbar,residual\n";
    for (const auto& r : report.rows) {
        out << r.n << ',' << format_double(r.p_n) << ',';
        if (r.below_precision) {
            out << "below_precision,below_precision,";
        } else {
            out << format_double(r.q_n) << ',' << format_double(r.ratio) << ',';
        }
        out << format_double(r.h_pow_n) << ',' << format_double(r.n_fbar) << ',' << format_double(r.residual)
            << '\n';
    }
}

}  // namespace gwmax
