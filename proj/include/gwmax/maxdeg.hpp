#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "gwmax/offspring.hpp"

namespace gwmax {

/// H(n) = P(M(τ) <= n) together with its complement, each at full relative
/// precision, and the fixed-point residual |Σ_{m<=n} p_m H^m - H|.
struct HSolution {
    double cdf = 1.0;
    double tail = 0.0;
    double residual = 0.0;
};

/// Throws InvalidInput for super-critical laws and laws with p_0 = 0.
void require_maxdeg_law(const OffspringLaw& law);

/// Unique root in [0, 1] of f_n(y) = Σ_{m<=n} p_m y^m - y.
///
/// Solved in the tail variable z = 1 - y: bracket, bisection to width 1e-9,
/// then Newton. The function is concave and increasing in z, so Newton from
/// the left end of the bracket climbs monotonically onto the root.
HSolution solve_H(const OffspringLaw& law, std::uint64_t n);

/// H(n), H̄(n) and the derived masses q_n for n = 0..n_max. Immutable.
class MaxDegTable {
public:
    /// Entries are solved in parallel (OpenMP); each n is independent.
    MaxDegTable(OffspringLaw law, std::uint64_t n_max);
    /// Same table, one entry after another. Reference for the parallel build.
    static MaxDegTable build_serial(OffspringLaw law, std::uint64_t n_max);

    [[nodiscard]] const OffspringLaw& law() const { return law_; }
    [[nodiscard]] std::uint64_t n_max() const { return entries_.size() - 1; }
    [[nodiscard]] const HSolution& entry(std::uint64_t n) const;

    [[nodiscard]] double cdf(std::uint64_t n) const { return entry(n).cdf; }
    [[nodiscard]] double tail(std::uint64_t n) const { return entry(n).tail; }
    [[nodiscard]] double residual(std::uint64_t n) const { return entry(n).residual; }
    /// H̄(n), solving on demand past n_max.
    [[nodiscard]] double tail_at(std::uint64_t n) const;

    /// q_n = H̄(n-1) - H̄(n); q_0 = H(0).
    [[nodiscard]] double q(std::uint64_t n) const;
    /// P_k(M <= n) = H(n)^k.
    [[nodiscard]] double forest_cdf(std::uint64_t k, std::uint64_t n) const;
    /// P_m(M = n) = H(n)^m - H(n-1)^m = q_n Σ_{1<=i<=m} H^{m-i}(n) H^{i-1}(n-1).
    [[nodiscard]] double forest_q(std::uint64_t m, std::uint64_t n) const;

private:
    struct Serial {};
    MaxDegTable(Serial, OffspringLaw law, std::uint64_t n_max);

    OffspringLaw law_;
    std::vector<HSolution> entries_;
};

struct TheoremCRow {
    std::uint64_t n = 0;
    double p_n = 0.0;
    double q_n = 0.0;
    double ratio = 0.0;     ///< p_n / q_n
    double h_pow_n = 0.0;   ///< H(n)^n
    double n_fbar = 0.0;    ///< n F̄(n)
    double residual = 0.0;
    bool below_precision = false;  ///< q_n < 1e-300
};

struct TheoremCReport {
    bool ratio_limit_applies = true;  ///< false for critical laws
    double limit_ratio = 0.0;     ///< 1 - μ_p
    std::vector<TheoremCRow> rows;
};

/// Rows for every n <= n_max with p_n > 0. Rejects bounded laws (the
/// conditioning on large maximal out-degree is a null event there).
TheoremCReport theorem_c_report(const OffspringLaw& law, std::uint64_t n_max);
TheoremCReport theorem_c_report(const MaxDegTable& table);

/// Columns: n,p_n,q_n,ratio,H_n_n,nFbar,residual.
void write_theorem_c_csv(std::ostream& out, const TheoremCReport& report);

}  // namespace gwmax
