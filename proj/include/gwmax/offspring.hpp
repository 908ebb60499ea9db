#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace gwmax {

enum class Family { explicit_pmf, geometric, poisson, power_law, custom };
enum class Criticality { subcritical, critical, supercritical };
enum class MeanCheck { require_positive, allow_zero };

std::string to_string(Criticality c);

/// Offspring distribution p on the non-negative integers.
///
/// Infinite-support families are represented by closed-form accessors for the
/// mass function, the tail F̄(n) = Σ_{m>n} p_m and the tail first moment
/// Σ_{m>n} m p_m; nothing is truncated silently. Laws are immutable and cheap
/// to copy (shared state).
class OffspringLaw {
public:
    struct ExplicitParams {
        std::vector<double> pmf;
    };
    struct GeometricParams {
        double a;  // p_k = (1 - a) a^k
    };
    struct PoissonParams {
        double lambda;
    };
    struct PowerLawParams {
        double c;      // p_k = c k^-alpha for k >= 1
        double alpha;  // p_0 = 1 - c zeta(alpha)
    };
    /// User-supplied law. `tail(n)` and `tail_moment(n)` must be exact (or
    /// carry their own certified error) for n >= -1.
    struct CustomParams {
        std::string name;
        std::function<double(std::uint64_t)> pmf;
        std::function<double(std::int64_t)> tail;
        std::function<double(std::int64_t)> tail_moment;
        std::optional<std::uint64_t> support_max;  // nullopt: unbounded
    };
    using Params = std::variant<ExplicitParams, GeometricParams, PoissonParams, PowerLawParams, CustomParams>;

    static OffspringLaw explicit_pmf(std::vector<double> pmf, MeanCheck check = MeanCheck::require_positive);
    static OffspringLaw geometric(double a);
    static OffspringLaw poisson(double lambda);
    /// `require_subcritical` additionally rejects parameters with mean >= 1.
    static OffspringLaw power_law(double c, double alpha, bool require_subcritical = false);
    static OffspringLaw custom(CustomParams params);

    [[nodiscard]] Family family() const;
    [[nodiscard]] const Params& params() const;

    [[nodiscard]] double pmf(std::uint64_t k) const;
    /// Σ_{m>n} p_m; tail(-1) == 1.
    [[nodiscard]] double tail(std::int64_t n) const;
    /// Σ_{m>n} m p_m; tail_moment(-1) == mean().
    [[nodiscard]] double tail_moment(std::int64_t n) const;
    /// Σ_{m<=n} p_m, summed directly (not 1 - tail).
    [[nodiscard]] double cdf(std::int64_t n) const;

    [[nodiscard]] double mean() const;
    [[nodiscard]] double p0() const { return pmf(0); }
    [[nodiscard]] bool unbounded() const;
    /// sup{k : p_k > 0}, or nullopt for unbounded support.
    [[nodiscard]] std::optional<std::uint64_t> support_max() const;
    [[nodiscard]] Criticality classify() const;
    [[nodiscard]] std::string describe() const;

private:
    struct State;
    explicit OffspringLaw(std::shared_ptr<const State> state);
    std::shared_ptr<const State> state_;
};

/// E[(X - ell)_+ 1{X >= k}] for X ~ p, from the closed-form tail moments.
double truncated_excess(const OffspringLaw& law, std::uint64_t ell, std::uint64_t k);

/// Sentinel for an infinite out-degree.
inline constexpr std::uint64_t infinite_degree = ~std::uint64_t{0};

/// Inverse-CDF sampler over a non-negative mass sequence w(0), w(1), ...
/// with total mass `total`. A cumulative table covers the bulk; draws landing
/// beyond it walk the sequence with the exact masses.
class InverseCdf {
public:
    InverseCdf(std::function<double(std::uint64_t)> mass, std::function<double(std::int64_t)> tail_mass, double total,
               std::optional<std::uint64_t> support_max, std::uint64_t table_cap = 1u << 16);

    /// `u` uniform on [0, 1).
    [[nodiscard]] std::uint64_t operator()(double u) const;
    [[nodiscard]] double total() const { return total_; }

private:
    std::function<double(std::uint64_t)> mass_;
    std::function<double(std::int64_t)> tail_mass_;
    double total_;
    std::vector<double> cumulative_;
    std::optional<std::uint64_t> support_max_;
};

/// Size-biased law p̃ on N ∪ {∞}: atom(k) = k p_k, atom(∞) = 1 - μ_p.
class BiasedLaw {
public:
    explicit BiasedLaw(OffspringLaw law);

    [[nodiscard]] double atom(std::uint64_t k) const;
    [[nodiscard]] double atom_infinite() const { return atom_infinite_; }
    [[nodiscard]] const OffspringLaw& base() const { return law_; }
    /// Returns infinite_degree for the atom at ∞.
    [[nodiscard]] std::uint64_t sample(double u) const;

private:
    OffspringLaw law_;
    double atom_infinite_;
    InverseCdf finite_part_;
};

/// Inverse-CDF sampler for the offspring law itself.
InverseCdf make_offspring_sampler(const OffspringLaw& law);

}  // namespace gwmax
