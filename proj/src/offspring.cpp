#include "gwmax/offspring.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <gsl/gsl_cdf.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_gamma.h>
#include <gsl/gsl_sf_zeta.h>

#include "gwmax/error.hpp"
#include "gwmax/numeric.hpp"

namespace gwmax {

namespace {

constexpr double normalization_tolerance = 1e-12;
constexpr double criticality_tolerance = 1e-12;

// GSL aborts through its default handler; statuses are checked instead. Set
// once at load time since the handler is process-global.
[[maybe_unused]] const bool gsl_handler_disabled = [] {
    gsl_set_error_handler_off();
    return true;
}();

// Hurwitz zeta Σ_{j>=0} (j + q)^-s.
double hurwitz_zeta(double s, double q)
{
    gsl_sf_result result;
    const int status = gsl_sf_hzeta_e(s, q, &result);
    if (status != GSL_SUCCESS && status != GSL_EUNDRFLW) {
        throw InvalidInput("hurwitz zeta evaluation failed for s=" + format_double(s) + " q=" + format_double(q));
    }
    return status == GSL_EUNDRFLW ? 0.0 : result.val;
}

}  // namespace

std::string to_string(Criticality c)
{
    switch (c) {
    case Criticality::subcritical: return "sub-critical";
    case Criticality::critical: return "critical";
    case Criticality::supercritical: return "super-critical";
    }
    return "unknown";
}

struct OffspringLaw::State {
    Params params;
    double mean = 0.0;
    std::optional<std::uint64_t> support_max;
    // explicit family: tail_[n] = Σ_{m>n} p_m, moment_[n] = Σ_{m>n} m p_m
    std::vector<double> tail;
    std::vector<double> moment;
    // power-law family
    double power_p0 = 0.0;
};

OffspringLaw::OffspringLaw(std::shared_ptr<const State> state) : state_(std::move(state)) {}

OffspringLaw OffspringLaw::explicit_pmf(std::vector<double> pmf, MeanCheck check)
{
    if (pmf.empty()) throw InvalidInput("explicit pmf must not be empty");
    CompensatedSum total;
    for (double p : pmf) {
        if (!std::isfinite(p) || p < 0.0) throw InvalidInput("explicit pmf entries must be finite and >= 0");
        total += p;
    }
    if (std::fabs(total.value() - 1.0) > normalization_tolerance) {
        throw InvalidInput("explicit pmf is not normalized (sum = " + format_double(total.value()) + ")");
    }
    while (pmf.size() > 1 && pmf.back() == 0.0) pmf.pop_back();

    auto state = std::make_shared<State>();
    const std::size_t size = pmf.size();
    state->tail.assign(size, 0.0);
    state->moment.assign(size, 0.0);
    CompensatedSum tail;
    CompensatedSum moment;
    for (std::size_t m = size; m-- > 1;) {
        tail += pmf[m];
        moment += static_cast<double>(m) * pmf[m];
        state->tail[m - 1] = tail.value();
        state->moment[m - 1] = moment.value();
    }
    state->mean = moment.value();
    if (check == MeanCheck::require_positive && !(state->mean > 0.0)) {
        throw InvalidInput("offspring mean must be > 0 (point mass at 0 is excluded)");
    }
    state->support_max = size - 1;
    state->params = ExplicitParams{std::move(pmf)};
    return OffspringLaw(std::move(state));
}

OffspringLaw OffspringLaw::geometric(double a)
{
    if (!(a > 0.0 && a < 1.0)) throw InvalidInput("geometric parameter a must lie in (0, 1)");
    auto state = std::make_shared<State>();
    state->params = GeometricParams{a};
    state->mean = a / (1.0 - a);
    return OffspringLaw(std::move(state));
}

OffspringLaw OffspringLaw::poisson(double lambda)
{
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidInput("poisson parameter lambda must be > 0");
    auto state = std::make_shared<State>();
    state->params = PoissonParams{lambda};
    state->mean = lambda;
    return OffspringLaw(std::move(state));
}

OffspringLaw OffspringLaw::power_law(double c, double alpha, bool require_subcritical)
{
    if (!(alpha > 2.0) || !std::isfinite(alpha)) {
        throw InvalidInput("power-law exponent alpha must be > 2 (otherwise the mean is infinite)");
    }
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidInput("power-law constant c must be > 0");
    auto state = std::make_shared<State>();
    state->power_p0 = 1.0 - c * hurwitz_zeta(alpha, 1.0);
    if (state->power_p0 < 0.0) throw InvalidInput("power-law parameters give p_0 < 0");
    state->mean = c * hurwitz_zeta(alpha - 1.0, 1.0);
    if (require_subcritical && !(state->mean < 1.0)) {
        throw InvalidInput("power-law parameters give mean >= 1 but a sub-critical law was requested");
    }
    state->params = PowerLawParams{c, alpha};
    return OffspringLaw(std::move(state));
}

OffspringLaw OffspringLaw::custom(CustomParams params)
{
    if (!params.pmf || !params.tail || !params.tail_moment) {
        throw InvalidInput("custom law needs pmf, tail and tail_moment accessors");
    }
    for (std::int64_t n : {0, 1, 10, 100}) {
        CompensatedSum head;
        for (std::int64_t m = 0; m <= n; ++m) head += params.pmf(static_cast<std::uint64_t>(m));
        if (std::fabs(head.value() + params.tail(n) - 1.0) > normalization_tolerance) {
            throw InvalidInput("custom law is not normalized at n=" + std::to_string(n));
        }
    }
    auto state = std::make_shared<State>();
    state->mean = params.tail_moment(-1);
    if (!(state->mean > 0.0) || !std::isfinite(state->mean)) {
        throw InvalidInput("custom law must have finite mean > 0");
    }
    state->support_max = params.support_max;
    state->params = std::move(params);
    return OffspringLaw(std::move(state));
}

Family OffspringLaw::family() const
{
    return std::visit(
        [](const auto& p) -> Family {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ExplicitParams>) return Family::explicit_pmf;
            else if constexpr (std::is_same_v<T, GeometricParams>) return Family::geometric;
            else if constexpr (std::is_same_v<T, PoissonParams>) return Family::poisson;
            else if constexpr (std::is_same_v<T, PowerLawParams>) return Family::power_law;
            else return Family::custom;
        },
        state_->params);
}

const OffspringLaw::Params& OffspringLaw::params() const { return state_->params; }

double OffspringLaw::pmf(std::uint64_t k) const
{
    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ExplicitParams>) {
                return k < p.pmf.size() ? p.pmf[k] : 0.0;
            } else if constexpr (std::is_same_v<T, GeometricParams>) {
                return (1.0 - p.a) * std::pow(p.a, static_cast<double>(k));
            } else if constexpr (std::is_same_v<T, PoissonParams>) {
                const double kd = static_cast<double>(k);
                if (k > 0xffffffffULL) return 0.0;
                // gsl_sf_lnfact is reentrant, unlike lgamma's signgam
                return std::exp(kd * std::log(p.lambda) - p.lambda - gsl_sf_lnfact(static_cast<unsigned>(k)));
            } else if constexpr (std::is_same_v<T, PowerLawParams>) {
                if (k == 0) return state_->power_p0;
                return p.c * std::pow(static_cast<double>(k), -p.alpha);
            } else {
                return p.pmf(k);
            }
        },
        state_->params);
}

double OffspringLaw::tail(std::int64_t n) const
{
    if (n < 0) return 1.0;
    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ExplicitParams>) {
                const auto idx = static_cast<std::size_t>(n);
                return idx < state_->tail.size() ? state_->tail[idx] : 0.0;
            } else if constexpr (std::is_same_v<T, GeometricParams>) {
                return std::pow(p.a, static_cast<double>(n) + 1.0);
            } else if constexpr (std::is_same_v<T, PoissonParams>) {
                if (n >= std::int64_t{1} << 31) return 0.0;
                return gsl_cdf_poisson_Q(static_cast<unsigned>(n), p.lambda);
            } else if constexpr (std::is_same_v<T, PowerLawParams>) {
                return p.c * hurwitz_zeta(p.alpha, static_cast<double>(n) + 1.0);
            } else {
                return p.tail(n);
            }
        },
        state_->params);
}

double OffspringLaw::tail_moment(std::int64_t n) const
{
    if (n < 0) return state_->mean;
    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ExplicitParams>) {
                const auto idx = static_cast<std::size_t>(n);
                return idx < state_->moment.size() ? state_->moment[idx] : 0.0;
            } else if constexpr (std::is_same_v<T, GeometricParams>) {
                // memoryless: E[X | X > n] = n + 1 + a / (1 - a)
                const double nd = static_cast<double>(n);
                return std::pow(p.a, nd + 1.0) * (nd + 1.0 + p.a / (1.0 - p.a));
            } else if constexpr (std::is_same_v<T, PoissonParams>) {
                // m p_m = lambda p_{m-1}
                return p.lambda * tail(n - 1);
            } else if constexpr (std::is_same_v<T, PowerLawParams>) {
                return p.c * hurwitz_zeta(p.alpha - 1.0, static_cast<double>(n) + 1.0);
            } else {
                return p.tail_moment(n);
            }
        },
        state_->params);
}

double OffspringLaw::cdf(std::int64_t n) const
{
    if (n < 0) return 0.0;
    if (const auto* e = std::get_if<ExplicitParams>(&state_->params)) {
        CompensatedSum s;
        const auto last = std::min<std::uint64_t>(static_cast<std::uint64_t>(n), e->pmf.size() - 1);
        for (std::uint64_t m = 0; m <= last; ++m) s += e->pmf[m];
        return s.value();
    }
    CompensatedSum s;
    for (std::int64_t m = 0; m <= n; ++m) s += pmf(static_cast<std::uint64_t>(m));
    return s.value();
}

double OffspringLaw::mean() const { return state_->mean; }

bool OffspringLaw::unbounded() const { return !support_max().has_value(); }

std::optional<std::uint64_t> OffspringLaw::support_max() const
{
    switch (family()) {
    case Family::geometric:
    case Family::poisson:
    case Family::power_law: return std::nullopt;
    default: return state_->support_max;
    }
}

Criticality OffspringLaw::classify() const
{
    const double mu = state_->mean;
    if (std::fabs(mu - 1.0) <= criticality_tolerance) return Criticality::critical;
    return mu < 1.0 ? Criticality::subcritical : Criticality::supercritical;
}

std::string OffspringLaw::describe() const
{
    std::ostringstream os;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ExplicitParams>) {
                os << "explicit[";
                for (std::size_t i = 0; i < p.pmf.size(); ++i) os << (i ? "," : "") << format_double(p.pmf[i]);
                os << "]";
            } else if constexpr (std::is_same_v<T, GeometricParams>) {
                os << "geometric(a=" << format_double(p.a) << ")";
            } else if constexpr (std::is_same_v<T, PoissonParams>) {
                os << "poisson(lambda=" << format_double(p.lambda) << ")";
            } else if constexpr (std::is_same_v<T, PowerLawParams>) {
                os << "power-law(c=" << format_double(p.c) << ",alpha=" << format_double(p.alpha) << ")";
            } else {
                os << "custom(" << p.name << ")";
            }
        },
        state_->params);
    return os.str();
}

double truncated_excess(const OffspringLaw& law, std::uint64_t ell, std::uint64_t k)
{
    // Σ_{m >= j0} (m - ell) p_m with j0 = max(k, ell + 1)
    const auto j0 = static_cast<std::int64_t>(std::max(k, ell + 1));
    const double value = law.tail_moment(j0 - 1) - static_cast<double>(ell) * law.tail(j0 - 1);
    return std::max(value, 0.0);
}

InverseCdf::InverseCdf(std::function<double(std::uint64_t)> mass, std::function<double(std::int64_t)> tail_mass,
                       double total, std::optional<std::uint64_t> support_max, std::uint64_t table_cap)
    : mass_(std::move(mass)), tail_mass_(std::move(tail_mass)), total_(total), support_max_(support_max)
{
    CompensatedSum acc;
    for (std::uint64_t k = 0;; ++k) {
        acc += mass_(k);
        cumulative_.push_back(acc.value());
        if (support_max_ && k >= *support_max_) break;
        if (cumulative_.size() >= table_cap) break;
        if (tail_mass_(static_cast<std::int64_t>(k)) <= 1e-17 * total_) break;
    }
}

std::uint64_t InverseCdf::operator()(double u) const
{
    const double target = u * total_;
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    if (it != cumulative_.end()) return static_cast<std::uint64_t>(it - cumulative_.begin());

    std::uint64_t k = cumulative_.size() - 1;
    if (support_max_ && k >= *support_max_) return *support_max_;
    CompensatedSum acc;
    acc += cumulative_.back();
    for (++k;; ++k) {
        acc += mass_(k);
        if (acc.value() > target) return k;
        if (support_max_ && k >= *support_max_) return *support_max_;
        const double rest = tail_mass_(static_cast<std::int64_t>(k));
        if (rest <= 1e-15 * total_) return k;
    }
}

BiasedLaw::BiasedLaw(OffspringLaw law)
    : law_(law),
      atom_infinite_(0.0),
      finite_part_([law](std::uint64_t k) { return static_cast<double>(k) * law.pmf(k); },
                   [law](std::int64_t n) { return law.tail_moment(n); }, law.mean(), law.support_max())
{
    switch (law_.classify()) {
    case Criticality::supercritical:
        throw InvalidInput("biased law requires a critical or sub-critical offspring law (1 - mean < 0)");
    case Criticality::critical: atom_infinite_ = 0.0; break;
    case Criticality::subcritical: atom_infinite_ = 1.0 - law_.mean(); break;
    }
}

double BiasedLaw::atom(std::uint64_t k) const { return static_cast<double>(k) * law_.pmf(k); }

std::uint64_t BiasedLaw::sample(double u) const
{
    if (u < atom_infinite_) return infinite_degree;
    const double rescaled = std::min((u - atom_infinite_) / (1.0 - atom_infinite_), std::nextafter(1.0, 0.0));
    return finite_part_(rescaled);
}

InverseCdf make_offspring_sampler(const OffspringLaw& law)
{
    return InverseCdf([law](std::uint64_t k) { return law.pmf(k); }, [law](std::int64_t n) { return law.tail(n); },
                      1.0, law.support_max());
}

}  // namespace gwmax
