#include <doctest.h>

#include <cmath>
#include <map>

#include "gwmax/error.hpp"
#include "gwmax/io.hpp"
#include "gwmax/numeric.hpp"
#include "gwmax/offspring.hpp"
#include "gwmax/rng.hpp"

using namespace gwmax;

namespace {

const OffspringLaw geo = OffspringLaw::geometric(1.0 / 3.0);
const OffspringLaw poi = OffspringLaw::poisson(1.0);
const OffspringLaw pow4 = OffspringLaw::power_law(0.5, 4.0);
const OffspringLaw binary = OffspringLaw::explicit_pmf({0.5, 0.0, 0.5});

double direct_tail(const OffspringLaw& law, std::uint64_t n, std::uint64_t upto)
{
    CompensatedSum s;
    for (std::uint64_t m = upto; m > n; --m) s += law.pmf(m);
    return s.value();
}

double direct_tail_moment(const OffspringLaw& law, std::uint64_t n, std::uint64_t upto)
{
    CompensatedSum s;
    for (std::uint64_t m = upto; m > n; --m) s += static_cast<double>(m) * law.pmf(m);
    return s.value();
}

}  // namespace

TEST_CASE("named laws: means and classification")
{
    CHECK(binary.mean() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_FALSE(binary.unbounded());
    CHECK(binary.classify() == Criticality::critical);

    CHECK(geo.mean() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(geo.classify() == Criticality::subcritical);
    CHECK(geo.unbounded());

    CHECK(poi.mean() == 1.0);
    CHECK(poi.classify() == Criticality::critical);
    CHECK(poi.unbounded());

    CHECK(OffspringLaw::explicit_pmf({0.2, 0.0, 0.8}).classify() == Criticality::supercritical);
    CHECK(pow4.classify() == Criticality::subcritical);
}

TEST_CASE("geometric pmf and closed-form tails")
{
    CHECK(geo.pmf(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(geo.pmf(3) == doctest::Approx(2.0 / 81.0).epsilon(1e-14));
    CHECK(geo.tail(5) == doctest::Approx(std::pow(1.0 / 3.0, 6)).epsilon(1e-14));
    CHECK(geo.tail(5) == doctest::Approx(1.3717e-3).epsilon(1e-4));
    CHECK(geo.tail(-1) == 1.0);
    CHECK(geo.tail_moment(-1) == doctest::Approx(geo.mean()).epsilon(1e-15));
    for (std::uint64_t n : {0, 1, 4, 10, 25}) {
        CHECK(geo.tail(static_cast<std::int64_t>(n)) == doctest::Approx(direct_tail(geo, n, 400)).epsilon(1e-12));
        CHECK(geo.tail_moment(static_cast<std::int64_t>(n)) ==
              doctest::Approx(direct_tail_moment(geo, n, 400)).epsilon(1e-12));
    }
}

TEST_CASE("poisson and power-law tails against direct sums")
{
    CHECK(poi.tail(0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
    CHECK(poi.pmf(4) == doctest::Approx(std::exp(-1.0) / 24.0).epsilon(1e-13));
    for (std::uint64_t n : {0, 2, 5, 12}) {
        CHECK(poi.tail(static_cast<std::int64_t>(n)) == doctest::Approx(direct_tail(poi, n, 200)).epsilon(1e-12));
        CHECK(poi.tail_moment(static_cast<std::int64_t>(n)) ==
              doctest::Approx(direct_tail_moment(poi, n, 200)).epsilon(1e-12));
    }
    // power law: compare the head of the tail, the remainder beyond 10^5 is below 1e-15
    for (std::uint64_t n : {0, 3, 20}) {
        const double head = direct_tail(pow4, n, 100000);
        CHECK(pow4.tail(static_cast<std::int64_t>(n)) == doctest::Approx(head).epsilon(1e-9));
    }
    CHECK(pow4.pmf(2) == doctest::Approx(0.5 / 16.0).epsilon(1e-15));
    CHECK(pow4.p0() == doctest::Approx(1.0 - 0.5 * std::pow(M_PI, 4) / 90.0).epsilon(1e-14));
    CHECK(pow4.mean() == doctest::Approx(0.5 * 1.2020569031595942).epsilon(1e-14));
}

TEST_CASE("normalization identity holds for every law")
{
    for (const auto& law : {geo, poi, pow4, binary}) {
        for (std::int64_t n : {0, 1, 2, 5, 20, 100}) {
            CHECK(std::fabs(law.cdf(n) + law.tail(n) - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("n times the tail decreases along the tested range")
{
    for (const auto& law : {geo, poi, pow4}) {
        CHECK(200.0 * law.tail(200) < 20.0 * law.tail(20));
        for (std::int64_t n = 20; n < 200; ++n) {
            CHECK(static_cast<double>(n + 1) * law.tail(n + 1) <= static_cast<double>(n) * law.tail(n));
        }
    }
}

TEST_CASE("invalid laws are rejected")
{
    CHECK_THROWS_AS(OffspringLaw::explicit_pmf({0.5, 0.4}), InvalidInput);
    CHECK_THROWS_AS(OffspringLaw::explicit_pmf({-0.1, 1.1}), InvalidInput);
    CHECK_THROWS_AS(OffspringLaw::explicit_pmf({}), InvalidInput);
    CHECK_THROWS_AS(OffspringLaw::explicit_pmf({1.0}), InvalidInput);
    CHECK_THROWS_AS(OffspringLaw::geometric(1.0), InvalidInput);
    CHECK_THROWS_AS(OffspringLaw::poisson(0.0), InvalidInput);
    CHECK_THROWS_AS(OffspringLaw::power_law(0.5, 2.0), InvalidInput);
    CHECK_THROWS_AS(OffspringLaw::power_law(2.0, 4.0), InvalidInput);
    CHECK_THROWS_AS(OffspringLaw::power_law(0.9, 2.5, true), InvalidInput);
}

TEST_CASE("point mass at zero is accepted on request")
{
    const auto dead = OffspringLaw::explicit_pmf({1.0}, MeanCheck::allow_zero);
    CHECK(dead.mean() == 0.0);
    CHECK(dead.p0() == 1.0);
    CHECK(dead.classify() == Criticality::subcritical);
}

TEST_CASE("explicit trailing zeros do not make a law unbounded")
{
    const auto law = OffspringLaw::explicit_pmf({0.5, 0.5, 0.0, 0.0});
    CHECK_FALSE(law.unbounded());
    REQUIRE(law.support_max().has_value());
    CHECK(*law.support_max() == 1);
    CHECK(law.pmf(7) == 0.0);
    CHECK(law.tail(1) == 0.0);
}

TEST_CASE("biased law atoms")
{
    const BiasedLaw bp(poi);
    CHECK(bp.atom_infinite() == 0.0);
    CHECK(bp.atom(0) == 0.0);
    CHECK(bp.atom(1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(bp.atom(3) == doctest::Approx(std::exp(-1.0) / 2.0).epsilon(1e-14));

    const BiasedLaw bg(geo);
    CHECK(bg.atom_infinite() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(bg.atom(1) == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
    CHECK(bg.atom(2) == doctest::Approx(4.0 / 27.0).epsilon(1e-14));

    const BiasedLaw bh(OffspringLaw::explicit_pmf({0.5, 0.5}));
    CHECK(bh.atom(1) == doctest::Approx(0.5));
    CHECK(bh.atom_infinite() == doctest::Approx(0.5));

    for (const auto& law : {geo, poi, pow4, binary}) {
        const BiasedLaw b(law);
        CompensatedSum s;
        for (std::uint64_t k = 0; k < 2000; ++k) s += b.atom(k);
        s += law.tail_moment(1999);
        s += b.atom_infinite();
        CHECK(std::fabs(s.value() - 1.0) < 1e-12);
        CHECK((b.atom_infinite() == 0.0) == (law.classify() == Criticality::critical));
    }
    CHECK_THROWS_AS(BiasedLaw(OffspringLaw::explicit_pmf({0.2, 0.0, 0.8})), InvalidInput);
}

TEST_CASE("biased sampling frequencies")
{
    const BiasedLaw bg(geo);
    Rng rng(7);
    const int draws = 200000;
    std::map<std::uint64_t, int> counts;
    for (int i = 0; i < draws; ++i) ++counts[bg.sample(rng.uniform())];
    auto within = [&](std::uint64_t k, double p) {
        const double sigma = std::sqrt(p * (1.0 - p) / draws);
        CHECK(std::fabs(counts[k] / static_cast<double>(draws) - p) < 4.0 * sigma);
    };
    within(infinite_degree, 0.5);
    within(1, 2.0 / 9.0);
    within(2, 4.0 / 27.0);
    CHECK(counts[0] == 0);
}

TEST_CASE("truncated excess against direct sums")
{
    for (const auto& law : {geo, poi}) {
        for (std::uint64_t ell : {0, 1, 3}) {
            for (std::uint64_t k : {0, 2, 5}) {
                CompensatedSum s;
                for (std::uint64_t x = std::max(k, ell + 1); x < 400; ++x) {
                    s += static_cast<double>(x - ell) * law.pmf(x);
                }
                CHECK(truncated_excess(law, ell, k) == doctest::Approx(s.value()).epsilon(1e-13));
            }
        }
    }
    // geometric(1/3), ℓ = 0, k = 2: μ - p_1
    CHECK(truncated_excess(geo, 0, 2) == doctest::Approx(0.5 - 2.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("inverse cdf reaches the tail beyond its table")
{
    const InverseCdf inv = make_offspring_sampler(geo);
    CHECK(inv(0.0) == 0);
    CHECK(inv(0.6) == 0);
    CHECK(inv(2.0 / 3.0 + 1e-9) == 1);
    const InverseCdf heavy = make_offspring_sampler(pow4);
    const double u = 1.0 - 0.5 * pow4.tail(40);
    CHECK(heavy(u) > 40);
    CHECK(heavy(1.0 - 0.5 * pow4.tail(5000)) > 5000);

    const InverseCdf small(
        [](std::uint64_t k) { return k < 3 ? 1.0 : 0.0; }, [](std::int64_t n) { return n < 2 ? 2.0 - n : 0.0; }, 3.0,
        2, 2);
    CHECK(small(0.1) == 0);
    CHECK(small(0.5) == 1);
    CHECK(small(0.9) == 2);
}

TEST_CASE("law specs from JSON")
{
    CHECK(parse_law_spec(R"({"family":"geometric","a":0.3333333333333333})").classify() == Criticality::subcritical);
    CHECK(parse_law_spec(R"({"family":"poisson","lambda":1})").mean() == 1.0);
    CHECK(parse_law_spec(R"({"family":"power-law","c":0.5,"alpha":4})").pmf(1) == 0.5);
    CHECK(parse_law_spec(R"({"family":"explicit","pmf":[1,0,1],"normalize":true})").pmf(2) == 0.5);
    CHECK_THROWS_AS(parse_law_spec(R"({"family":"explicit","pmf":[1,0,1]})"), InvalidInput);
    CHECK_THROWS_AS(parse_law_spec(R"({"family":"zipf"})"), InvalidInput);
    CHECK_THROWS_AS(parse_law_spec(R"({"family":"geometric"})"), InvalidInput);
    CHECK_THROWS_AS(parse_law_spec(R"({"family":)"), InvalidInput);
    CHECK_THROWS_AS(parse_law_spec("/nonexistent/law.json"), InvalidInput);
}
