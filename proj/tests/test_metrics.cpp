#include <doctest.h>

#include "safa/errors.hpp"
#include "safa/metrics.hpp"

using namespace safa;

TEST_CASE("empirical effective update ratio") {
    CHECK(eur_empirical({}, {4, 5}, 10) == doctest::Approx(0.0));
    CHECK(eur_empirical({1, 2, 3, 4, 5}, {4, 5, 9}, 10) == doctest::Approx(0.3));
    CHECK(eur_empirical({1, 2, 3}, {}, 10) == doctest::Approx(0.3));
}

TEST_CASE("theoretical effective update ratio") {
    CHECK(eur_theoretical(0.5, 0.3) == doctest::Approx(0.5));
    CHECK(eur_theoretical(0.9, 0.3) == doctest::Approx(0.7));
    for (double C : {0.1, 0.4, 1.0}) CHECK(eur_theoretical(C, 0.0) == doctest::Approx(C));
    CHECK_THROWS_AS(eur_theoretical(0.0, 0.3), ConfigError);
}

TEST_CASE("synchronization ratio") {
    CHECK(sync_ratio({10, 10, 10}, 10, 3) == doctest::Approx(1.0));
    CHECK(sync_ratio({5, 10, 0}, 10, 3) == doctest::Approx(0.5));
    CHECK_THROWS_AS(sync_ratio({1}, 10, 3), ConfigError);
}

TEST_CASE("version variance uses the population convention") {
    CHECK(population_variance({3, 3, 3}) == doctest::Approx(0.0));
    CHECK(population_variance({0, 2}) == doctest::Approx(1.0));
    CHECK(population_variance({7}) == doctest::Approx(0.0));

    CHECK(version_variance({{1, 1}, {0, 2}}, 2) == doctest::Approx(0.5));
}

TEST_CASE("metrics are invariant under client relabeling") {
    CHECK(sync_ratio({3, 7, 5}, 10, 3) == sync_ratio({7, 5, 3}, 10, 3));
    CHECK(population_variance({0, 1, 5}) == doctest::Approx(population_variance({5, 0, 1})));
}

TEST_CASE("futility is the wasted share of attempted epochs") {
    CHECK(futility(0.0, 100.0) == doctest::Approx(0.0));
    CHECK(futility(25.0, 100.0) == doctest::Approx(0.25));
    CHECK_THROWS_AS(futility(1.0, 0.0), ConfigError);
}
