#include <doctest.h>

#include <cmath>
#include <limits>

#include "invbandit/competitions.hpp"
#include "invbandit/core.hpp"
#include "invbandit/errors.hpp"
#include "invbandit/rng.hpp"

using namespace invbandit;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

// Direct product evaluation, independent of complexity().
double direct_complexity(const CompetitionModel& model, const std::vector<std::size_t>& path) {
    double weight = model.prior(path[0]);
    for (std::size_t t = 1; t < path.size(); ++t) weight *= model.transition(path[t], path[t - 1]);
    const double max_set = path.size() >= 2 ? static_cast<double>(model.class_count()) : 1.0;
    return std::log(max_set) - std::log(weight);
}

std::vector<std::size_t> random_path(Rng& rng, std::size_t M, std::size_t T, std::size_t switches) {
    // Choose `switches` distinct change points, then arms that actually change.
    std::vector<bool> change(T, false);
    std::size_t placed = 0;
    while (placed < switches) {
        const std::size_t at = 1 + rng() % (T - 1);
        if (!change[at]) {
            change[at] = true;
            ++placed;
        }
    }
    std::vector<std::size_t> path(T);
    path[0] = rng() % M;
    for (std::size_t t = 1; t < T; ++t) {
        path[t] = change[t] ? (path[t - 1] + 1 + rng() % (M - 1)) % M : path[t - 1];
    }
    return path;
}

}  // namespace

TEST_CASE("fixed-arm model") {
    const auto m = fixed_arm_model(3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(m->transition(i, j) == (i == j ? 1.0 : 0.0));
    m->validate();

    const std::vector<std::size_t> constant(7, 2);
    CHECK(complexity(*m, constant) == doctest::Approx(2.0 * std::log(3.0)).epsilon(1e-15));

    const auto m2 = fixed_arm_model(2);
    const std::vector<std::size_t> five(5, 0);
    CHECK(complexity(*m2, five) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-15));

    const std::vector<std::size_t> moving{0, 0, 1};
    CHECK(complexity(*m, moving) == kInf);
    CHECK_THROWS_AS(fixed_arm_model(1), ConfigError);
}

TEST_CASE("fixed-share model") {
    const auto m = fixed_share_model(2, 0.25);
    CHECK(m->transition(0, 0) == 0.75);
    CHECK(m->transition(1, 0) == 0.25);
    CHECK(m->transition(0, 1) == 0.25);
    CHECK(m->transition(1, 1) == 0.75);

    SUBCASE("rows are stochastic for fuzzed parameters") {
        Rng rng(1);
        for (int rep = 0; rep < 500; ++rep) {
            const std::size_t M = 2 + rng() % 30;
            const double alpha = std::max(1e-12, rng.uniform());
            FixedShareModel fs(M, alpha);
            for (std::size_t prev = 0; prev < M; ++prev) {
                double row = 0.0;
                for (std::size_t next = 0; next < M; ++next) row += fs.transition(next, prev);
                REQUIRE(std::abs(row - 1.0) <= 1e-12);
            }
        }
    }
    SUBCASE("small alpha approaches the identity") {
        FixedShareModel fs(4, 1e-15);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                CHECK(std::abs(fs.transition(i, j) - (i == j ? 1.0 : 0.0)) <= 1e-15);
    }
    CHECK_THROWS_AS(fixed_share_model(3, 0.0), ConfigError);
    CHECK_THROWS_AS(fixed_share_model(3, 1.0), ConfigError);
    CHECK_THROWS_AS(fixed_share_model(1, 0.5), ConfigError);
}

TEST_CASE("priors give a uniform first distribution") {
    for (std::size_t M : {2u, 3u, 10u}) {
        const auto p1 = arm_marginals(ClassWeights::from_prior(*fixed_arm_model(M)));
        const auto p2 = arm_marginals(ClassWeights::from_prior(*fixed_share_model(M, 0.1)));
        for (std::size_t m = 0; m < M; ++m) {
            CHECK(p1[m] == 1.0 / static_cast<double>(M));
            CHECK(p2[m] == 1.0 / static_cast<double>(M));
        }
    }
}

TEST_CASE("complexity of a fixed-share path") {
    const auto m = fixed_share_model(2, 0.25);
    const std::vector<std::size_t> path{0, 0, 1};
    // log 2 - log(0.5 * 0.75 * 0.25) = log(64/3)
    CHECK(complexity(*m, path) == doctest::Approx(std::log(64.0 / 3.0)).epsilon(1e-14));
    CHECK(complexity(*m, path) == doctest::Approx(3.0603).epsilon(1e-4));

    const std::vector<std::size_t> single{1};
    CHECK(complexity(*m, single) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("closed-form complexity matches the direct product on random paths") {
    Rng rng(3);
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t M = 2 + rng() % 6;
        const std::size_t T = 2 + rng() % 60;
        const std::size_t k = rng() % T;
        const double alpha = 0.001 + 0.99 * rng.uniform();
        const auto model = fixed_share_model(M, alpha);
        const auto path = random_path(rng, M, T, k);
        REQUIRE(switch_count(*model, path) == k);
        const double closed = 2.0 * std::log(static_cast<double>(M)) +
                              k * std::log((M - 1) / alpha) + (T - 1 - k) * std::log(1.0 / (1.0 - alpha));
        CHECK(complexity(*model, path) == doctest::Approx(closed).epsilon(1e-12));
        CHECK(complexity(*model, path) == doctest::Approx(direct_complexity(*model, path)).epsilon(1e-9));
    }
}

TEST_CASE("complexity budget") {
    for (std::size_t M : {2u, 4u, 9u}) {
        for (std::size_t T : {2u, 10u, 1000u}) {
            CHECK(complexity_budget(*fixed_arm_model(M), T, 0) ==
                  doctest::Approx(2.0 * std::log(static_cast<double>(M))).epsilon(1e-15));
            CHECK(complexity_budget(*fixed_arm_model(M), T, 3) ==
                  doctest::Approx(2.0 * std::log(static_cast<double>(M))).epsilon(1e-15));
        }
    }
    SUBCASE("no switches") {
        const auto m = fixed_share_model(5, 0.02);
        CHECK(complexity_budget(*m, 50, 0) ==
              doctest::Approx(2.0 * std::log(5.0) + 49.0 * std::log(1.0 / 0.98)).epsilon(1e-13));
    }
    SUBCASE("M=4, alpha=1/T, two switches, against random paths") {
        const std::size_t T = 100;
        const auto m = fixed_share_model(4, 1.0 / T);
        const double budget = complexity_budget(*m, T, 2);
        const double closed = 2.0 * std::log(4.0) + 2.0 * std::log(3.0 * T) + 97.0 * std::log(1.0 / (1.0 - 1.0 / T));
        CHECK(budget == doctest::Approx(closed).epsilon(1e-13));
        Rng rng(44);
        double best = -kInf;
        for (int rep = 0; rep < 10000; ++rep) {
            const auto path = random_path(rng, 4, T, rng() % 3);
            const double w = complexity(*m, path);
            REQUIRE(w <= budget + 1e-9);
            best = std::max(best, w);
        }
        CHECK(best == doctest::Approx(budget).epsilon(1e-12));
    }
    SUBCASE("closed forms agree with the generic dynamic program") {
        Rng rng(5);
        for (int rep = 0; rep < 100; ++rep) {
            const std::size_t M = 2 + rng() % 5;
            const std::size_t T = 1 + rng() % 30;
            const std::size_t k = rng() % (T + 2);
            const double alpha = 0.001 + 0.99 * rng.uniform();
            const auto fs = fixed_share_model(M, alpha);
            const auto fa = fixed_arm_model(M);
            CHECK(fs->complexity_budget(T, k) ==
                  doctest::Approx(fs->CompetitionModel::complexity_budget(T, k)).epsilon(1e-12));
            CHECK(fa->complexity_budget(T, k) ==
                  doctest::Approx(fa->CompetitionModel::complexity_budget(T, k)).epsilon(1e-12));
        }
    }
}

TEST_CASE("dense model validation") {
    DenseModel ok({0, 0, 1}, {0.25, 0.25, 0.5}, {{0.5, 0.0, 0.1}, {0.5, 0.5, 0.1}, {0.0, 0.5, 0.8}});
    ok.validate();
    CHECK(ok.arm_count() == 2);
    DenseModel missing_arm({0, 0, 2}, {0.25, 0.25, 0.5}, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    CHECK_THROWS_AS(missing_arm.validate(), ContractError);
    DenseModel bad_prior({0, 1}, {0.4, 0.4}, {{1, 0}, {0, 1}});
    CHECK_THROWS_AS(bad_prior.validate(), ContractError);
    CHECK_THROWS_AS(DenseModel({0, 1}, {0.5, 0.5}, {{1, 0}}), ConfigError);
}

TEST_CASE("model strings") {
    CHECK(parse_model("fixed", 4)->spec() == "fixed");
    const auto sw = parse_model("switching:0.125", 3);
    CHECK(sw->spec() == "switching:0.125");
    CHECK(sw->transition(1, 0) == 0.0625);
    const auto round_trip = parse_model(fixed_share_model(3, 1.0 / 3.0)->spec(), 3);
    CHECK(round_trip->transition(0, 0) == 1.0 - 1.0 / 3.0);
    CHECK_THROWS_AS(parse_model("switching:0", 3), ConfigError);
    CHECK_THROWS_AS(parse_model("switching:1.5", 3), ConfigError);
    CHECK_THROWS_AS(parse_model("switching:abc", 3), ConfigError);
    CHECK_THROWS_AS(parse_model("switching:", 3), ConfigError);
    CHECK_THROWS_AS(parse_model("contextual", 3), ConfigError);
}
