#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "invbandit/core.hpp"
#include "invbandit/errors.hpp"
#include "invbandit/reference.hpp"

using namespace invbandit;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

double sum(std::span<const double> xs) { return std::accumulate(xs.begin(), xs.end(), 0.0); }

}  // namespace

TEST_CASE("mixture coefficient") {
    CHECK(mixture_coefficient(1, 4) == 0.5);
    CHECK(mixture_coefficient(64, 4) == 0.25);
    for (std::size_t m : {2u, 3u, 7u, 16u}) CHECK(mixture_coefficient(4 * m, m) == 0.5);
    CHECK(mixture_coefficient(4 * 7 + 1, 7) < 0.5);
    CHECK_THROWS_AS(mixture_coefficient(1, 1), ConfigError);
    CHECK_THROWS_AS(mixture_coefficient(0, 4), ConfigError);
}

TEST_CASE("selection probabilities mix in the uniform distribution") {
    const std::vector<double> p{1, 0, 0, 0};
    const auto q = selection_probabilities(p, 0.5);
    CHECK(q == std::vector<double>{5.0 / 8, 1.0 / 8, 1.0 / 8, 1.0 / 8});

    const std::vector<double> uniform(5, 0.2);
    for (double eps : {0.01, 0.3, 0.5}) {
        for (double v : selection_probabilities(uniform, eps)) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));
    }

    const auto q2 = selection_probabilities(std::vector<double>{0.6, 0.4}, 0.25);
    CHECK(q2[0] == doctest::Approx(0.575).epsilon(1e-15));
    CHECK(q2[1] == doctest::Approx(0.425).epsilon(1e-15));
}

TEST_CASE("arm marginals") {
    SUBCASE("two classes per arm with equal weights") {
        ClassWeights w({0.0, 0.0, 0.0, 0.0}, {0, 0, 1, 1}, 2);
        const auto p = arm_marginals(w);
        CHECK(p[0] == 0.5);
        CHECK(p[1] == 0.5);
    }
    SUBCASE("weights 1 and 3") {
        ClassWeights w({0.0, std::log(3.0)}, {0, 1}, 2);
        const auto p = arm_marginals(w);
        CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-14));
        CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-14));
    }
    SUBCASE("uniform log shift leaves p unchanged") {
        Rng rng(5);
        for (int rep = 0; rep < 50; ++rep) {
            std::vector<double> lw(6);
            for (double& v : lw) v = -30.0 * rng.uniform();
            std::vector<double> shifted(lw);
            for (double& v : shifted) v += 100.0;
            const std::vector<Arm> map{0, 1, 2, 0, 1, 2};
            const auto p1 = arm_marginals(ClassWeights(lw, map, 3));
            const auto p2 = arm_marginals(ClassWeights(shifted, map, 3));
            for (std::size_t m = 0; m < 3; ++m) CHECK(std::abs(p1[m] - p2[m]) <= 1e-12);
        }
    }
    SUBCASE("all weights vanished") {
        ClassWeights w({-kInf, -kInf}, {0, 1}, 2);
        CHECK_THROWS_AS(arm_marginals(w), DegenerateWeights);
    }
    SUBCASE("unreachable class contributes nothing") {
        ClassWeights w({0.0, -kInf, 0.0}, {0, 1, 1}, 2);
        const auto p = arm_marginals(w);
        CHECK(p[0] == 0.5);
    }
}

TEST_CASE("sample arm") {
    const std::vector<double> point{1, 0, 0, 0};
    Rng rng(1);
    for (int i = 0; i < 100; ++i) CHECK(sample_arm(point, rng) == 0);
    CHECK(sample_arm(point, 0.9999999999) == 0);

    SUBCASE("inverse CDF boundaries") {
        const std::vector<double> q{0.3, 0.7};
        CHECK(sample_arm(q, 0.0) == 0);
        CHECK(sample_arm(q, 0.2999) == 0);
        CHECK(sample_arm(q, 0.3) == 1);
        CHECK(sample_arm(q, std::nextafter(1.0, 0.0)) == 1);
    }

    SUBCASE("determinism for a fixed seed") {
        const std::vector<double> q{0.3, 0.7};
        Rng a(99), b(99);
        for (int i = 0; i < 10; ++i) CHECK(sample_arm(q, a) == sample_arm(q, b));
    }

    SUBCASE("uniform frequencies within 3 sigma of the multinomial") {
        const std::size_t M = 4;
        const std::size_t n = 1000000;
        const std::vector<double> q(M, 0.25);
        std::vector<std::size_t> counts(M, 0);
        Rng r(2024);
        for (std::size_t i = 0; i < n; ++i) ++counts[sample_arm(q, r)];
        const double expected = n * 0.25;
        const double sigma = std::sqrt(n * 0.25 * 0.75);
        double chi2 = 0.0;
        for (std::size_t c : counts) {
            CHECK(std::abs(static_cast<double>(c) - expected) <= 3.0 * sigma);
            chi2 += (c - expected) * (c - expected) / expected;
        }
        // chi-square, 3 dof: P(X > 16.27) = 0.001
        CHECK(chi2 < 16.27);
    }
}

TEST_CASE("performance measure") {
    auto r = performance_measure(3.0, 2, 0.5, 1.0);
    CHECK(r.psi == 1.0);
    CHECK(r.measure.phi == 4.0);
    CHECK(r.measure.selected == 2);

    r = performance_measure(0.5, 0, 0.2, 1.0);
    CHECK(r.psi == 0.5);
    CHECK(r.measure.phi == 0.0);

    for (double q : {0.01, 0.3, 1.0}) {
        r = performance_measure(7.3, 1, q, kInf);
        CHECK(r.psi == 7.3);
        CHECK(r.measure.phi == 0.0);
    }
    CHECK_THROWS_AS(performance_measure(1.0, 0, 0.0, 1.0), ContractError);
    CHECK_THROWS_AS(performance_measure(1.0, 0, -0.1, 1.0), ContractError);
}

TEST_CASE("statistics and learning rate") {
    AdaptiveState s;
    s = update_statistics(s, PerformanceMeasure{4.0, 0, 0.5}, 0.25);
    CHECK(s.V == 4.0);
    CHECK(s.D == 4.0);

    AdaptiveState z;
    z.V = 2.0;
    z.D = 3.0;
    const auto same = update_statistics(z, PerformanceMeasure{0.0, 0, 1.0}, 0.7);
    CHECK(same.V == 2.0);
    CHECK(same.D == 3.0);

    AdaptiveState seq;
    for (double phi : {0.0, 2.0, 1.0}) seq = update_statistics(seq, PerformanceMeasure{phi, 0, 1.0}, 1.0);
    CHECK(seq.V == 5.0);
    CHECK(seq.D == 2.0);

    AdaptiveState a;
    a.gamma = 1.0;
    a.V = 3.0;
    a.D = 1.0;
    CHECK(*learning_rate(a) == 0.5);
    a.V = 0.0;
    a.D = 0.0;
    CHECK_FALSE(learning_rate(a).has_value());
    a.gamma = 2.0;
    a.D = 3.0;
    CHECK(*learning_rate(a) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("exponential update touches only the selected arm's classes") {
    ClassWeights w({0.0, -1.0, 0.5, 2.0}, {0, 1, 0, 1}, 2);
    const auto same = exponential_update(w, PerformanceMeasure{0.0, 0, 1.0}, 3.0);
    CHECK(std::vector<double>(w.log_weights().begin(), w.log_weights().end()) == same);

    const auto z = exponential_update(w, PerformanceMeasure{4.0, 0, 0.5}, 0.5);
    CHECK(z[0] == -2.0);
    CHECK(z[2] == -1.5);
    CHECK(z[1] == -1.0);
    CHECK(z[3] == 2.0);
}

TEST_CASE("weight share") {
    SUBCASE("identity transition with power 1 copies z") {
        const auto model = fixed_arm_model(3);
        const std::vector<double> lz{-0.5, 1.0, -3.0};
        const auto out = weight_share(lz, *model, 1.0);
        CHECK(out.log_w == lz);
    }
    SUBCASE("fixed share keeps the uniform point") {
        const auto model = fixed_share_model(2, 0.25);
        const std::vector<double> lz{0.0, 0.0};
        const auto out = weight_share(lz, *model, 1.0);
        CHECK(out.log_w[0] == doctest::Approx(0.0));
        CHECK(out.log_w[1] == doctest::Approx(0.0));
    }
    SUBCASE("fixed share on z=(4,0) with power 1/2") {
        // Hand expansion: z^0.5 = (2, 0); w1 = 0.75*2 + 0.25*0, w2 = 0.25*2 + 0.75*0.
        const auto model = fixed_share_model(2, 0.25);
        const std::vector<double> lz{std::log(4.0), -kInf};
        const auto out = weight_share(lz, *model, 0.5);
        CHECK(std::exp(out.log_w[0]) == doctest::Approx(1.5).epsilon(1e-14));
        CHECK(std::exp(out.log_w[1]) == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(out.log_mass_in == doctest::Approx(std::log(2.0)).epsilon(1e-14));
        CHECK(out.log_mass_out == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    }
    SUBCASE("structured fast path agrees with the dense sum") {
        Rng rng(17);
        for (int rep = 0; rep < 200; ++rep) {
            const std::size_t M = 2 + rng() % 7;
            const double alpha = 0.001 + 0.998 * rng.uniform();
            const auto fs = fixed_share_model(M, alpha);
            std::vector<std::vector<double>> tr(M, std::vector<double>(M));
            std::vector<Arm> map(M);
            for (std::size_t i = 0; i < M; ++i) {
                map[i] = i;
                for (std::size_t j = 0; j < M; ++j) tr[i][j] = fs->transition(i, j);
            }
            const DenseModel dense(map, std::vector<double>(M, 1.0 / M), tr);
            std::vector<double> lz(M);
            for (double& v : lz) v = -50.0 * rng.uniform();
            const double power = 0.05 + 0.95 * rng.uniform();
            const auto a = weight_share(lz, *fs, power);
            const auto b = weight_share(lz, dense, power);
            for (std::size_t m = 0; m < M; ++m) CHECK(a.log_w[m] == doctest::Approx(b.log_w[m]).epsilon(1e-12));
        }
    }
    SUBCASE("non-stochastic transitions are a contract breach") {
        DenseModel broken({0, 1}, {0.5, 0.5}, {{0.9, 0.2}, {0.2, 0.8}});
        CHECK_THROWS_AS(broken.validate(), ContractError);
        CHECK_THROWS_AS(Bandit(std::make_shared<DenseModel>(broken), BanditOptions{}), ContractError);
    }
}

TEST_CASE("init") {
    Bandit fixed(fixed_arm_model(4), BanditOptions{1.0});
    for (double v : fixed.p()) CHECK(v == 0.25);
    CHECK(fixed.state().t == 1);
    CHECK(fixed.state().psi == kInf);
    CHECK_FALSE(fixed.state().eta_prev.has_value());

    Bandit share(fixed_share_model(2, 0.3), BanditOptions{1.0});
    CHECK(share.p()[0] == 0.5);
    CHECK(share.p()[1] == 0.5);

    CHECK_THROWS_AS(Bandit(fixed_arm_model(4), BanditOptions{0.0}), ConfigError);
    CHECK_THROWS_AS(Bandit(fixed_arm_model(4), BanditOptions{-1.0}), ConfigError);
    CHECK_THROWS_AS(DenseModel({}, {}, {}), ConfigError);
}

TEST_CASE("two-phase protocol") {
    Bandit b(fixed_share_model(3, 0.1), BanditOptions{1.0}, Rng(1));
    CHECK_THROWS_AS(b.update(1.0), ContractError);
    b.select();
    CHECK(b.awaiting_update());
    CHECK_THROWS_AS(b.select(), ContractError);
    CHECK_THROWS_AS(b.select_arm(0), ContractError);
    CHECK_THROWS_AS(b.update(std::numeric_limits<double>::quiet_NaN()), ConfigError);
    CHECK_THROWS_AS(b.update(kInf), ConfigError);
    b.update(1.0);
    CHECK_FALSE(b.awaiting_update());
    CHECK_THROWS_AS(b.select_arm(3), ContractError);
}

TEST_CASE("round one is a pure prior step") {
    DenseModel skewed({0, 1, 1}, {0.2, 0.3, 0.5},
                      {{0.6, 0.1, 0.3}, {0.3, 0.8, 0.2}, {0.1, 0.1, 0.5}});
    auto model = std::make_shared<DenseModel>(skewed);
    Bandit b(model, BanditOptions{1.0}, Rng(4));
    CHECK(b.p()[0] == doctest::Approx(0.2));
    const auto rec = b.step([](Arm) { return 12.5; });
    CHECK(rec.phi == 0.0);
    CHECK(rec.psi == 12.5);
    CHECK_FALSE(rec.eta.has_value());
    CHECK(rec.power == 1.0);
    // p_2: prior pushed through the transitions once.
    const std::vector<double> prior{0.2, 0.3, 0.5};
    std::vector<double> next(3, 0.0);
    for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t i = 0; i < 3; ++i) next[j] += skewed.transition(j, i) * prior[i];
    CHECK(b.p()[0] == doctest::Approx(next[0]).epsilon(1e-14));
    CHECK(b.p()[1] == doctest::Approx(next[1] + next[2]).epsilon(1e-14));
}

TEST_CASE("constant losses keep p at the chain marginals") {
    Bandit b(fixed_share_model(5, 0.2), BanditOptions{1.0}, Rng(8));
    for (int t = 0; t < 500; ++t) {
        const auto rec = b.step([](Arm) { return -3.25; });
        CHECK(rec.phi == 0.0);
        for (double v : b.p()) REQUIRE(v == doctest::Approx(0.2).epsilon(1e-14));
    }
    CHECK(b.state().V == 0.0);
    CHECK(b.state().D == 0.0);
}

TEST_CASE("three scripted rounds match the dense reference") {
    const auto model = fixed_share_model(2, 0.25);
    Bandit core(model, BanditOptions{1.0}, Rng(0));
    DenseReference ref(*model, 1.0);
    const std::vector<double> draws{0.1, 0.8, 0.45};
    const std::vector<std::vector<double>> losses{{0.3, 0.9}, {0.7, 0.2}, {0.1, 0.6}};
    for (std::size_t t = 0; t < 3; ++t) {
        const Selection sel = core.select_with_draw(draws[t]);
        const OracleRound o = ref.step(sel.arm, losses[t][sel.arm]);
        for (std::size_t m = 0; m < 2; ++m) CHECK(sel.q[m] == doctest::Approx(o.q[m]).epsilon(1e-15));
        const RoundRecord rec = core.update(losses[t][sel.arm]);
        CHECK(rec.psi == o.psi);
        CHECK(core.state().V == doctest::Approx(o.V).epsilon(1e-14));
        CHECK(core.state().D == doctest::Approx(o.D).epsilon(1e-14));
        CHECK(rec.eta.has_value() == o.eta.has_value());
        if (rec.eta) CHECK(*rec.eta == doctest::Approx(*o.eta).epsilon(1e-14));
        for (std::size_t m = 0; m < 2; ++m) CHECK(std::abs(core.p()[m] - ref.p()[m]) <= 1e-14);
    }
}

TEST_CASE("per-round invariants on random runs") {
    Rng gen(31);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t M = 2 + gen() % 9;
        const ModelPtr model = rep % 2 ? ModelPtr(fixed_arm_model(M))
                                       : ModelPtr(fixed_share_model(M, 0.001 + 0.5 * gen.uniform()));
        const double scale = std::exp(10.0 * (gen.uniform() - 0.5));
        const double shift = 100.0 * (gen.uniform() - 0.5);
        Bandit b(model, BanditOptions{0.2 + 3.0 * gen.uniform()}, gen.split(rep));
        double psi = kInf, V = 0.0, D = 0.0;
        Rate eta_prev;
        for (int t = 0; t < 400; ++t) {
            const double eps = mixture_coefficient(b.state().t, M);
            const Selection sel = b.select();
            REQUIRE(std::abs(sum(sel.q) - 1.0) <= 1e-12);
            for (double v : sel.q) REQUIRE(v >= eps / static_cast<double>(M));
            const double loss = shift + scale * gen.uniform();
            const RoundRecord rec = b.update(loss);
            REQUIRE(std::abs(sum(b.p()) - 1.0) <= 1e-12);
            REQUIRE(rec.phi >= 0.0);
            REQUIRE(b.state().psi <= psi);
            REQUIRE(b.state().V >= V);
            REQUIRE(b.state().D >= D);
            REQUIRE(rec.power > 0.0);
            REQUIRE(rec.power <= 1.0);
            if (eta_prev) {
                REQUIRE(rec.eta.has_value());
                REQUIRE(*rec.eta <= *eta_prev);
            }
            REQUIRE(std::abs(std::expm1(rec.log_mass_out - rec.log_mass_in)) <= 1e-9);
            psi = b.state().psi;
            V = b.state().V;
            D = b.state().D;
            if (rec.eta) eta_prev = rec.eta;
        }
    }
}

TEST_CASE("affine transforms of the losses leave selections unchanged") {
    Rng gen(77);
    const auto model = fixed_share_model(4, 0.01);
    std::vector<double> losses(4 * 2000);
    for (double& v : losses) v = gen.uniform();
    for (auto [a, b] : {std::pair{1024.0, 0.0}, std::pair{2.0, 5.0}, std::pair{0.003, -40.0}}) {
        Bandit x(model, BanditOptions{1.0}, Rng(5));
        Bandit y(model, BanditOptions{1.0}, Rng(5));
        for (std::size_t t = 0; t < 2000; ++t) {
            const Selection sx = x.select();
            const Selection sy = y.select();
            REQUIRE(sx.arm == sy.arm);
            for (std::size_t m = 0; m < 4; ++m) REQUIRE(std::abs(sx.q[m] - sy.q[m]) <= 1e-9);
            const auto rx = x.update(losses[t * 4 + sx.arm]);
            const auto ry = y.update(a * losses[t * 4 + sy.arm] + b);
            REQUIRE(y.state().psi == doctest::Approx(a * x.state().psi + b).epsilon(1e-9));
            REQUIRE(y.state().V == doctest::Approx(a * a * x.state().V).epsilon(1e-9));
            REQUIRE(y.state().D == doctest::Approx(a * x.state().D).epsilon(1e-9));
            REQUIRE(rx.eta.has_value() == ry.eta.has_value());
            if (rx.eta) REQUIRE(*ry.eta == doctest::Approx(*rx.eta / a).epsilon(1e-9));
        }
    }
}

TEST_CASE("snapshot round trip is exact") {
    Bandit b(fixed_share_model(6, 0.05), BanditOptions{1.7}, Rng(123));
    Rng losses(4);
    for (int t = 0; t < 300; ++t) b.step([&](Arm) { return losses.uniform() * 10.0 - 3.0; });

    const std::string snap = b.snapshot();
    Bandit restored = Bandit::restore(snap);
    CHECK(restored.snapshot() == snap);

    Rng l1(8), l2(8);
    for (int t = 0; t < 200; ++t) {
        const auto r1 = b.step([&](Arm) { return l1.uniform(); });
        const auto r2 = restored.step([&](Arm) { return l2.uniform(); });
        REQUIRE(r1.arm == r2.arm);
    }
    CHECK(b.snapshot() == restored.snapshot());

    SUBCASE("pending selection survives") {
        b.select();
        Bandit mid = Bandit::restore(b.snapshot());
        CHECK(mid.awaiting_update());
        b.update(0.5);
        mid.update(0.5);
        CHECK(b.snapshot() == mid.snapshot());
    }
    SUBCASE("fresh state with infinite psi and undefined eta") {
        Bandit fresh(fixed_arm_model(3), BanditOptions{0.5, 0.25}, Rng(1));
        const Bandit back = Bandit::restore(fresh.snapshot());
        CHECK(back.state().psi == kInf);
        CHECK(back.options().constant_eta == 0.25);
        CHECK(back.snapshot() == fresh.snapshot());
    }
    SUBCASE("bad snapshots are rejected") {
        CHECK_THROWS_AS(Bandit::restore("not json"), ConfigError);
        CHECK_THROWS_AS(Bandit::restore("{\"format\":\"invbandit-state\",\"version\":99}"), ConfigError);
    }
}
