#include <doctest.h>

#include "graphecon/assumptions.hpp"
#include "graphecon/fixtures.hpp"
#include "graphecon/verifier.hpp"
#include "helpers.hpp"

using namespace graphecon;
using namespace graphecon::testing;

TEST_CASE("broker certificates verify exactly for the rational-alpha bounds") {
    for (Rational b : {rat(1, 8), rat(1, 2), rat(2)}) {
        auto fix = gen_broker<Rational>(b);
        REQUIRE(fix.certificate.has_value());
        auto report = verify_resale_equilibrium(fix.economy, fix.certificate->prices,
                                                fix.certificate->plan, rat(0));
        INFO("b = ", rational_to_string(b), ": ", report.first_failure());
        CHECK(report.pass);
        for (int i = 0; i < 3; ++i)
            CHECK(agent_utility(fix.economy, fix.certificate->plan, i) == fix.utilities[i]);
    }
}

TEST_CASE("broker utilities match the closed form") {
    auto fix = gen_broker<Rational>(rat(1, 2));
    CHECK(fix.utilities == std::vector<Rational>{rat(1, 2), rat(1), rat(1, 2)});
    auto ad = gen_broker<Rational>(rat(2));
    CHECK(ad.utilities == std::vector<Rational>{rat(1), rat(0), rat(1)});
    // b = 2 is the AD regime: all prices coincide
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 2; ++k) CHECK(ad.certificate->prices(i, k) == rat(1));
}

TEST_CASE("broker generator rejects out-of-range bounds and irrational alpha") {
    CHECK_THROWS_AS(gen_broker<Rational>(rat(0)), std::domain_error);
    CHECK_THROWS_AS(gen_broker<Rational>(rat(3)), std::domain_error);
    CHECK_THROWS_AS(gen_broker<Rational>(rat(1, 3)), std::domain_error);  // sqrt(1/6) irrational
    CHECK_NOTHROW(gen_broker<double>(0.3));  // float mode takes any b in range
}

TEST_CASE("asymmetric broker certificates verify exactly") {
    for (Rational b : {rat(3, 4), rat(2)}) {
        auto fix = gen_asymmetric_broker<Rational>(b);
        auto report = verify_resale_equilibrium(fix.economy, fix.certificate->prices,
                                                fix.certificate->plan, rat(0));
        INFO("b = ", rational_to_string(b), ": ", report.first_failure());
        CHECK(report.pass);
        for (int i = 0; i < 3; ++i)
            CHECK(agent_utility(fix.economy, fix.certificate->plan, i) == fix.utilities[i]);
    }
    auto fix = gen_asymmetric_broker<Rational>(rat(3, 4));
    CHECK(fix.utilities == std::vector<Rational>{rat(1, 4), rat(3, 4), rat(1)});
    auto ad = gen_asymmetric_broker<Rational>(rat(2));
    CHECK(ad.utilities == std::vector<Rational>{rat(1), rat(0), rat(1)});
}

TEST_CASE("epsilon-KKO broker certificate and welfare comparison") {
    auto fix = gen_epsilon_kko_broker<Rational>(rat(1, 10));
    CHECK(fix.utilities == std::vector<Rational>{rat(1, 10), rat(11, 10), rat(1, 5)});
    auto report = verify_kko(fix.economy, fix.certificate->prices, fix.certificate->plan);
    INFO(report.first_failure());
    CHECK(report.pass);
    for (int i = 0; i < 3; ++i)
        CHECK(agent_utility(fix.economy, fix.certificate->plan, i) == fix.utilities[i]);

    // resale extracts all welfare (2) vs 1 + 3 eps under epsilon-KKO
    Rational kko_welfare = fix.utilities[0] + fix.utilities[1] + fix.utilities[2];
    CHECK(kko_welfare == rat(13, 10));
    auto resale = gen_asymmetric_broker<Rational>(rat(3, 4));
    Rational resale_welfare = resale.utilities[0] + resale.utilities[1] + resale.utilities[2];
    CHECK(resale_welfare == rat(2));
    CHECK(resale_welfare > kko_welfare);

    SUBCASE("scaled prices also pass the KKO check") {
        auto scaled = *fix.certificate;
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 2; ++k) scaled.prices(i, k) *= rat(7);
        CHECK(verify_kko(fix.economy, scaled.prices, scaled.plan).pass);
    }
}

TEST_CASE("breadth chain reduces to the broker at m = 3") {
    auto chain = gen_breadth_chain<Rational>(3, rat(1, 2)).economy;
    auto broker = gen_broker<Rational>(rat(1, 2)).economy;
    CHECK(chain.endowments == broker.endowments);
    CHECK(chain.utilities == broker.utilities);
    CHECK(chain.edges == broker.edges);
}

TEST_CASE("pmax chain layout") {
    auto fix = gen_pmax_chain<Rational>(4, rat(2));
    const auto& eco = fix.economy;
    CHECK(eco.goods == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(eco.endowments(i, i) == rat(1));
        CHECK(eco.utilities(i, i) == rat(1));
        if (i + 1 < 4) CHECK(eco.utilities(i, i + 1) == rat(2));
    }
    CHECK_THROWS_AS(gen_pmax_chain<Rational>(1, rat(2)), std::domain_error);
    CHECK_THROWS_AS(gen_pmax_chain<Rational>(4, rat(1)), std::domain_error);
}

TEST_CASE("generated brokers pass the assumption gate, b = 0 fails it") {
    for (Rational b : {rat(1, 8), rat(1, 2), rat(2)})
        CHECK(check_assumptions(gen_broker<Rational>(b).economy).all_pass);
    for (Rational b : {rat(3, 4), rat(2)})
        CHECK(check_assumptions(gen_asymmetric_broker<Rational>(b).economy).all_pass);
    auto zero = gen_broker<Rational>(rat(1, 2)).economy;
    zero.resale_bounds.assign(3, rat(0));
    CHECK_FALSE(check_assumptions(zero).all_pass);
}
