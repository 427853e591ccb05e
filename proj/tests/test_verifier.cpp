#include <doctest.h>

#include <random>

#include "graphecon/fixtures.hpp"
#include "graphecon/verifier.hpp"
#include "helpers.hpp"

using namespace graphecon;
using namespace graphecon::testing;

TEST_CASE("exact verifier accepts the analytic fixtures") {
    auto broker = gen_broker<Rational>(rat(1, 2));
    CHECK(verify_resale_equilibrium(broker.economy, broker.certificate->prices,
                                    broker.certificate->plan, rat(0))
              .pass);
    auto asym = gen_asymmetric_broker<Rational>(rat(3, 4));
    CHECK(verify_resale_equilibrium(asym.economy, asym.certificate->prices,
                                    asym.certificate->plan, rat(0))
              .pass);
}

TEST_CASE("zeroing the broker's resale breaks clearing and arbitrage") {
    auto fix = gen_broker<Rational>(rat(1, 2));
    auto broken = fix.certificate->plan;
    for (auto [j, k] : {std::pair{0, 0}, std::pair{2, 1}}) broken.y.set(1, j, k, rat(0));
    auto report = verify_resale_equilibrium(fix.economy, fix.certificate->prices, broken, rat(0));
    CHECK_FALSE(report.pass);
    bool clearing_failed = false, arbitrage_failed = false;
    for (const auto& e : report.entries) {
        if (e.condition == "local_clearing" && !e.pass) clearing_failed = true;
        if (e.condition == "optimal_arbitrage" && e.agent == 1 && !e.pass) arbitrage_failed = true;
    }
    CHECK(clearing_failed);
    CHECK(arbitrage_failed);
}

TEST_CASE("KKO verifier rejects plans with resale") {
    auto fix = gen_broker<Rational>(rat(1, 2));
    CHECK_THROWS_AS(verify_kko(fix.economy, fix.certificate->prices, fix.certificate->plan),
                    std::invalid_argument);
}

TEST_CASE("KKO equals the b = 0 resale check") {
    auto fix = gen_epsilon_kko_broker<Rational>(rat(1, 10));
    auto kko = verify_kko(fix.economy, fix.certificate->prices, fix.certificate->plan);
    Economy<Rational> zeroed = fix.economy;
    zeroed.resale_bounds.assign(3, rat(0));
    auto resale = verify_resale_equilibrium(zeroed, fix.certificate->prices,
                                            fix.certificate->plan, rat(0));
    CHECK(kko.pass == resale.pass);
    CHECK(kko.pass);
}

TEST_CASE("unpadded broker candidates fail the KKO check") {
    // the paper's non-existence argument: spot-check natural candidates
    auto eco = gen_broker<Rational>(rat(1, 2)).economy;
    // candidate: agents consume their own endowments at uniform prices
    PriceSystem<Rational> uniform(3, 2, rat(1));
    TradePlan<Rational> self;
    self.x.set(0, 0, 0, rat(1));
    self.x.set(2, 2, 1, rat(1));
    CHECK_FALSE(verify_kko(eco, uniform, self).pass);
    // candidate: swap through zero prices on the endowed goods
    PriceSystem<Rational> zeros(3, 2, rat(1));
    zeros(0, 0) = rat(0);
    zeros(2, 1) = rat(0);
    CHECK_FALSE(verify_kko(eco, zeros, self).pass);
}

TEST_CASE("AD verifier on the two-agent swap") {
    auto eco = make_economy(2, 2, {{0, 1}}, {{rat(1), rat(0)}, {rat(0), rat(1)}},
                            {{rat(0), rat(1)}, {rat(1), rat(0)}}, {rat(0), rat(0)});
    PriceSystem<Rational> prices(2, 2, rat(1));
    TradePlan<Rational> swap;
    swap.x.set(0, 1, 1, rat(1));
    swap.x.set(1, 0, 0, rat(1));
    CHECK(verify_ad(eco, prices, swap).pass);

    SUBCASE("unequal prices break IR or clearing") {
        PriceSystem<Rational> skew(2, 2, rat(1));
        skew(0, 1) = rat(2);
        skew(1, 1) = rat(2);
        // budget 2 for agent 1 now: the same swap underspends
        CHECK_FALSE(verify_ad(eco, skew, swap).pass);
    }
    SUBCASE("non-complete graphs are rejected") {
        auto path = gen_broker<Rational>(rat(1, 2)).economy;
        TradePlan<Rational> empty;
        PriceSystem<Rational> p3(3, 2, rat(1));
        CHECK_THROWS_AS(verify_ad(path, p3, empty), std::invalid_argument);
    }
    SUBCASE("non-uniform local prices are flagged") {
        PriceSystem<Rational> skew(2, 2, rat(1));
        skew(1, 0) = rat(3, 2);
        auto report = verify_ad(eco, skew, swap);
        CHECK_FALSE(report.pass);
    }
}

TEST_CASE("exact equilibria pass the approximate check for every eps") {
    auto fix = gen_broker<Rational>(rat(1, 2));
    for (Rational eps : {rat(1, 100), rat(1, 10), rat(1)})
        CHECK(verify_approx_equilibrium(fix.economy, fix.certificate->prices,
                                        fix.certificate->plan, eps)
                  .pass);
}

TEST_CASE("scaling consumption down beyond 1+eps fails approximate clearing") {
    auto fix = gen_broker<Rational>(rat(1, 2));
    Rational eps = rat(1, 10);
    auto plan = fix.certificate->plan;
    // scale all consumption down by (1 + 2 eps)
    TradePlan<Rational> scaled;
    for (auto& [key, v] : plan.x.entries())
        scaled.x.set(std::get<0>(key), std::get<1>(key), std::get<2>(key),
                     v / (rat(1) + rat(2) * eps));
    scaled.y = plan.y;
    auto report = verify_approx_equilibrium(fix.economy, fix.certificate->prices, scaled, eps);
    CHECK_FALSE(report.pass);
    bool clearing = false;
    for (const auto& e : report.entries)
        if (e.condition == "approximate_clearing" && !e.pass) clearing = true;
    CHECK(clearing);
}

TEST_CASE("brute force search finds the broker equilibrium region") {
    auto fix = gen_broker<Rational>(rat(1, 2));
    // residual at the best grid point shrinks as the grid refines
    Rational last(1000);
    for (int depth : {6, 12, 24}) {
        auto hits = brute_force_search(fix.economy, depth, rat(1000));
        REQUIRE_FALSE(hits.empty());
        CHECK(hits.front().residual <= last);
        last = hits.front().residual;
    }
    // at depth 24 the best point is near the analytic prices (a,1)/(1,1)/(1,a)
    auto hits = brute_force_search(fix.economy, 24, rat(1, 10));
    REQUIRE_FALSE(hits.empty());
    const auto& best = hits.front();
    Rational scale = best.prices(1, 0);  // broker price of good 0
    CHECK(scalar_traits<Rational>::to_double(best.prices(0, 0) / scale) == doctest::Approx(0.5).epsilon(0.35));
}

TEST_CASE("brute force on degenerate economies") {
    auto lone = make_economy(1, 1, {}, {{rat(1)}}, {{rat(1)}}, {rat(0)});
    auto hits = brute_force_search(lone, 4, rat(1, 100));
    CHECK(hits.size() == 1);  // every (normalized) price point clears

    auto swap = make_economy(2, 2, {{0, 1}}, {{rat(1), rat(0)}, {rat(0), rat(1)}},
                             {{rat(0), rat(1)}, {rat(1), rat(0)}}, {rat(0), rat(0)});
    auto hits2 = brute_force_search(swap, 8, rat(1, 100));
    CHECK_FALSE(hits2.empty());
    for (const auto& h : hits2) {
        // uniform-price grid points clear the swap
        CHECK(h.prices(0, 0) == h.prices(1, 0));
        CHECK(h.prices(0, 1) == h.prices(1, 1));
    }
}

TEST_CASE("verifier report serializes with residuals") {
    auto fix = gen_broker<Rational>(rat(1, 2));
    auto report = verify_resale_equilibrium(fix.economy, fix.certificate->prices,
                                            fix.certificate->plan, rat(0));
    auto doc = report.to_json();
    CHECK(doc["pass"] == true);
    CHECK(doc["conditions"].size() == 9);  // three conditions per agent
}
