#include <doctest.h>

#include <cstdio>
#include <random>

#include "graphecon/fixtures.hpp"
#include "graphecon/io.hpp"
#include "graphecon/random_economy.hpp"
#include "helpers.hpp"

using namespace graphecon;
using namespace graphecon::testing;

namespace {

Economy<Rational> path3() {
    return make_economy(3, 1, {{0, 1}, {1, 2}}, {{rat(1)}, {rat(1)}, {rat(1)}},
                        {{rat(1)}, {rat(1)}, {rat(1)}}, {rat(1), rat(1), rat(1)});
}

}  // namespace

TEST_CASE("neighbors are sorted and include self") {
    auto eco = path3();
    CHECK(neighbors(eco, 1) == std::vector<int>{0, 1, 2});
    CHECK(neighbors(eco, 0) == std::vector<int>{0, 1});
    auto complete = make_economy(4, 1, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}},
                                 {{rat(1)}, {rat(1)}, {rat(1)}, {rat(1)}},
                                 {{rat(1)}, {rat(1)}, {rat(1)}, {rat(1)}},
                                 {rat(0), rat(0), rat(0), rat(0)});
    CHECK(neighbors(complete, 0) == std::vector<int>{0, 1, 2, 3});
    CHECK_THROWS_AS(neighbors(eco, 5), EconomyError);
}

TEST_CASE("demand vector and outflow on the broker plan") {
    auto fix = gen_broker<Rational>(rat(1, 2));
    const auto& plan = fix.certificate->plan;
    // consumption drawn from agent 0 is the broker's purchase of 1-alpha;
    // the full outflow including resale is the whole endowment
    auto d0 = demand_vector(fix.economy, plan, 0);
    CHECK(d0[0] == rat(1, 2));
    CHECK(d0[1] == rat(0));
    auto out0 = supply_drawn(fix.economy, plan, 0);
    CHECK(out0[0] == rat(1));
    CHECK(out0[1] == rat(0));

    TradePlan<Rational> zero;
    auto dz = demand_vector(fix.economy, zero, 0);
    CHECK(dz == std::vector<Rational>{rat(0), rat(0)});

    auto two = make_economy(2, 1, {{0, 1}}, {{rat(1)}, {rat(0)}}, {{rat(1)}, {rat(1)}},
                            {rat(1), rat(1)});
    TradePlan<Rational> p2;
    p2.x.set(1, 0, 0, rat(2, 5));
    CHECK(demand_vector(two, p2, 0)[0] == rat(2, 5));
}

TEST_CASE("budget_of matches the resale-margin expression") {
    auto fix = gen_broker<Rational>(rat(1, 2));
    const auto& cert = *fix.certificate;
    // broker example: optimal profit (1-alpha) b / alpha = 1/2 at b=1/2
    CHECK(budget_of(fix.economy, cert.prices, cert.plan, 1) == rat(1, 2));

    SUBCASE("no resale reduces to endowment value") {
        TradePlan<Rational> plan;
        CHECK(budget_of(fix.economy, cert.prices, plan, 0) == rat(1, 2));
        CHECK(budget_of(fix.economy, cert.prices, plan, 2) == rat(1));
    }
    SUBCASE("uniform prices make resale spreads vanish") {
        PriceSystem<Rational> uniform(3, 2, rat(3));
        CHECK(budget_of(fix.economy, uniform, cert.plan, 1) ==
              budget_of(fix.economy, uniform, TradePlan<Rational>{}, 1));
    }
}

TEST_CASE("budget_of is linear in endowments and resale") {
    std::mt19937 rng(7);
    auto eco = gen_broker<Rational>(rat(1, 2)).economy;
    PriceSystem<Rational> prices(3, 2);
    std::uniform_int_distribution<int> d(1, 9);
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 2; ++k) prices(i, k) = rat(d(rng), d(rng));
    TradePlan<Rational> a, b;
    a.y.set(1, 0, 0, rat(d(rng), d(rng)));
    a.y.set(1, 2, 1, rat(d(rng), d(rng)));
    b.y.set(1, 0, 1, rat(d(rng), d(rng)));
    b.y.set(1, 2, 0, rat(d(rng), d(rng)));
    TradePlan<Rational> sum;
    for (auto& [key, v] : a.y.entries()) sum.y.add(std::get<0>(key), std::get<1>(key), std::get<2>(key), v);
    for (auto& [key, v] : b.y.entries()) sum.y.add(std::get<0>(key), std::get<1>(key), std::get<2>(key), v);
    TradePlan<Rational> none;
    Rational base = budget_of(eco, prices, none, 1);
    CHECK(budget_of(eco, prices, sum, 1) - base ==
          (budget_of(eco, prices, a, 1) - base) + (budget_of(eco, prices, b, 1) - base));
}

TEST_CASE("plan edge support is enforced") {
    auto eco = path3();
    TradePlan<Rational> plan;
    plan.x.set(0, 2, 0, rat(1));  // 0 and 2 are not adjacent
    CHECK_THROWS_AS(validate_plan(eco, plan), EconomyError);
    TradePlan<Rational> self;
    self.y.set(1, 1, 0, rat(1));  // resale from oneself
    CHECK_THROWS_AS(validate_plan(eco, self), EconomyError);
    TradePlan<Rational> fine;
    fine.x.set(1, 1, 0, rat(1));  // self consumption is allowed
    CHECK_NOTHROW(validate_plan(eco, fine));
}

TEST_CASE("economy file round trip") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        auto eco = random_economy_candidate<Rational>(rng, 5, 3);
        auto doc = economy_to_json(eco);
        auto back = economy_from_json<Rational>(doc);
        CHECK(back.agents == eco.agents);
        CHECK(back.goods == eco.goods);
        CHECK(back.edges == eco.edges);
        CHECK(back.endowments == eco.endowments);
        CHECK(back.utilities == eco.utilities);
        CHECK(back.resale_bounds == eco.resale_bounds);
    }
}

TEST_CASE("loader rejects invariant violations with a named field") {
    auto doc = economy_to_json(gen_broker<Rational>(rat(1, 2)).economy);
    doc["endowments"][1][0] = "-1/2";
    try {
        economy_from_json<Rational>(doc);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("agent 1") != std::string::npos);
    }
    auto doc2 = economy_to_json(gen_broker<Rational>(rat(1, 2)).economy);
    doc2["utilities"][2] = {0, 0};
    CHECK_THROWS_AS(economy_from_json<Rational>(doc2), ParseError);
}

TEST_CASE("broker fixture file has the documented shape") {
    auto fix = gen_broker<Rational>(rat(1, 2));
    auto doc = economy_to_json(fix.economy);
    CHECK(doc["agents"] == 3);
    CHECK(doc["goods"] == 2);
    CHECK(doc["edges"].size() == 2);
    CHECK(doc["resale_kind"] == "credit");
    CHECK(doc["numeric_mode"] == "exact");
    CHECK(scalar_from_json<Rational>(doc["endowments"][0][0], "e") == rat(1));
}

TEST_CASE("rationals serialize as num/den strings and parse back") {
    CHECK(rational_to_string(rat(-3, 4)) == "-3/4");
    CHECK(rational_from_string("-3/4") == rat(-3, 4));
    CHECK(rational_from_string("1.25") == rat(5, 4));
    CHECK(rational_from_string("7") == rat(7));
    CHECK_THROWS_AS(rational_from_string("x/y"), std::invalid_argument);
    CHECK(scalar_to_json(rat(1, 3)) == nlohmann::json("1/3"));
    CHECK(scalar_to_json(rat(4)) == nlohmann::json(4));
}

TEST_CASE("certificate file round trip") {
    auto fix = gen_asymmetric_broker<Rational>(rat(3, 4));
    auto doc = certificate_to_json(*fix.certificate);
    auto back = certificate_from_json<Rational>(doc, 3, 2);
    CHECK(back.prices == fix.certificate->prices);
    CHECK(back.plan == fix.certificate->plan);
}
