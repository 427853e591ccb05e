#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphecon/economy.hpp"
#include "graphecon/oracles.hpp"

namespace graphecon {

struct VerifierEntry {
    std::string condition;
    int agent = -1;  // -1 for economy-wide conditions
    bool pass = true;
    double residual = 0.0;
    std::string residual_exact;
    std::string detail;
};

struct VerifierReport {
    bool pass = true;
    std::vector<VerifierEntry> entries;

    template <class T>
    void add(const std::string& condition, int agent, bool ok, const T& residual,
             const std::string& detail) {
        VerifierEntry e;
        e.condition = condition;
        e.agent = agent;
        e.pass = ok;
        e.residual = scalar_traits<T>::to_double(residual);
        e.residual_exact = scalar_traits<T>::to_string(residual);
        e.detail = detail;
        entries.push_back(std::move(e));
        pass = pass && ok;
    }

    std::string first_failure() const {
        for (const auto& e : entries)
            if (!e.pass) return e.condition + (e.agent >= 0 ? " (agent " + std::to_string(e.agent) + ")" : "") + (e.detail.empty() ? "" : ": " + e.detail);
        return "";
    }

    nlohmann::json to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& e : entries) {
            nlohmann::json je;
            je["condition"] = e.condition;
            if (e.agent >= 0) je["agent"] = e.agent;
            je["pass"] = e.pass;
            je["residual"] = e.residual;
            je["residual_exact"] = e.residual_exact;
            if (!e.detail.empty()) je["detail"] = e.detail;
            arr.push_back(je);
        }
        nlohmann::json doc;
        doc["pass"] = pass;
        doc["conditions"] = arr;
        return doc;
    }
};

namespace detail {

// Per-seller supply matrix e^j + Sum_l y^{jl} used by the zero-price
// saturation rule in IR checks.
template <class T>
Matrix<T> supply_matrix(const Economy<T>& eco, const TradePlan<T>& plan) {
    Matrix<T> s(eco.agents, eco.goods);
    for (int j = 0; j < eco.agents; ++j) {
        auto sj = supply_of(eco, plan, j);
        for (int k = 0; k < eco.goods; ++k) s(j, k) = sj[k];
    }
    return s;
}

}  // namespace detail

// Exact b-resale equilibrium check, Def. 3.2: local clearing, optimal
// arbitrage, individual rationality; tol = 0 demands exact equality.
template <class T>
VerifierReport verify_resale_equilibrium(const Economy<T>& eco, const PriceSystem<T>& prices,
                                         const TradePlan<T>& plan, const T& tol) {
    validate_plan(eco, plan);
    VerifierReport report;
    auto supplies = detail::supply_matrix(eco, plan);
    for (int i = 0; i < eco.agents; ++i) {
        auto out = supply_drawn(eco, plan, i);
        T worst(0);
        for (int k = 0; k < eco.goods; ++k) {
            T gap = out[k] - supplies(i, k);
            if (gap < T(0)) gap = -gap;
            if (gap > worst) worst = gap;
        }
        report.add("local_clearing", i, worst <= tol, worst,
                   worst <= tol ? "" : "supply and demand differ at agent " + std::to_string(i));

        auto resale = is_optimal_resale(eco, i, agent_plan_of(plan.y, i), prices,
                                        eco.resale_bounds[i], tol);
        report.add("optimal_arbitrage", i, resale.ok, resale.residual, resale.detail);

        T beta = budget_of(eco, prices, plan, i);
        auto ir = is_optimal_consumption(eco, i, agent_plan_of(plan.x, i), prices, beta, tol,
                                         &supplies);
        report.add("individual_rationality", i, ir.ok, ir.residual, ir.detail);
    }
    return report;
}

// KKO equilibrium check, Def. 2.3: the b = 0 special case; plans must have
// no resale at all.
template <class T>
VerifierReport verify_kko(const Economy<T>& eco, const PriceSystem<T>& prices,
                          const TradePlan<T>& plan) {
    if (!plan.y.empty())
        throw std::invalid_argument("verify_kko rejects plans with nonzero resale");
    Economy<T> kko = eco;
    kko.resale_bounds.assign(eco.agents, T(0));
    return verify_resale_equilibrium(kko, prices, plan, T(0));
}

// AD equilibrium check, Def. 2.1: complete graph, uniform prices, global
// clearing, IR at the common price vector.
template <class T>
VerifierReport verify_ad(const Economy<T>& eco, const PriceSystem<T>& prices,
                         const TradePlan<T>& plan) {
    for (int i = 0; i < eco.agents; ++i)
        for (int j = 0; j < eco.agents; ++j)
            if (!eco.adjacent(i, j))
                throw std::invalid_argument("verify_ad requires a complete trade graph");
    if (!plan.y.empty()) throw std::invalid_argument("verify_ad rejects plans with resale");
    validate_plan(eco, plan);
    VerifierReport report;

    T price_gap(0);
    for (int i = 1; i < eco.agents; ++i)
        for (int k = 0; k < eco.goods; ++k) {
            T gap = prices(i, k) - prices(0, k);
            if (gap < T(0)) gap = -gap;
            if (gap > price_gap) price_gap = gap;
        }
    report.add("uniform_prices", -1, price_gap == T(0), price_gap,
               price_gap == T(0) ? "" : "local prices differ between agents");

    T clear_gap(0);
    for (int k = 0; k < eco.goods; ++k) {
        T demand(0), endow(0);
        for (auto& [key, v] : plan.x.entries()) {
            auto [i, j, g] = key;
            (void)i;
            (void)j;
            if (g == k) demand += v;
        }
        for (int i = 0; i < eco.agents; ++i) endow += eco.endowments(i, k);
        T gap = demand - endow;
        if (gap < T(0)) gap = -gap;
        if (gap > clear_gap) clear_gap = gap;
    }
    report.add("market_clearing", -1, clear_gap == T(0), clear_gap,
               clear_gap == T(0) ? "" : "aggregate demand does not match aggregate endowment");

    auto supplies = detail::supply_matrix(eco, plan);
    for (int i = 0; i < eco.agents; ++i) {
        T beta(0);
        for (int k = 0; k < eco.goods; ++k) beta += prices(i, k) * eco.endowments(i, k);
        auto ir = is_optimal_consumption(eco, i, agent_plan_of(plan.x, i), prices, beta, T(0),
                                         &supplies);
        report.add("individual_rationality", i, ir.ok, ir.residual, ir.detail);
    }
    return report;
}

namespace detail {

// x^i <= some element of C_i(q, budget): support within the bang-per-buck
// argmax at prices q and spend at q within budget (no exhaustion demanded
// of a dominated plan). Zero-priced valued goods follow the saturation rule.
template <class T>
CheckResult<T> is_dominated_consumption(const Economy<T>& eco, int i, const AgentPlan<T>& plan,
                                        const PriceSystem<T>& q, const T& budget,
                                        const Matrix<T>* supplies) {
    CheckResult<T> res;
    auto view = consumption_view(eco, i, q);
    for (auto [j, k] : view.unbounded) {
        T supply = supplies ? (*supplies)(j, k) : eco.endowments(j, k);
        auto it = plan.find({j, k});
        T held = it == plan.end() ? T(0) : it->second;
        if (held < supply)
            res.fail(supply - held, "zero-priced valued good " + std::to_string(k) +
                                        " not saturated at agent " + std::to_string(j));
    }
    T spend(0);
    for (auto& [jk, v] : plan) {
        if (v == T(0)) continue;
        auto [j, k] = jk;
        spend += q(j, k) * v;
        if (q(j, k) == T(0)) continue;
        T r = view.ratio[{j, k}];
        if (r < view.max_ratio)
            res.fail(view.max_ratio == T(0) ? T(1) : (view.max_ratio - r) / view.max_ratio,
                     "pair (seller " + std::to_string(j) + ", good " + std::to_string(k) +
                         ") is outside the relaxed argmax");
    }
    if (spend > budget)
        res.fail(spend - budget, "relaxed-price spend exceeds the relaxed budget");
    return res;
}

// y^i <= some element of R_i(q, b): support within the profit argmax at q
// (positive spread) or within zero-spread pairs when no positive spread
// exists; credit/quantity at q within the bound.
template <class T>
CheckResult<T> is_dominated_resale(const Economy<T>& eco, int i, const AgentPlan<T>& plan,
                                   const PriceSystem<T>& q, const T& bound) {
    CheckResult<T> res;
    if (eco.resale_kind == ResaleKind::credit) {
        auto view = resale_view(eco, i, q);
        if (!view.unbounded.empty() && bound > T(0)) {
            if (!plan.empty()) res.fail(T(1), "R_i is empty at these prices (zero-price spread)");
            return res;
        }
        T credit(0);
        for (auto& [jk, v] : plan) credit += q(jk.first, jk.second) * v;
        if (credit > bound) res.fail(credit - bound, "relaxed credit exceeds the bound");
        bool spread = view.max_ratio > T(1);
        for (auto& [jk, v] : plan) {
            if (v == T(0)) continue;
            auto it = view.ratio.find(jk);
            T r = it == view.ratio.end() ? T(0) : it->second;
            T target = spread ? view.max_ratio : T(1);
            if (r < target)
                res.fail((target - r) / target, "resale pair (source " +
                                                    std::to_string(jk.first) + ", good " +
                                                    std::to_string(jk.second) +
                                                    ") is outside the relaxed argmax");
        }
    } else {
        T best(0);
        for (int k = 0; k < eco.goods; ++k)
            for (int j : eco.neighbor_list[i]) {
                if (j == i) continue;
                T profit = q(i, k) - q(j, k);
                if (profit > best) best = profit;
            }
        T qty(0);
        for (auto& [jk, v] : plan) qty += v;
        if (qty > bound) res.fail(qty - bound, "resale quantity exceeds the bound");
        for (auto& [jk, v] : plan) {
            if (v == T(0)) continue;
            T profit = q(i, jk.second) - q(jk.first, jk.second);
            T target = best > T(0) ? best : T(0);
            if (profit < target)
                res.fail(target - profit, "resale pair is outside the relaxed argmax");
        }
    }
    return res;
}

}  // namespace detail

// (1+eps)-approximate b-resale equilibrium check, Def. 5.2.
template <class T>
VerifierReport verify_approx_equilibrium(const Economy<T>& eco, const PriceSystem<T>& prices,
                                         const TradePlan<T>& plan, const T& eps) {
    if (!(eps > T(0))) throw std::invalid_argument("eps must be positive");
    validate_plan(eco, plan);
    VerifierReport report;
    T one_eps = T(1) + eps;
    auto supplies = detail::supply_matrix(eco, plan);

    // uniformly relaxed prices p/(1+eps) for the IR domination check
    PriceSystem<T> relaxed(eco.agents, eco.goods);
    for (int a = 0; a < eco.agents; ++a)
        for (int k = 0; k < eco.goods; ++k) relaxed(a, k) = prices(a, k) / one_eps;

    for (int i = 0; i < eco.agents; ++i) {
        auto out = supply_drawn(eco, plan, i);
        T worst(0);
        std::string clear_detail;
        for (int k = 0; k < eco.goods; ++k) {
            T sup = supplies(i, k);
            if (out[k] > sup) {
                T gap = out[k] - sup;
                if (gap > worst) {
                    worst = gap;
                    clear_detail = "demand drawn exceeds supply for good " + std::to_string(k);
                }
            }
            if (out[k] * one_eps < sup) {
                T gap = sup - out[k] * one_eps;
                if (gap > worst) {
                    worst = gap;
                    clear_detail = "good " + std::to_string(k) + " under-consumed beyond 1+eps";
                }
            }
        }
        report.add("approximate_clearing", i, worst == T(0), worst, clear_detail);

        // p-bar: agent i's own prices current, everyone else's divided by 1+eps
        PriceSystem<T> pbar = relaxed;
        for (int k = 0; k < eco.goods; ++k) pbar(i, k) = prices(i, k);
        auto arb = detail::is_dominated_resale(eco, i, agent_plan_of(plan.y, i), pbar,
                                               eco.resale_bounds[i]);
        report.add("approx_optimal_arbitrage", i, arb.ok, arb.residual, arb.detail);

        T beta_bar = budget_of(eco, pbar, plan, i);
        auto ir = detail::is_dominated_consumption(eco, i, agent_plan_of(plan.x, i), relaxed,
                                                   beta_bar, &supplies);
        report.add("approx_individual_rationality", i, ir.ok, ir.residual, ir.detail);

        T beta = budget_of(eco, prices, plan, i);
        T spend(0);
        for (int j : eco.neighbor_list[i])
            for (int k = 0; k < eco.goods; ++k) spend += prices(j, k) * plan.x.get(i, j, k);
        T bu_worst(0);
        std::string bu_detail;
        if (spend > beta) {
            bu_worst = spend - beta;
            bu_detail = "consumption spend exceeds budget";
        }
        if (spend * one_eps < beta && beta - spend * one_eps > bu_worst) {
            bu_worst = beta - spend * one_eps;
            bu_detail = "budget under-used beyond 1+eps";
        }
        report.add("approx_budget_use", i, bu_worst == T(0), bu_worst, bu_detail);
    }
    return report;
}

// --- brute-force oracle for desk-scale instances ---

template <class T>
struct GridCandidate {
    PriceSystem<T> prices;
    TradePlan<T> plan;
    T residual{0};
};

namespace detail {

// Availability-capped best responses at fixed prices: resale converges in
// <= m passes (profitable chains shorten each pass), then consumption
// spends budgets over argmax pairs while supply lasts. The residual is the
// worst normalized violation among clearing gaps, unused budget, and
// unused credit under a positive spread.
template <class T>
GridCandidate<T> grid_best_response(const Economy<T>& eco, const PriceSystem<T>& prices) {
    GridCandidate<T> cand;
    cand.prices = prices;
    int m = eco.agents, goods = eco.goods;
    SparseTensor<T>& y = cand.plan.y;
    for (int pass = 0; pass < m; ++pass) {
        for (int i = 0; i < m; ++i) {
            // recompute i's resale greedily, capped by current availability
            for (int j : eco.neighbor_list[i])
                for (int k = 0; k < goods; ++k) y.set(i, j, k, T(0));
            if (!(eco.resale_bounds[i] > T(0))) continue;
            auto view = resale_view(eco, i, prices);
            if (view.max_ratio <= T(1)) continue;
            T credit = eco.resale_bounds[i];
            for (auto [k, j] : view.pairs) {
                if (credit == T(0)) break;
                if (view.ratio[{j, k}] != view.max_ratio) continue;
                T avail = eco.endowments(j, k);
                for (int l : eco.neighbor_list[j]) avail += y.get(j, l, k);
                for (int l = 0; l < m; ++l) avail -= y.get(l, j, k);
                if (avail <= T(0)) continue;
                T qty = credit / prices(j, k);
                if (qty > avail) qty = avail;
                y.set(i, j, k, qty);
                credit -= qty * prices(j, k);
            }
        }
    }
    // remaining availability after resale commitments
    Matrix<T> avail(m, goods);
    for (int j = 0; j < m; ++j) {
        auto sup = supply_of(eco, cand.plan, j);
        for (int k = 0; k < goods; ++k) {
            avail(j, k) = sup[k];
            for (int l = 0; l < m; ++l) avail(j, k) -= cand.plan.y.get(l, j, k);
        }
    }
    T residual(0);
    for (int i = 0; i < m; ++i) {
        T beta = budget_of(eco, prices, cand.plan, i);
        auto view = consumption_view(eco, i, prices);
        T budget = beta;
        if (view.max_ratio > T(0)) {
            for (auto [k, j] : view.pairs) {
                if (budget == T(0)) break;
                if (view.ratio[{j, k}] != view.max_ratio) continue;
                if (avail(j, k) <= T(0)) continue;
                T qty = budget / prices(j, k);
                if (qty > avail(j, k)) qty = avail(j, k);
                cand.plan.x.add(i, j, k, qty);
                avail(j, k) -= qty;
                budget -= qty * prices(j, k);
            }
        }
        if (beta > T(0) && budget > T(0)) {
            T gap = budget / beta;
            if (gap > residual) residual = gap;
        }
        if (eco.resale_bounds[i] > T(0)) {
            auto rview = resale_view(eco, i, prices);
            if (rview.max_ratio > T(1)) {
                T credit(0);
                for (int j : eco.neighbor_list[i])
                    for (int k = 0; k < goods; ++k)
                        credit += prices(j, k) * cand.plan.y.get(i, j, k);
                T gap = (eco.resale_bounds[i] - credit) / eco.resale_bounds[i];
                if (gap > residual) residual = gap;
            }
        }
    }
    for (int i = 0; i < m; ++i) {
        auto out = supply_drawn(eco, cand.plan, i);
        auto sup = supply_of(eco, cand.plan, i);
        for (int k = 0; k < goods; ++k) {
            T gap = sup[k] - out[k];
            if (gap < T(0)) gap = -gap;
            T scale = sup[k] > T(1) ? sup[k] : T(1);
            gap = gap / scale;
            if (gap > residual) residual = gap;
        }
    }
    cand.residual = residual;
    return cand;
}

}  // namespace detail

// Grid search over normalized strictly-positive local price systems.
// Returns all grid points whose best-response residual is below tol,
// sorted by residual.
template <class T>
std::vector<GridCandidate<T>> brute_force_search(const Economy<T>& eco, int grid_depth,
                                                 const T& tol) {
    if (eco.agents > 3 || eco.goods > 2)
        throw std::invalid_argument("brute_force_search handles at most 3 agents and 2 goods");
    int cells = eco.agents * eco.goods;
    if (grid_depth < cells) throw std::invalid_argument("grid_depth must be at least agents*goods");
    double log_points = 0;
    for (int i = 1; i < cells; ++i)
        log_points += std::log2(double(grid_depth - cells + i) / i);
    if (log_points > 21) throw std::invalid_argument("grid too large");

    std::vector<GridCandidate<T>> hits;
    std::vector<int> counts(cells, 1);
    int remaining = grid_depth - cells;
    // enumerate compositions of grid_depth into `cells` positive parts
    std::vector<int> extra(cells, 0);
    auto evaluate = [&]() {
        PriceSystem<T> prices(eco.agents, eco.goods);
        for (int c = 0; c < cells; ++c)
            prices(c / eco.goods, c % eco.goods) = T(counts[c] + extra[c]) / T(grid_depth);
        auto cand = detail::grid_best_response(eco, prices);
        if (cand.residual < tol) hits.push_back(std::move(cand));
    };
    std::function<void(int, int)> enumerate = [&](int c, int leftover) {
        if (c == cells - 1) {
            extra[c] = leftover;
            evaluate();
            return;
        }
        for (int e = 0; e <= leftover; ++e) {
            extra[c] = e;
            enumerate(c + 1, leftover - e);
        }
    };
    enumerate(0, remaining);
    std::sort(hits.begin(), hits.end(),
              [](const GridCandidate<T>& a, const GridCandidate<T>& b) {
                  return a.residual < b.residual;
              });
    return hits;
}

}  // namespace graphecon
