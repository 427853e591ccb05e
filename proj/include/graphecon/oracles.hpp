#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "graphecon/economy.hpp"

namespace graphecon {

struct UnboundedDemandError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnboundedArbitrageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Per-agent plan slice: (seller j, good k) -> quantity.
template <class T>
using AgentPlan = std::map<std::pair<int, int>, T>;

template <class T>
AgentPlan<T> agent_plan_of(const SparseTensor<T>& t, int i) {
    AgentPlan<T> plan;
    for (auto& [key, v] : t.entries()) {
        auto [buyer, j, k] = key;
        if (buyer == i) plan[{j, k}] = v;
    }
    return plan;
}

template <class T>
T plan_spend(const AgentPlan<T>& plan, const PriceSystem<T>& prices) {
    T total(0);
    for (auto& [jk, v] : plan) total += prices(jk.first, jk.second) * v;
    return total;
}

template <class T>
T plan_total(const AgentPlan<T>& plan) {
    T total(0);
    for (auto& [jk, v] : plan) total += v;
    return total;
}

// --- consumption: maximize bang-per-buck u^i_k / p^j_k over j ≃ i ---

template <class T>
struct ConsumptionView {
    // candidate pairs with positive price, ascending (k, j)
    std::vector<std::pair<int, int>> pairs;  // stored as (k, j)
    std::map<std::pair<int, int>, T> ratio;  // keyed (j, k)
    T max_ratio{0};
    bool any_positive_utility = false;
    // zero-priced goods the agent values (unbounded demand signals)
    std::vector<std::pair<int, int>> unbounded;  // (j, k)
};

template <class T>
ConsumptionView<T> consumption_view(const Economy<T>& eco, int i, const PriceSystem<T>& prices) {
    ConsumptionView<T> view;
    for (int k = 0; k < eco.goods; ++k) {
        if (eco.utilities(i, k) > T(0)) view.any_positive_utility = true;
        for (int j : eco.neighbor_list[i]) {
            if (prices(j, k) == T(0)) {
                if (eco.utilities(i, k) > T(0)) view.unbounded.emplace_back(j, k);
                continue;
            }
            T r = eco.utilities(i, k) / prices(j, k);
            view.pairs.emplace_back(k, j);
            view.ratio[{j, k}] = r;
            if (r > view.max_ratio) view.max_ratio = r;
        }
    }
    return view;
}

template <class T>
bool in_consumption_argmax(const ConsumptionView<T>& view, int j, int k) {
    auto it = view.ratio.find({j, k});
    return it != view.ratio.end() && it->second == view.max_ratio && view.max_ratio > T(0);
}

// Representative element of C_i(p, budget) after pinning `pins` (which
// must lie in the argmax; used by the WGS oracle). The unpinned budget
// goes to maximal bang-per-buck pairs: all of it to the first pair in
// ascending (k, j) order, or an equal money split over the maximal pairs
// of each distinct good when `spread` is set (the auction uses the spread
// form so tied goods are demanded evenly rather than serially).
template <class T>
AgentPlan<T> pinned_consumption_demand(const Economy<T>& eco, int i, const PriceSystem<T>& prices,
                                       const T& budget, const AgentPlan<T>& pins,
                                       bool spread = false) {
    eco.check_agent(i);
    if (budget < T(0)) throw std::invalid_argument("negative budget");
    auto view = consumption_view(eco, i, prices);
    if (budget == T(0) && pins.empty()) return {};  // normalized demand
    if (!view.unbounded.empty())
        throw UnboundedDemandError("agent " + std::to_string(i) + " values good " +
                                   std::to_string(view.unbounded.front().second) +
                                   " offered at zero price by agent " +
                                   std::to_string(view.unbounded.front().first));
    if (view.max_ratio == T(0)) {
        if (budget == T(0)) return {};
        throw UnboundedDemandError("agent " + std::to_string(i) +
                                   " cannot spend a positive budget: no valued good has a "
                                   "positive price in its neighborhood");
    }
    AgentPlan<T> plan;
    T remaining = budget;
    for (auto& [jk, v] : pins) {
        if (!in_consumption_argmax(view, jk.first, jk.second)) continue;
        T cost = prices(jk.first, jk.second) * v;
        if (cost > remaining) break;  // cannot afford the pin; precondition violated upstream
        plan[jk] = v;
        remaining -= cost;
    }
    if (remaining > T(0)) {
        // first argmax source per distinct good, ascending (k, j)
        std::vector<std::pair<int, int>> heads;  // (k, j)
        for (auto [k, j] : view.pairs) {
            if (view.ratio[{j, k}] != view.max_ratio) continue;
            if (heads.empty() || heads.back().first != k) heads.emplace_back(k, j);
        }
        if (!spread) heads.resize(1);
        T share = remaining / T(static_cast<int>(heads.size()));
        for (auto [k, j] : heads) plan[{j, k}] += share / prices(j, k);
    }
    return plan;
}

template <class T>
AgentPlan<T> linear_consumption_demand(const Economy<T>& eco, int i, const PriceSystem<T>& prices,
                                       const T& budget) {
    return pinned_consumption_demand(eco, i, prices, budget, {});
}

// WGS oracle call for consumption (Def. 5.1 shape): prices and budget may
// only rise; the returned plan dominates old_plan on unchanged-price pairs.
template <class T>
struct OracleCall {
    PriceSystem<T> old_prices;
    PriceSystem<T> new_prices;
    T old_budget{0};
    T new_budget{0};
    AgentPlan<T> old_plan;
};

template <class T>
AgentPlan<T> wgs_consumption_oracle(const Economy<T>& eco, int i, const OracleCall<T>& call) {
    for (int a = 0; a < eco.agents; ++a)
        for (int k = 0; k < eco.goods; ++k)
            if (call.new_prices(a, k) < call.old_prices(a, k))
                throw std::invalid_argument("WGS oracle requires new_prices >= old_prices");
    if (call.new_budget < call.old_budget)
        throw std::invalid_argument("WGS oracle requires new_budget >= old_budget");
    AgentPlan<T> pins;
    for (auto& [jk, v] : call.old_plan)
        if (call.new_prices(jk.first, jk.second) == call.old_prices(jk.first, jk.second))
            pins[jk] = v;
    return pinned_consumption_demand(eco, i, call.new_prices, call.new_budget, pins, true);
}

// --- resale: credit bound maximizes profit-per-credit p^i_k/p^j_k - 1 ---

template <class T>
struct ResaleView {
    std::vector<std::pair<int, int>> pairs;    // (k, j), ascending, positive source price
    std::map<std::pair<int, int>, T> ratio;    // keyed (j, k): p^i_k / p^j_k
    T max_ratio{0};                            // over candidate pairs; profit = ratio - 1
    std::vector<std::pair<int, int>> unbounded;  // (j, k) with p^j_k = 0 < p^i_k
};

template <class T>
ResaleView<T> resale_view(const Economy<T>& eco, int i, const PriceSystem<T>& prices) {
    ResaleView<T> view;
    for (int k = 0; k < eco.goods; ++k) {
        for (int j : eco.neighbor_list[i]) {
            if (j == i) continue;  // feasible resale ranges over j ~ i
            if (prices(j, k) == T(0)) {
                if (prices(i, k) > T(0)) view.unbounded.emplace_back(j, k);
                continue;
            }
            T r = prices(i, k) / prices(j, k);
            view.pairs.emplace_back(k, j);
            view.ratio[{j, k}] = r;
            if (r > view.max_ratio) view.max_ratio = r;
        }
    }
    return view;
}

template <class T>
bool in_resale_argmax(const ResaleView<T>& view, int j, int k) {
    auto it = view.ratio.find({j, k});
    return it != view.ratio.end() && it->second == view.max_ratio;
}

// Representative element of R_i(p, b_i) for credit bound resale. The
// optional request is a per-good quantity vector; among profit-maximizing
// plans the oracle allocates credit to requested goods first (scaled
// proportionally when the credit line is short), then dumps leftover
// credit on the first argmax pair in (k, j) order.
template <class T>
AgentPlan<T> credit_resale_demand(const Economy<T>& eco, int i, const PriceSystem<T>& prices,
                                  const T& credit, const std::vector<T>* request = nullptr) {
    eco.check_agent(i);
    if (credit < T(0)) throw std::invalid_argument("negative credit");
    auto view = resale_view(eco, i, prices);
    if (!view.unbounded.empty() && credit > T(0))
        throw UnboundedArbitrageError("agent " + std::to_string(i) + " can buy good " +
                                      std::to_string(view.unbounded.front().second) +
                                      " at zero price from agent " +
                                      std::to_string(view.unbounded.front().first) +
                                      " and resell at a positive price");
    if (credit == T(0) || view.max_ratio <= T(1)) return {};  // normalized; no positive spread
    AgentPlan<T> plan;
    T remaining = credit;
    if (request) {
        // All argmax pairs of a given good share the same source price.
        std::map<int, std::pair<int, T>> good_source;  // k -> (first argmax j, price)
        for (auto [k, j] : view.pairs)
            if (view.ratio[{j, k}] == view.max_ratio && !good_source.count(k))
                good_source[k] = {j, prices(j, k)};
        T request_cost(0);
        for (auto& [k, sp] : good_source)
            if (k < static_cast<int>(request->size()) && (*request)[k] > T(0))
                request_cost += (*request)[k] * sp.second;
        if (request_cost > T(0)) {
            T scale = request_cost <= remaining ? T(1) : remaining / request_cost;
            for (auto& [k, sp] : good_source) {
                if (k >= static_cast<int>(request->size()) || (*request)[k] <= T(0)) continue;
                T qty = (*request)[k] * scale;
                if (qty == T(0)) continue;
                plan[{sp.first, k}] += qty;
                remaining -= qty * sp.second;
            }
        }
    }
    if (remaining > T(0)) {
        for (auto [k, j] : view.pairs) {
            if (view.ratio[{j, k}] != view.max_ratio) continue;
            plan[{j, k}] += remaining / prices(j, k);
            remaining = T(0);
            break;
        }
    }
    return plan;
}

// Commodity bound resale: maximize per-unit profit p^i_k - p^j_k subject
// to total quantity <= b_i. Ties in the top profit tier are split equally
// (the broker footnote's b/2-per-side convention); lower tiers are never
// reached since quantities are not otherwise capped.
template <class T>
AgentPlan<T> commodity_resale_demand(const Economy<T>& eco, int i, const PriceSystem<T>& prices,
                                     const T& bound) {
    eco.check_agent(i);
    if (bound < T(0)) throw std::invalid_argument("negative bound");
    if (bound == T(0)) return {};
    std::vector<std::pair<int, int>> best;  // (k, j)
    T best_profit(0);
    for (int k = 0; k < eco.goods; ++k) {
        for (int j : eco.neighbor_list[i]) {
            if (j == i) continue;
            T profit = prices(i, k) - prices(j, k);
            if (profit > best_profit) {
                best_profit = profit;
                best.clear();
            }
            if (profit == best_profit && best_profit > T(0)) best.emplace_back(k, j);
        }
    }
    AgentPlan<T> plan;
    if (best.empty()) return plan;
    T share = bound / T(static_cast<int>(best.size()));
    for (auto [k, j] : best) plan[{j, k}] += share;
    return plan;
}

// --- optimality checks (membership with multiplicative slack) ---

template <class T>
struct CheckResult {
    bool ok = true;
    T residual{0};  // 0 when clean; ratio gap or budget overshoot otherwise
    std::string detail;

    void fail(const T& r, const std::string& d) {
        ok = false;
        if (r > residual) residual = r;
        if (detail.empty()) detail = d;
    }
};

// Individual rationality check: spends within budget, only argmax pairs
// (within multiplicative slack), budget exhausted when slack = 0 and the
// agent values something. A zero-priced good the agent values makes its
// demand unbounded: the plan is rejected unless the agent already drains
// that seller's whole supply of the good (supplies defaults to endowments
// when the caller has no resale-augmented view).
template <class T>
CheckResult<T> is_optimal_consumption(const Economy<T>& eco, int i, const AgentPlan<T>& plan,
                                      const PriceSystem<T>& prices, const T& budget, const T& slack,
                                      const Matrix<T>* supplies = nullptr) {
    CheckResult<T> res;
    auto view = consumption_view(eco, i, prices);
    T spend(0);
    for (auto& [jk, v] : plan) {
        if (v < T(0)) res.fail(-v, "negative quantity");
        spend += prices(jk.first, jk.second) * v;
    }
    if (spend > budget * (T(1) + slack))
        res.fail(spend - budget, "agent " + std::to_string(i) + " overspends budget");
    for (auto [j, k] : view.unbounded) {
        T supply = supplies ? (*supplies)(j, k) : eco.endowments(j, k);
        auto it = plan.find({j, k});
        T held = it == plan.end() ? T(0) : it->second;
        if (held < supply)
            res.fail(supply - held,
                     "agent " + std::to_string(i) + " demands unbounded amounts of good " +
                         std::to_string(k) + " at agent " + std::to_string(j) + "'s zero price");
    }
    for (auto& [jk, v] : plan) {
        if (v == T(0)) continue;
        auto [j, k] = jk;
        if (prices(j, k) == T(0)) continue;  // free goods never hurt optimality
        T r = view.ratio[{j, k}];
        if (r * (T(1) + slack) < view.max_ratio) {
            T gap = view.max_ratio == T(0) ? T(1) : (view.max_ratio - r) / view.max_ratio;
            res.fail(gap, "agent " + std::to_string(i) + " buys dominated pair (seller " +
                              std::to_string(j) + ", good " + std::to_string(k) + ")");
        }
    }
    if (slack == T(0) && view.any_positive_utility && view.max_ratio > T(0) && spend != budget)
        res.fail(budget - spend, "agent " + std::to_string(i) + " leaves budget unspent");
    else if (slack > T(0) && spend * (T(1) + slack) < budget)
        res.fail((budget - spend) / (budget == T(0) ? T(1) : budget),
                 "agent " + std::to_string(i) + " leaves budget unspent");
    return res;
}

// Optimal arbitrage check. Credit kind: support within the profit-per-credit
// argmax (price ratios within slack), credit fully used when a strictly
// positive spread exists, credit never exceeded. When the best spread is
// zero, any amount of zero-spread resale is optimal. Commodity kind uses
// per-unit profits and the quantity bound instead (additive slack).
template <class T>
CheckResult<T> is_optimal_resale(const Economy<T>& eco, int i, const AgentPlan<T>& plan,
                                 const PriceSystem<T>& prices, const T& bound, const T& slack) {
    CheckResult<T> res;
    for (auto& [jk, v] : plan) {
        if (v < T(0)) res.fail(-v, "negative quantity");
        if (jk.first == i) res.fail(v, "agent " + std::to_string(i) + " resells from itself");
    }
    if (eco.resale_kind == ResaleKind::credit) {
        auto view = resale_view(eco, i, prices);
        if (!view.unbounded.empty() && bound > T(0)) {
            res.fail(T(1), "agent " + std::to_string(i) +
                               " has unbounded arbitrage at a zero price; no optimal plan exists");
            return res;
        }
        T credit(0);
        for (auto& [jk, v] : plan) credit += prices(jk.first, jk.second) * v;
        if (credit > bound * (T(1) + slack))
            res.fail(credit - bound, "agent " + std::to_string(i) + " exceeds its credit line");
        bool spread = view.max_ratio > T(1);
        for (auto& [jk, v] : plan) {
            if (v == T(0)) continue;
            auto [j, k] = jk;
            auto it = view.ratio.find({j, k});
            T r = it == view.ratio.end() ? T(0) : it->second;
            T target = spread ? view.max_ratio : T(1);
            if (r * (T(1) + slack) < target)
                res.fail((target - r) / target,
                         "agent " + std::to_string(i) + " resells a dominated pair (source " +
                             std::to_string(j) + ", good " + std::to_string(k) + ")");
        }
        if (spread && bound > T(0) && credit * (T(1) + slack) < bound)
            res.fail((bound - credit) / bound,
                     "agent " + std::to_string(i) +
                         " leaves credit unused despite a positive spread");
    } else {
        T best_profit(0);
        for (int k = 0; k < eco.goods; ++k)
            for (int j : eco.neighbor_list[i]) {
                if (j == i) continue;
                T profit = prices(i, k) - prices(j, k);
                if (profit > best_profit) best_profit = profit;
            }
        T qty(0);
        for (auto& [jk, v] : plan) qty += v;
        if (qty > bound + slack) res.fail(qty - bound, "resale quantity exceeds the bound");
        for (auto& [jk, v] : plan) {
            if (v == T(0)) continue;
            auto [j, k] = jk;
            T profit = prices(i, k) - prices(j, k);
            T target = best_profit > T(0) ? best_profit : T(0);
            if (profit + slack < target)
                res.fail(target - profit, "agent " + std::to_string(i) +
                                              " resells a dominated pair (source " +
                                              std::to_string(j) + ", good " + std::to_string(k) +
                                              ")");
        }
        if (best_profit > T(0) && bound > T(0) && qty + slack < bound)
            res.fail(bound - qty, "agent " + std::to_string(i) +
                                      " leaves resale capacity unused despite a positive spread");
    }
    return res;
}

}  // namespace graphecon
