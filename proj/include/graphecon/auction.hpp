#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphecon/assumptions.hpp"
#include "graphecon/economy.hpp"
#include "graphecon/oracles.hpp"
#include "graphecon/verifier.hpp"

namespace graphecon {

struct EngineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AssumptionGateError : EngineError {
    using EngineError::EngineError;
};
struct NonTerminationError : EngineError {
    using EngineError::EngineError;
};
struct InvariantViolation : EngineError {
    using EngineError::EngineError;
};

enum class Instrumentation { off, sampled, full };

struct TraceRow {
    long long seq;
    long long round;
    std::string event;
    int agent;
    int counterparty;
    int good;
    std::string amount;
    std::string price;
    std::string surplus_after;
    std::string tau;
};

struct PriceRow {
    long long round;
    int agent;
    int good;
    std::string price;
};

template <class T>
struct RunStats {
    long long rounds_completed = 0;
    long long raise_price_calls = 0;
    long long oracle_calls_demand = 0;
    long long oracle_calls_resale = 0;
    T p_max{1};
    std::vector<double> round_surplus;
    std::vector<double> round_tau;
    std::vector<PriceRow> price_rows;
    long long rebook_events = 0;
    long long invariant_checks = 0;

    nlohmann::json to_json() const {
        nlohmann::json doc;
        doc["rounds"] = rounds_completed;
        doc["raise_price_calls"] = raise_price_calls;
        doc["oracle_calls_demand"] = oracle_calls_demand;
        doc["oracle_calls_resale"] = oracle_calls_resale;
        doc["p_max"] = scalar_traits<T>::to_double(p_max);
        doc["p_max_exact"] = scalar_traits<T>::to_string(p_max);
        doc["round_surplus"] = round_surplus;
        doc["round_tau"] = round_tau;
        doc["rebook_events"] = rebook_events;
        doc["invariant_checks"] = invariant_checks;
        return doc;
    }
};

template <class T>
struct RunResult {
    PriceSystem<T> prices;
    TradePlan<T> plan;
    std::string termination_reason;  // "exact-local-clearing" | "surplus-threshold"
    RunStats<T> stats;
    bool commodity_warning = false;
    std::vector<TraceRow> trace;
};

template <class T>
struct EngineOptions {
    T eps{0};
    Instrumentation instrument = Instrumentation::sampled;
    std::optional<long long> max_raises;  // overrides the price-cap guard
    std::vector<int> order;               // round-robin order; default ascending
    bool force = false;                   // bypass the assumption gate
    bool collect_trace = false;
    long long debug_event_cap = 0;        // abort with a trace tail when exceeded (tests)
    T float_tol = scalar_traits<T>::default_tol();
};

// Ascending-price auction for (1+eps)-approximate b-resale equilibria.
// Prices start at 1 and only ever move by a factor (1+eps). Bookings live
// in four buckets: consumption/resale at the current price (cn, rn) or at
// the immediately previous price (co, ro). The surplus s_i is maintained
// incrementally equal to the closed-form expression over the ledger and
// audited in instrumented runs.
template <class T>
class AuctionEngine {
public:
    AuctionEngine(const Economy<T>& eco, EngineOptions<T> opt) : eco_(eco), opt_(std::move(opt)) {
        if (!(opt_.eps > T(0))) throw EngineError("eps must be positive");
        one_eps_ = T(1) + opt_.eps;
        if (opt_.order.empty()) {
            for (int i = 0; i < eco_.agents; ++i) opt_.order.push_back(i);
        }
        if (static_cast<int>(opt_.order.size()) != eco_.agents)
            throw EngineError("schedule must list every agent exactly once");
    }

    RunResult<T> run() {
        auto gate = check_assumptions(eco_);
        bool commodity_warning = eco_.resale_kind == ResaleKind::commodity;
        if (!gate.pass_for_engine && !opt_.force) {
            std::string witness;
            for (const auto& v : gate.verdicts)
                if (!v.pass) {
                    witness = "assumption " + std::to_string(v.id) + ": " + v.witness;
                    break;
                }
            throw AssumptionGateError("economy fails the existence assumptions (" + witness +
                                      "); rerun with force to proceed anyway");
        }
        init_state();
        long long guard_cap = raise_guard_cap();

        bool done = false;
        std::string reason;
        while (!done) {
            // a state that already satisfies Def 5.2 is a valid output even
            // when residual lattice surpluses would keep the loop raising
            // prices forever (see the decisions ledger)
            if (state_verifies()) {
                reason = clearing_exact() ? "exact-local-clearing" : "approximate-equilibrium";
                break;
            }
            long long events_at_round_start = event_seq_;
            for (int idx = 0; idx < eco_.agents && !done; ++idx) {
                if (check_stop(reason)) {
                    done = true;
                    break;
                }
                if (stats_.raise_price_calls > guard_cap)
                    throw NonTerminationError(
                        "raise_price guard tripped: " + std::to_string(stats_.raise_price_calls) +
                        " raises exceed the configured cap");
                int i = opt_.order[idx];
                if (pos(s_[i])) turn(i);
            }
            if (done) break;
            ++stats_.rounds_completed;
            stats_.round_surplus.push_back(scalar_traits<T>::to_double(total_surplus()));
            stats_.round_tau.push_back(scalar_traits<T>::to_double(tau()));
            if (opt_.instrument == Instrumentation::sampled) check_invariants("round");
            if (event_seq_ == events_at_round_start) {
                for (int i = 0; i < eco_.agents; ++i)
                    if (pos(s_[i])) rebook_agent(i);
                if (event_seq_ == events_at_round_start) {
                    if (check_stop(reason)) break;
                    throw NonTerminationError("no progress in a full round with surplus " +
                                              scalar_traits<T>::to_string(total_surplus()));
                }
            }
        }

        RunResult<T> result;
        result.prices = prices_;
        result.plan = current_plan();
        result.termination_reason = reason;
        result.stats = stats_;
        result.commodity_warning = commodity_warning;
        result.trace = std::move(trace_);
        return result;
    }

    // exposed for tests: recompute the Appendix-style closed form from the ledger
    T closed_form_surplus(int i) const {
        T cf(0);
        for (int k = 0; k < eco_.goods; ++k) cf += prices_(i, k) * eco_.endowments(i, k);
        for (auto& [key, v] : ro_.entries()) {
            auto [a, j, k] = key;
            if (a != i) continue;
            cf += prices_(i, k) * v - old_price(j, k) * v;
        }
        for (auto& [key, v] : rn_.entries()) {
            auto [a, j, k] = key;
            if (a != i) continue;
            cf += prices_(i, k) * v - prices_(j, k) * v;
        }
        for (auto& [key, v] : co_.entries()) {
            auto [a, j, k] = key;
            if (a != i) continue;
            cf -= old_price(j, k) * v;
        }
        for (auto& [key, v] : cn_.entries()) {
            auto [a, j, k] = key;
            if (a != i) continue;
            cf -= prices_(j, k) * v;
        }
        return cf;
    }

private:
    Economy<T> eco_;
    EngineOptions<T> opt_;
    T one_eps_{1};

    PriceSystem<T> prices_;
    SparseTensor<T> co_, cn_, ro_, rn_;
    std::vector<T> s_;
    std::vector<std::vector<std::pair<int, int>>> cons_stack_;  // LIFO (j, k) per agent
    Matrix<int> raise_counts_;
    RunStats<T> stats_;
    std::vector<TraceRow> trace_;
    long long event_seq_ = 0;
    T tau_prev_{0};
    bool tau_window_open_ = false;
    long long verify_cache_seq_ = -1;
    bool verify_cache_result_ = false;

    T old_price(int j, int k) const { return prices_(j, k) / one_eps_; }

    void init_state() {
        prices_ = PriceSystem<T>(eco_.agents, eco_.goods, T(1));
        s_.assign(eco_.agents, T(0));
        cons_stack_.assign(eco_.agents, {});
        raise_counts_ = Matrix<int>(eco_.agents, eco_.goods, 0);
        for (int i = 0; i < eco_.agents; ++i)
            for (int k = 0; k < eco_.goods; ++k) s_[i] += eco_.endowments(i, k);
        for (int i = 0; i < eco_.agents; ++i)
            for (int k = 0; k < eco_.goods; ++k)
                stats_.price_rows.push_back({0, i, k, scalar_traits<T>::to_string(T(1))});
    }

    long long raise_guard_cap() const {
        if (opt_.max_raises) return *opt_.max_raises;
        if constexpr (scalar_traits<T>::exact) {
            return static_cast<long long>(1) << 40;  // effectively unbounded
        } else {
            double steps = 64.0 / std::log2(scalar_traits<T>::to_double(one_eps_));
            return static_cast<long long>(eco_.agents) * eco_.goods *
                       static_cast<long long>(steps + 1) +
                   16;
        }
    }

    // --- derived ledger views (desk-scale: recomputed by scanning) ---

    T resale_in(int j, int k) const {
        T total(0);
        for (auto& [key, v] : ro_.entries()) {
            auto [a, src, g] = key;
            if (a == j && g == k) total += v;
        }
        for (auto& [key, v] : rn_.entries()) {
            auto [a, src, g] = key;
            if (a == j && g == k) total += v;
        }
        return total;
    }

    T booked_out(int j, int k) const {
        T total(0);
        auto scan = [&](const SparseTensor<T>& t) {
            for (auto& [key, v] : t.entries()) {
                auto [buyer, seller, g] = key;
                if (seller == j && g == k) total += v;
            }
        };
        scan(co_);
        scan(cn_);
        scan(ro_);
        scan(rn_);
        return total;
    }

    T unassigned(int j, int k) const {
        return eco_.endowments(j, k) + resale_in(j, k) - booked_out(j, k);
    }

    // booked value of agent i's old-price purchases (both kinds)
    T old_value(int i) const {
        T total(0);
        for (auto& [key, v] : co_.entries()) {
            auto [a, j, k] = key;
            if (a == i) total += old_price(j, k) * v;
        }
        for (auto& [key, v] : ro_.entries()) {
            auto [a, j, k] = key;
            if (a == i) total += old_price(j, k) * v;
        }
        return total;
    }

    T tau() const {
        T total(0);
        for (int i = 0; i < eco_.agents; ++i) total += old_value(i);
        return total;
    }

    T spendable(int i) const { return s_[i] - opt_.eps * old_value(i); }

    T booked_resale_value(int i) const {
        T total(0);
        for (auto& [key, v] : ro_.entries()) {
            auto [a, j, k] = key;
            if (a == i) total += old_price(j, k) * v;
        }
        for (auto& [key, v] : rn_.entries()) {
            auto [a, j, k] = key;
            if (a == i) total += prices_(j, k) * v;
        }
        return total;
    }

    T beta(int i) const {
        T b(0);
        for (int k = 0; k < eco_.goods; ++k) b += prices_(i, k) * eco_.endowments(i, k);
        for (int j : eco_.neighbor_list[i])
            for (int k = 0; k < eco_.goods; ++k)
                b += (prices_(i, k) - prices_(j, k)) *
                     (ro_.get(i, j, k) + rn_.get(i, j, k));
        return b;
    }

    T total_surplus() const {
        T total(0);
        for (const T& v : s_) total += v;
        return total;
    }

    AgentPlan<T> consumption_holdings(int i) const {
        AgentPlan<T> plan;
        for (auto& [key, v] : co_.entries()) {
            auto [a, j, k] = key;
            if (a == i) plan[{j, k}] += v;
        }
        for (auto& [key, v] : cn_.entries()) {
            auto [a, j, k] = key;
            if (a == i) plan[{j, k}] += v;
        }
        return plan;
    }

    AgentPlan<T> resale_holdings(int i) const {
        AgentPlan<T> plan;
        for (auto& [key, v] : ro_.entries()) {
            auto [a, j, k] = key;
            if (a == i) plan[{j, k}] += v;
        }
        for (auto& [key, v] : rn_.entries()) {
            auto [a, j, k] = key;
            if (a == i) plan[{j, k}] += v;
        }
        return plan;
    }

    TradePlan<T> current_plan() const {
        TradePlan<T> plan;
        for (auto& [key, v] : co_.entries()) plan.x.add(std::get<0>(key), std::get<1>(key), std::get<2>(key), v);
        for (auto& [key, v] : cn_.entries()) plan.x.add(std::get<0>(key), std::get<1>(key), std::get<2>(key), v);
        for (auto& [key, v] : ro_.entries()) plan.y.add(std::get<0>(key), std::get<1>(key), std::get<2>(key), v);
        for (auto& [key, v] : rn_.entries()) plan.y.add(std::get<0>(key), std::get<1>(key), std::get<2>(key), v);
        return plan;
    }

    // --- trace ---
    // state-changing events bump event_seq_ (the progress measure);
    // bookkeeping rows (demand_query, reschedule visits, turn_end) do not

    void trace_row(const char* type, int agent, int counterparty, int good, const T& amount,
                   const T& price) {
        if (!opt_.collect_trace) return;
        trace_.push_back({event_seq_, stats_.rounds_completed, type, agent, counterparty, good,
                          scalar_traits<T>::to_string(amount), scalar_traits<T>::to_string(price),
                          agent >= 0 ? scalar_traits<T>::to_string(s_[agent]) : "",
                          scalar_traits<T>::to_string(tau())});
    }

    void trace_event(const char* type, int agent, int counterparty, int good, const T& amount,
                     const T& price) {
        ++event_seq_;
        trace_row(type, agent, counterparty, good, amount, price);
        if (opt_.debug_event_cap > 0 && event_seq_ > opt_.debug_event_cap) {
            std::string tail;
            size_t start = trace_.size() > 60 ? trace_.size() - 60 : 0;
            for (size_t idx = start; idx < trace_.size(); ++idx) {
                const auto& r = trace_[idx];
                tail += "\n  #" + std::to_string(r.seq) + " " + r.event + " agent=" +
                        std::to_string(r.agent) + " cp=" + std::to_string(r.counterparty) +
                        " good=" + std::to_string(r.good) + " amt=" + r.amount + " p=" + r.price +
                        " s=" + r.surplus_after;
            }
            throw NonTerminationError("debug event cap hit" + tail);
        }
    }

    // --- ledger mutations (every path that moves goods or money) ---

    void book_consumption(int i, int j, int k, const T& amt) {
        if (!pos(amt)) return;
        cn_.add(i, j, k, amt);
        s_[i] -= prices_(j, k) * amt;
        cons_stack_[i].push_back({j, k});
        trace_event("assign", i, j, k, amt, prices_(j, k));
    }

    void book_resale(int i, int j, int k, const T& amt) {
        if (!pos(amt)) return;
        rn_.add(i, j, k, amt);
        s_[i] += (prices_(i, k) - prices_(j, k)) * amt;
        trace_event("assign", i, j, k, amt, prices_(j, k));
    }

    enum class Bucket { co, cn, ro, rn };

    // removes a consumption booking, refunding the booked price; freed
    // units left unsold at an unendowed seller unwind to their source
    void strip_consumption(int i, int j, int k, const T& amt, Bucket b,
                           bool release_slack = true) {
        if (amt <= T(0)) return;
        if (b == Bucket::co) {
            co_.add(i, j, k, -amt);
            s_[i] += old_price(j, k) * amt;
        } else {
            cn_.add(i, j, k, -amt);
            s_[i] += prices_(j, k) * amt;
        }
        trace_event("update_resale", i, j, k, amt,
                    b == Bucket::co ? old_price(j, k) : prices_(j, k));
        if (release_slack) release_excess_resale(j, k, 0);
    }

    // removes a resale booking (margin debit); caller must then reconcile
    // agent i's downstream via update_resale(i, k, amt)
    void strip_resale(int i, int j, int k, const T& amt, Bucket b, bool release_slack = true) {
        if (amt <= T(0)) return;
        T cost = b == Bucket::ro ? old_price(j, k) : prices_(j, k);
        if (b == Bucket::ro)
            ro_.add(i, j, k, -amt);
        else
            rn_.add(i, j, k, -amt);
        s_[i] -= (prices_(i, k) - cost) * amt;
        trace_event("update_resale", i, j, k, amt, cost);
        if (release_slack) release_excess_resale(j, k, 0);
    }

    // an unendowed agent never keeps unassigned goods: resale bought for a
    // bid that fell through returns to its source (recursively)
    void release_excess_resale(int j, int k, int depth) {
        if (depth > eco_.agents + 1) throw InvariantViolation("release recursion too deep");
        if (eco_.endowments(j, k) > T(0)) return;
        T slack = unassigned(j, k);
        if (!pos(slack)) return;
        bool stripped = false;
        for (Bucket b : {Bucket::rn, Bucket::ro}) {
            for (int src = 0; src < eco_.agents && slack > T(0); ++src) {
                T held = b == Bucket::rn ? rn_.get(j, src, k) : ro_.get(j, src, k);
                if (held <= T(0)) continue;
                T take = held < slack ? held : slack;
                strip_resale(j, src, k, take, b, false);
                stripped = true;
                slack -= take;
                release_excess_resale(src, k, depth + 1);
            }
            if (slack <= T(0)) break;
        }
        // the released bookings carried margin that may already be spent
        if (stripped) enforce_nonnegative(j);
    }

    // strips whatever part of holder's committed good k now exceeds its
    // supply: consumption buyers first, then resale buyers recursively.
    void update_resale(int holder, int k, int depth = 0) {
        if (depth > eco_.agents + 1) throw InvariantViolation("update_resale recursion too deep");
        T excess = booked_out(holder, k) - (eco_.endowments(holder, k) + resale_in(holder, k));
        if (!pos(excess)) return;
        for (int i = 0; i < eco_.agents && excess > T(0); ++i) {
            for (Bucket b : {Bucket::co, Bucket::cn}) {
                if (excess <= T(0)) break;
                T held = b == Bucket::co ? co_.get(i, holder, k) : cn_.get(i, holder, k);
                if (held <= T(0)) continue;
                T take = held < excess ? held : excess;
                strip_consumption(i, holder, k, take, b);
                excess -= take;
            }
        }
        for (int i = 0; i < eco_.agents && excess > T(0); ++i) {
            for (Bucket b : {Bucket::ro, Bucket::rn}) {
                if (excess <= T(0)) break;
                T held = b == Bucket::ro ? ro_.get(i, holder, k) : rn_.get(i, holder, k);
                if (held <= T(0)) continue;
                T take = held < excess ? held : excess;
                strip_resale(i, holder, k, take, b);
                excess -= take;
                update_resale(i, k, depth + 1);
                enforce_nonnegative(i);
            }
        }
        if (pos(excess))
            throw InvariantViolation("update_resale could not reconcile supply at agent " +
                                     std::to_string(holder));
    }

    // LIFO consumption unassignment until the agent's surplus budget is
    // nonnegative again
    void enforce_nonnegative(int i) {
        while (s_[i] < T(0) && !scalar_eq(s_[i], T(0))) {
            if (cons_stack_[i].empty())
                throw InvariantViolation("agent " + std::to_string(i) +
                                         " has negative surplus and nothing to unassign");
            auto [j, k] = cons_stack_[i].back();
            T deficit = -s_[i];
            bool progressed = false;
            for (Bucket b : {Bucket::cn, Bucket::co}) {
                T held = b == Bucket::cn ? cn_.get(i, j, k) : co_.get(i, j, k);
                if (held <= T(0)) continue;
                T refund = b == Bucket::cn ? prices_(j, k) : old_price(j, k);
                T need = deficit / refund;
                T take = held < need ? held : need;
                if (take <= T(0)) break;
                strip_consumption(i, j, k, take, b);
                progressed = true;
                break;
            }
            if (!progressed) cons_stack_[i].pop_back();
        }
    }

    // pays down the old-price discount (re-pricing holdings to current) as
    // far as the surplus allows, so stale-price bookings cannot hold the
    // surplus above zero forever; never drives s negative
    void rebook_agent(int i) {
        std::vector<std::tuple<int, int, T, Bucket>> entries;
        for (auto& [key, v] : ro_.entries()) {
            auto [a, j, k] = key;
            if (a == i) entries.emplace_back(j, k, v, Bucket::ro);
        }
        for (auto& [key, v] : co_.entries()) {
            auto [a, j, k] = key;
            if (a == i) entries.emplace_back(j, k, v, Bucket::co);
        }
        if (entries.empty()) return;
        bool any = false;
        for (auto& [j, k, v, b] : entries) {
            if (!pos(s_[i])) break;
            T unit_cost = opt_.eps * old_price(j, k);
            T amt = v;
            T pay = unit_cost * amt;
            if (pay > s_[i]) {
                amt = s_[i] / unit_cost;
                pay = s_[i];
            }
            if (b == Bucket::co) {
                // re-pricing consumption also raises its booked value;
                // stay within the budget headroom
                T headroom = beta(i) - booked_consumption_value(i);
                if (!pos(headroom)) continue;
                T cap = headroom / unit_cost;
                if (amt > cap) {
                    amt = cap;
                    pay = unit_cost * amt;
                }
            }
            if (!pos(amt)) continue;
            if (b == Bucket::co) {
                co_.add(i, j, k, -amt);
                cn_.add(i, j, k, amt);
            } else {
                ro_.add(i, j, k, -amt);
                rn_.add(i, j, k, amt);
            }
            s_[i] -= pay;
            any = true;
            trace_event("rebook", i, j, k, amt, prices_(j, k));
        }
        if (any) ++stats_.rebook_events;
    }

    // --- the four procedures ---

    using Requests = std::map<std::pair<int, int>, T>;  // (seller j, good k) -> amount

    bool requests_pending(const Requests& r) const {
        for (auto& [jk, v] : r)
            if (pos(v)) return true;
        return false;
    }

    // target: true = consumption of `buyer`, false = resale of `buyer`
    void assign_from_pool(int buyer, bool consumption, Requests& reqs) {
        for (auto& [jk, want] : reqs) {
            if (!pos(want)) continue;
            auto [j, k] = jk;
            T avail = unassigned(j, k);
            if (!pos(avail)) continue;
            T a = want < avail ? want : avail;
            a = cap_affordable(buyer, consumption, j, k, a);
            if (!pos(a)) continue;
            if (consumption)
                book_consumption(buyer, j, k, a);
            else
                book_resale(buyer, j, k, a);
            want -= a;
        }
    }

    T cap_affordable(int buyer, bool consumption, int j, int k, T a) const {
        if (consumption) {
            T sp = spendable(buyer);
            if (!pos(sp)) return T(0);
            T limit = sp / prices_(j, k);
            if (a > limit) a = limit;
        } else {
            T free_credit = eco_.resale_bounds[buyer] - booked_resale_value(buyer);
            if (!pos(free_credit)) return T(0);
            T limit = free_credit / prices_(j, k);
            if (a > limit) a = limit;
        }
        return a;
    }

    void outbid_holders(int buyer, bool consumption, Requests& reqs) {
        for (auto& [jk, want] : reqs) {
            if (!pos(want)) continue;
            auto [j, k] = jk;
            for (int victim = 0; victim < eco_.agents && pos(want); ++victim) {
                if (victim == buyer) continue;
                T c = co_.get(victim, j, k);
                if (pos(c)) {
                    T take = c < want ? c : want;
                    take = cap_affordable(buyer, consumption, j, k, take);
                    if (pos(take)) {
                        strip_consumption(victim, j, k, take, Bucket::co, false);
                        trace_row("outbid", buyer, victim, k, take, prices_(j, k));
                        if (consumption)
                            book_consumption(buyer, j, k, take);
                        else
                            book_resale(buyer, j, k, take);
                        want -= take;
                    }
                }
                if (!pos(want)) break;
                T d = ro_.get(victim, j, k);
                if (pos(d)) {
                    T take = d < want ? d : want;
                    take = cap_affordable(buyer, consumption, j, k, take);
                    if (pos(take)) {
                        strip_resale(victim, j, k, take, Bucket::ro, false);
                        trace_row("outbid", buyer, victim, k, take, prices_(j, k));
                        if (consumption)
                            book_consumption(buyer, j, k, take);
                        else
                            book_resale(buyer, j, k, take);
                        update_resale(victim, k);
                        enforce_nonnegative(victim);
                        want -= take;
                    }
                }
            }
        }
    }

    // reseller j's incremental plan for a per-good request: targets only
    // profit-per-credit argmax pairs and only free credit; existing
    // bookings count as already satisfied
    struct Replan {
        bool profitable = false;
        std::map<int, std::vector<int>> sources;  // good -> argmax sources ascending
        std::map<int, T> target;                  // good -> additional quantity
    };

    Replan resale_replan(int j, const std::vector<T>& request) {
        ++stats_.oracle_calls_resale;
        Replan rp;
        if (!(eco_.resale_bounds[j] > T(0))) return rp;
        auto view = resale_view(eco_, j, prices_);
        if (view.max_ratio <= T(1)) return rp;
        rp.profitable = true;
        for (auto [k, src] : view.pairs)
            if (view.ratio[{src, k}] == view.max_ratio) rp.sources[k].push_back(src);
        T free_credit = eco_.resale_bounds[j] - booked_resale_value(j);
        if (!pos(free_credit)) return rp;
        T request_cost(0);
        for (auto& [k, srcs] : rp.sources) {
            if (k >= static_cast<int>(request.size()) || !pos(request[k])) continue;
            request_cost += request[k] * prices_(srcs.front(), k);
        }
        if (!pos(request_cost)) return rp;
        T scale = request_cost <= free_credit ? T(1) : free_credit / request_cost;
        for (auto& [k, srcs] : rp.sources) {
            if (k >= static_cast<int>(request.size()) || !pos(request[k])) continue;
            rp.target[k] = request[k] * scale;
        }
        return rp;
    }

    // procure `amount` of good k into j's resale plan from the given
    // argmax sources; returns the quantity obtained
    T procure_for_resale(int j, int k, const T& amount, const std::vector<int>& sources, int depth,
                         std::set<int>& visited) {
        T got(0);
        for (int src : sources) {
            if (!pos(amount - got)) break;
            Requests one{{{src, k}, amount - got}};
            assign_from_pool(j, false, one);
            got += (amount - got) - one[{src, k}];
        }
        for (int src : sources) {
            if (!pos(amount - got)) break;
            Requests one{{{src, k}, amount - got}};
            outbid_holders(j, false, one);
            got += (amount - got) - one[{src, k}];
        }
        // recursive reschedule through the sources' own resale; measure what
        // actually landed in j's books (nested raises may also trim them)
        if (pos(amount - got) && depth < eco_.agents) {
            Requests rem;
            for (int src : sources) rem[{src, k}] = amount - got;
            T before = resale_in(j, k);
            reschedule(j, false, rem, depth + 1, visited);
            T after = resale_in(j, k);
            if (after > before) got += after - before;
        }
        return got;
    }

    bool raise_allowed(int j, int k) const {
        if (!scalar_eq(unassigned(j, k), T(0))) return false;
        for (int i = 0; i < eco_.agents; ++i)
            if (co_.get(i, j, k) > T(0) || ro_.get(i, j, k) > T(0)) return false;
        return true;
    }

    // neighbors of `buyer` try to satisfy leftover requests via resale;
    // shortfalls raise prices
    void reschedule(int buyer, bool consumption, Requests& reqs, int depth,
                    std::set<int>& visited) {
        if (depth > eco_.agents + 1) throw InvariantViolation("reschedule recursion too deep");
        for (int j : eco_.neighbor_list[buyer]) {
            std::vector<T> request(eco_.goods, T(0));
            bool any = false;
            for (auto& [jk, v] : reqs)
                if (jk.first == j && pos(v)) {
                    request[jk.second] = v;
                    any = true;
                }
            if (!any) continue;
            if (visited.count(j)) continue;
            visited.insert(j);
            auto rp = resale_replan(j, request);
            trace_row("reschedule", buyer, j, -1, T(0), T(0));
            for (int k = 0; k < eco_.goods; ++k) {
                if (!pos(request[k])) continue;
                T want = reqs[{j, k}];
                if (!pos(want)) continue;
                T target(0);
                auto it = rp.target.find(k);
                if (it != rp.target.end()) target = it->second;
                if (target > want) target = want;
                target = cap_affordable(buyer, consumption, j, k, target);
                T given(0);
                if (pos(target)) {
                    procure_for_resale(j, k, target, rp.sources[k], depth, visited);
                    // nested raises may have trimmed j's books; hand over
                    // whatever is actually free and affordable now
                    T give = unassigned(j, k);
                    if (give > want) give = want;
                    give = cap_affordable(buyer, consumption, j, k, give);
                    if (pos(give)) {
                        if (consumption)
                            book_consumption(buyer, j, k, give);
                        else
                            book_resale(buyer, j, k, give);
                        reqs[{j, k}] -= give;
                        given = give;
                    }
                }
                if (pos(want - given) && raise_allowed(j, k)) raise_price(j, k);
            }
            visited.erase(j);
        }
    }

    void raise_price(int j, int k) {
        // call-site condition: everything j has of k is assigned at the
        // current price
        if (!(unassigned(j, k) == T(0)) && !scalar_eq(unassigned(j, k), T(0)))
            throw InvariantViolation("raise_price with unassigned supply at (" +
                                     std::to_string(j) + ", " + std::to_string(k) + ")");
        for (int i = 0; i < eco_.agents; ++i)
            if (co_.get(i, j, k) > T(0) || ro_.get(i, j, k) > T(0))
                throw InvariantViolation("raise_price with old-price bookings at (" +
                                         std::to_string(j) + ", " + std::to_string(k) + ")");

        T p_old = prices_(j, k);
        s_[j] += opt_.eps * p_old * (eco_.endowments(j, k) + resale_in(j, k));
        // bucket shift: current-price bookings become old-price bookings
        for (int i = 0; i < eco_.agents; ++i) {
            T c = cn_.get(i, j, k);
            if (c > T(0)) {
                cn_.set(i, j, k, T(0));
                co_.add(i, j, k, c);
            }
            T r = rn_.get(i, j, k);
            if (r > T(0)) {
                rn_.set(i, j, k, T(0));
                ro_.add(i, j, k, r);
            }
        }
        prices_(j, k) = p_old * one_eps_;
        if (prices_(j, k) > stats_.p_max) stats_.p_max = prices_(j, k);
        ++stats_.raise_price_calls;
        raise_counts_(j, k) += 1;
        stats_.price_rows.push_back(
            {stats_.rounds_completed, j, k, scalar_traits<T>::to_string(prices_(j, k))});
        trace_event("raise_price", j, -1, k, T(0), prices_(j, k));
        tau_window_open_ = false;

        // consumption holdings at the raised pair may have left the
        // holder's bang-per-buck argmax; release them at the booked price
        for (int i = 0; i < eco_.agents; ++i) {
            T held = co_.get(i, j, k);
            if (held <= T(0)) continue;
            auto view = consumption_view(eco_, i, prices_);
            if (!in_consumption_argmax(view, j, k))
                strip_consumption(i, j, k, held, Bucket::co);
        }

        // neighbors with resale capacity re-check their books against the
        // new optimum; bookings outside the argmax (or unprofitable even at
        // relaxed prices) unwind
        for (int nj : eco_.neighbor_list[j]) {
            if (!(eco_.resale_bounds[nj] > T(0))) continue;
            ++stats_.oracle_calls_resale;
            reconcile_resale(nj);
        }
    }

    void reconcile_resale(int agent) {
        auto view = resale_view(eco_, agent, prices_);
        bool viable = view.max_ratio * one_eps_ > T(1);
        auto holdings = resale_holdings(agent);
        for (auto& [jk, v] : holdings) {
            if (v <= T(0)) continue;
            auto [src, k] = jk;
            bool keep = viable && in_resale_argmax(view, src, k);
            if (keep) continue;
            T r = ro_.get(agent, src, k);
            if (r > T(0)) strip_resale(agent, src, k, r, Bucket::ro);
            T n = rn_.get(agent, src, k);
            if (n > T(0)) strip_resale(agent, src, k, n, Bucket::rn);
            update_resale(agent, k);
            enforce_nonnegative(agent);
        }
        budget_repair(agent);
    }

    T booked_consumption_value(int i) const {
        T booked(0);
        for (auto& [key, v] : co_.entries()) {
            auto [a, j, k] = key;
            if (a == i) booked += old_price(j, k) * v;
        }
        for (auto& [key, v] : cn_.entries()) {
            auto [a, j, k] = key;
            if (a == i) booked += prices_(j, k) * v;
        }
        return booked;
    }

    // a raise on a source devalues the margins backing past purchases;
    // unassign consumption LIFO until booked spend fits the budget again
    void budget_repair(int i) {
        while (true) {
            T over = booked_consumption_value(i) - beta(i);
            if (!pos(over)) break;
            if (cons_stack_[i].empty())
                throw InvariantViolation("agent " + std::to_string(i) +
                                         " spends beyond budget with nothing to unassign");
            auto [j, k] = cons_stack_[i].back();
            bool progressed = false;
            for (Bucket b : {Bucket::cn, Bucket::co}) {
                T held = b == Bucket::cn ? cn_.get(i, j, k) : co_.get(i, j, k);
                if (held <= T(0)) continue;
                T unit = b == Bucket::cn ? prices_(j, k) : old_price(j, k);
                T need = over / unit;
                T take = held < need ? held : need;
                if (take <= T(0)) break;
                strip_consumption(i, j, k, take, b);
                progressed = true;
                break;
            }
            if (!progressed) cons_stack_[i].pop_back();
        }
    }

    // --- the per-agent turn ---

    void turn(int i) {
        int guard = 0;
        while (pos(s_[i])) {
            if (++guard > 100000)
                throw NonTerminationError(
                    "turn of agent " + std::to_string(i) + " does not settle (s=" +
                    scalar_traits<T>::to_string(s_[i]) + ", spendable=" +
                    scalar_traits<T>::to_string(spendable(i)) + ", raises=" +
                    std::to_string(stats_.raise_price_calls) + ", events=" +
                    std::to_string(event_seq_) + ")");
            if (!pos(spendable(i))) {
                rebook_agent(i);  // surplus is stale-price discount; pay it down
                if (!pos(s_[i]) || !pos(spendable(i))) break;
            }
            ++stats_.oracle_calls_demand;
            auto holdings = consumption_holdings(i);
            auto plan = pinned_consumption_demand(eco_, i, prices_, beta(i), holdings, true);
            trace_row("demand_query", i, -1, -1, T(0), T(0));
            Requests reqs;
            for (auto& [jk, v] : plan) {
                auto it = holdings.find(jk);
                T held = it == holdings.end() ? T(0) : it->second;
                if (pos(v - held)) reqs[jk] = v - held;
            }
            if (!requests_pending(reqs)) {
                rebook_agent(i);  // plan already held; only stale discounts remain
                break;
            }
            long long seq0 = event_seq_;
            assign_from_pool(i, true, reqs);
            if (requests_pending(reqs)) outbid_holders(i, true, reqs);
            if (requests_pending(reqs)) {
                std::set<int> visited;
                reschedule(i, true, reqs, 0, visited);
            }
            if (event_seq_ == seq0) break;
        }
        trace_row("turn_end", i, -1, -1, T(0), T(0));
        if (opt_.instrument == Instrumentation::full) check_invariants("turn");
    }

    bool scalar_eq(const T& a, const T& b) const {
        return scalar_traits<T>::eq(a, b, opt_.float_tol);
    }

    // meaningfully positive: float mode ignores roundoff dust
    bool pos(const T& v) const { return v > opt_.float_tol; }

    bool clearing_exact() const {
        for (int i = 0; i < eco_.agents; ++i)
            for (int k = 0; k < eco_.goods; ++k)
                if (!scalar_eq(booked_out(i, k), eco_.endowments(i, k) + resale_in(i, k)))
                    return false;
        return true;
    }

    bool state_verifies() {
        if (verify_cache_seq_ == event_seq_) return verify_cache_result_;
        verify_cache_seq_ = event_seq_;
        auto report = verify_approx_equilibrium(eco_, prices_, current_plan(), opt_.eps);
        verify_cache_result_ = report.pass;
        return verify_cache_result_;
    }

    bool check_stop(std::string& reason) {
        T total = total_surplus();
        T e_min(0), b_min(0);
        threshold_parts(e_min, b_min);
        T zeta = termination_zeta(e_min, b_min);
        T threshold = opt_.eps / one_eps_ * zeta;
        bool clr = clearing_exact();
        bool below = total <= threshold;
        if (below && clr) {
            reason = "exact-local-clearing";
            return true;
        }
        bool any_pos = false;
        for (const T& v : s_)
            if (pos(v)) any_pos = true;
        if (!any_pos) {
            reason = clr ? "exact-local-clearing" : "surplus-threshold";
            return true;
        }
        if (below && state_verifies()) {
            reason = "surplus-threshold";
            return true;
        }
        return false;
    }

    void threshold_parts(T& e_min, T& b_min) const {
        bool has_e = false, has_b = false;
        for (int i = 0; i < eco_.agents; ++i) {
            for (int k = 0; k < eco_.goods; ++k) {
                const T& e = eco_.endowments(i, k);
                if (e > T(0) && (!has_e || e < e_min)) {
                    e_min = e;
                    has_e = true;
                }
            }
            const T& b = eco_.resale_bounds[i];
            if (b > T(0) && (!has_b || b < b_min)) {
                b_min = b;
                has_b = true;
            }
        }
        if (!has_e) e_min = T(1);
        if (!has_b) b_min = T(0);
    }

    T termination_zeta(const T& e_min, const T& b_min) const {
        if (b_min > T(0)) {
            T scaled = opt_.eps / one_eps_ * b_min;
            return scaled < e_min ? scaled : e_min;
        }
        return e_min;
    }

    // --- instrumented invariants ---

    void check_invariants(const char* where) {
        ++stats_.invariant_checks;
        std::string ctx = std::string(" [") + where + ", event " + std::to_string(event_seq_) + "]";
        // surplus audit against the closed form
        for (int i = 0; i < eco_.agents; ++i) {
            if (!scalar_eq(s_[i], closed_form_surplus(i)))
                throw InvariantViolation("surplus audit failed for agent " + std::to_string(i) +
                                         ctx);
            if (s_[i] < T(0) && !scalar_eq(s_[i], T(0)))
                throw InvariantViolation("negative surplus at agent " + std::to_string(i) + ctx);
        }
        // Invariant 3/4: no over-allocation; equality for unendowed goods
        for (int j = 0; j < eco_.agents; ++j)
            for (int k = 0; k < eco_.goods; ++k) {
                T slack = unassigned(j, k);
                if (slack < T(0) && !scalar_eq(slack, T(0)))
                    throw InvariantViolation("over-allocated good " + std::to_string(k) +
                                             " at agent " + std::to_string(j) + ctx);
                if (eco_.endowments(j, k) == T(0) && !scalar_eq(slack, T(0)))
                    throw InvariantViolation("unendowed agent " + std::to_string(j) +
                                             " holds unassigned good " + std::to_string(k) + ctx);
            }
        // Invariant 1: resale within the relaxed-price optimum
        for (int i = 0; i < eco_.agents; ++i) {
            auto holdings = resale_holdings(i);
            if (holdings.empty()) continue;
            auto view = resale_view(eco_, i, prices_);
            T pbar_credit(0);
            for (auto& [jk, v] : holdings) {
                if (v <= T(0)) continue;
                if (!in_resale_argmax(view, jk.first, jk.second))
                    throw InvariantViolation("invariant 1: agent " + std::to_string(i) +
                                             " resells outside the argmax" + ctx);
                pbar_credit += prices_(jk.first, jk.second) / one_eps_ * v;
            }
            if (!(view.max_ratio * one_eps_ > T(1)))
                throw InvariantViolation("invariant 1: agent " + std::to_string(i) +
                                         " resells with no relaxed-price profit" + ctx);
            if (!scalar_traits<T>::leq(pbar_credit, eco_.resale_bounds[i], opt_.float_tol))
                throw InvariantViolation("invariant 1: agent " + std::to_string(i) +
                                         " exceeds relaxed credit" + ctx);
        }
        // Invariant 2: consumption within the relaxed-price optimum
        for (int i = 0; i < eco_.agents; ++i) {
            auto holdings = consumption_holdings(i);
            if (holdings.empty()) continue;
            auto view = consumption_view(eco_, i, prices_);
            T relaxed_spend(0);
            for (auto& [jk, v] : holdings) {
                if (v <= T(0)) continue;
                if (!in_consumption_argmax(view, jk.first, jk.second))
                    throw InvariantViolation("invariant 2: agent " + std::to_string(i) +
                                             " consumes outside the argmax" + ctx);
                relaxed_spend += prices_(jk.first, jk.second) / one_eps_ * v;
            }
            T beta_bar(0);
            for (int k = 0; k < eco_.goods; ++k)
                beta_bar += prices_(i, k) * eco_.endowments(i, k);
            for (int j : eco_.neighbor_list[i])
                for (int k = 0; k < eco_.goods; ++k)
                    beta_bar += (prices_(i, k) - prices_(j, k) / one_eps_) *
                                (ro_.get(i, j, k) + rn_.get(i, j, k));
            if (!scalar_traits<T>::leq(relaxed_spend, beta_bar, opt_.float_tol))
                throw InvariantViolation("invariant 2: agent " + std::to_string(i) +
                                         " overspends the relaxed budget" + ctx);
        }
        // Invariant 5: booked consumption spend within the current budget
        for (int i = 0; i < eco_.agents; ++i) {
            T booked(0);
            for (auto& [key, v] : co_.entries()) {
                auto [a, j, k] = key;
                if (a == i) booked += old_price(j, k) * v;
            }
            for (auto& [key, v] : cn_.entries()) {
                auto [a, j, k] = key;
                if (a == i) booked += prices_(j, k) * v;
            }
            if (!scalar_traits<T>::leq(booked, beta(i), opt_.float_tol))
                throw InvariantViolation("invariant 5: agent " + std::to_string(i) +
                                         " spends beyond its budget" + ctx);
        }
        // two-price discipline: resale never booked from self; edge support
        for (auto& [key, v] : ro_.entries()) {
            auto [i, j, k] = key;
            (void)k;
            if (i == j) throw InvariantViolation("self-resale booked" + ctx);
            if (!eco_.adjacent(i, j)) throw InvariantViolation("off-edge resale" + ctx);
        }
        for (auto& [key, v] : rn_.entries()) {
            auto [i, j, k] = key;
            (void)k;
            if (i == j) throw InvariantViolation("self-resale booked" + ctx);
            if (!eco_.adjacent(i, j)) throw InvariantViolation("off-edge resale" + ctx);
        }
        // monotone prices, lattice form (1+eps)^count
        for (int j = 0; j < eco_.agents; ++j)
            for (int k = 0; k < eco_.goods; ++k) {
                T expect(1);
                for (int c = 0; c < raise_counts_(j, k); ++c) expect *= one_eps_;
                if (!scalar_eq(prices_(j, k), expect))
                    throw InvariantViolation("price off the (1+eps)^n lattice" + ctx);
            }
        // Lemma B.4 form: total raises <= m * ell * max per-pair count
        long long max_count = 0;
        for (int j = 0; j < eco_.agents; ++j)
            for (int k = 0; k < eco_.goods; ++k)
                max_count = std::max(max_count, static_cast<long long>(raise_counts_(j, k)));
        if (stats_.raise_price_calls >
            static_cast<long long>(eco_.agents) * eco_.goods * std::max(max_count, 1LL))
            throw InvariantViolation("raise count exceeds the price-raise bound" + ctx);
        // tau is non-increasing between raise_price calls
        T t = tau();
        if (tau_window_open_) {
            if (!scalar_traits<T>::leq(t, tau_prev_, opt_.float_tol))
                throw InvariantViolation("old-price spend grew between raises" + ctx);
        }
        tau_prev_ = t;
        tau_window_open_ = true;
    }
};

// Convenience front end matching the spec's run() operation.
template <class T>
RunResult<T> run_auction(const Economy<T>& eco, const T& eps, EngineOptions<T> opt = {}) {
    opt.eps = eps;
    AuctionEngine<T> engine(eco, opt);
    return engine.run();
}

}  // namespace graphecon
