#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "graphecon/scalar.hpp"

namespace graphecon {

enum class ResaleKind { credit, commodity };

inline const char* resale_kind_name(ResaleKind k) {
    return k == ResaleKind::credit ? "credit" : "commodity";
}

struct EconomyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense m x ell matrix of scalars, row = agent, col = good.
template <class T>
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, T fill = T(0))
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    T& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    const T& operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }
    bool operator==(const Matrix&) const = default;

private:
    int rows_ = 0, cols_ = 0;
    std::vector<T> data_;
};

template <class T>
using PriceSystem = Matrix<T>;  // local price p^i_k of good k at agent i

// Sparse nonnegative tensor keyed by (buyer i, seller j, good k).
// Zero entries are erased so iteration order is the support in
// ascending (i, j, k) order.
template <class T>
class SparseTensor {
public:
    using Key = std::tuple<int, int, int>;
    using MapType = std::map<Key, T>;

    T get(int i, int j, int k) const {
        auto it = entries_.find({i, j, k});
        return it == entries_.end() ? T(0) : it->second;
    }
    void set(int i, int j, int k, T v) {
        if (v == T(0))
            entries_.erase({i, j, k});
        else
            entries_[{i, j, k}] = std::move(v);
    }
    void add(int i, int j, int k, const T& v) { set(i, j, k, get(i, j, k) + v); }
    bool empty() const { return entries_.empty(); }
    const MapType& entries() const { return entries_; }
    bool operator==(const SparseTensor&) const = default;

private:
    MapType entries_;
};

// Consumption tensor x^{ij}_k and resale tensor y^{ij}_k.
template <class T>
struct TradePlan {
    SparseTensor<T> x;
    SparseTensor<T> y;
    bool operator==(const TradePlan&) const = default;
};

template <class T>
struct Economy {
    int agents = 0;  // m
    int goods = 0;   // ell
    std::vector<std::pair<int, int>> edges;  // undirected, i < j, no self loops
    Matrix<T> endowments;                    // e^i_k
    Matrix<T> utilities;                     // linear coefficients u^i_k
    std::vector<T> resale_bounds;            // b_i
    ResaleKind resale_kind = ResaleKind::credit;

    // Derived adjacency: mask includes the reflexive self loops.
    std::vector<char> adj_mask;                   // agents x agents
    std::vector<std::vector<int>> neighbor_list;  // sorted, includes self

    bool adjacent(int i, int j) const { return adj_mask[static_cast<size_t>(i) * agents + j] != 0; }

    void rebuild_adjacency() {
        adj_mask.assign(static_cast<size_t>(agents) * agents, 0);
        for (int i = 0; i < agents; ++i) adj_mask[static_cast<size_t>(i) * agents + i] = 1;
        for (auto [a, b] : edges) {
            adj_mask[static_cast<size_t>(a) * agents + b] = 1;
            adj_mask[static_cast<size_t>(b) * agents + a] = 1;
        }
        neighbor_list.assign(agents, {});
        for (int i = 0; i < agents; ++i)
            for (int j = 0; j < agents; ++j)
                if (adjacent(i, j)) neighbor_list[i].push_back(j);
    }

    void validate() const {
        if (agents <= 0) throw EconomyError("economy must have at least one agent");
        if (goods <= 0) throw EconomyError("economy must have at least one good");
        for (auto [a, b] : edges) {
            if (a < 0 || a >= agents || b < 0 || b >= agents)
                throw EconomyError("edge endpoint out of range: [" + std::to_string(a) + "," +
                                   std::to_string(b) + "]");
            if (a == b) throw EconomyError("explicit self loop on agent " + std::to_string(a) +
                                           " (self loops are implicit)");
        }
        for (int i = 0; i < agents; ++i) {
            bool nonsat = false;
            for (int k = 0; k < goods; ++k) {
                if (endowments(i, k) < T(0))
                    throw EconomyError("negative endowment at agent " + std::to_string(i) +
                                       ", good " + std::to_string(k));
                if (utilities(i, k) < T(0))
                    throw EconomyError("negative utility coefficient at agent " +
                                       std::to_string(i) + ", good " + std::to_string(k));
                if (utilities(i, k) > T(0)) nonsat = true;
            }
            if (!nonsat)
                throw EconomyError("agent " + std::to_string(i) +
                                   " has no positive utility coefficient");
            if (resale_bounds[i] < T(0))
                throw EconomyError("negative resale bound at agent " + std::to_string(i));
        }
    }

    void check_agent(int i) const {
        if (i < 0 || i >= agents) throw EconomyError("agent id out of range: " + std::to_string(i));
    }
};

// All j with i ≃ j (including i itself), ascending.
template <class T>
std::vector<int> neighbors(const Economy<T>& eco, int i) {
    eco.check_agent(i);
    return eco.neighbor_list[i];
}

// Edge support: x^{ij}_k = y^{ij}_k = 0 whenever NOT(i ≃ j); no self resale.
template <class T>
void validate_plan(const Economy<T>& eco, const TradePlan<T>& plan) {
    for (auto& [key, v] : plan.x.entries()) {
        auto [i, j, k] = key;
        if (i < 0 || i >= eco.agents || j < 0 || j >= eco.agents || k < 0 || k >= eco.goods)
            throw EconomyError("consumption entry out of range");
        if (v < T(0)) throw EconomyError("negative consumption entry");
        if (!eco.adjacent(i, j)) throw EconomyError("consumption entry off the trade graph");
    }
    for (auto& [key, v] : plan.y.entries()) {
        auto [i, j, k] = key;
        if (i < 0 || i >= eco.agents || j < 0 || j >= eco.agents || k < 0 || k >= eco.goods)
            throw EconomyError("resale entry out of range");
        if (v < T(0)) throw EconomyError("negative resale entry");
        if (!eco.adjacent(i, j)) throw EconomyError("resale entry off the trade graph");
        if (i == j) throw EconomyError("agent " + std::to_string(i) + " resells from itself");
    }
}

// d^i(x) = Σ_{j≃i} x^{ji}: consumption demand drawn from agent i.
template <class T>
std::vector<T> demand_vector(const Economy<T>& eco, const TradePlan<T>& plan, int i) {
    eco.check_agent(i);
    std::vector<T> d(eco.goods, T(0));
    for (int j : eco.neighbor_list[i])
        for (int k = 0; k < eco.goods; ++k) d[k] += plan.x.get(j, i, k);
    return d;
}

// Total outflow Σ_{j≃i} (x^{ji} + y^{ji}): everything drawn from agent i.
template <class T>
std::vector<T> supply_drawn(const Economy<T>& eco, const TradePlan<T>& plan, int i) {
    eco.check_agent(i);
    std::vector<T> d(eco.goods, T(0));
    for (int j : eco.neighbor_list[i])
        for (int k = 0; k < eco.goods; ++k) d[k] += plan.x.get(j, i, k) + plan.y.get(j, i, k);
    return d;
}

// What agent i brings to market: e^i + Σ_{j≃i} y^{ij}.
template <class T>
std::vector<T> supply_of(const Economy<T>& eco, const TradePlan<T>& plan, int i) {
    std::vector<T> s(eco.goods, T(0));
    for (int k = 0; k < eco.goods; ++k) s[k] = eco.endowments(i, k);
    for (int j : eco.neighbor_list[i])
        for (int k = 0; k < eco.goods; ++k) s[k] += plan.y.get(i, j, k);
    return s;
}

// beta_i = p^i·e^i + Σ_{j≃i} (p^i − p^j)·y^{ij}
template <class T>
T budget_of(const Economy<T>& eco, const PriceSystem<T>& prices, const TradePlan<T>& plan, int i) {
    eco.check_agent(i);
    T beta(0);
    for (int k = 0; k < eco.goods; ++k) beta += prices(i, k) * eco.endowments(i, k);
    for (int j : eco.neighbor_list[i])
        for (int k = 0; k < eco.goods; ++k)
            beta += (prices(i, k) - prices(j, k)) * plan.y.get(i, j, k);
    return beta;
}

// u_i(Σ_{j≃i} x^{ij}) for linear utilities.
template <class T>
T agent_utility(const Economy<T>& eco, const TradePlan<T>& plan, int i) {
    eco.check_agent(i);
    T u(0);
    for (int j : eco.neighbor_list[i])
        for (int k = 0; k < eco.goods; ++k) u += eco.utilities(i, k) * plan.x.get(i, j, k);
    return u;
}

}  // namespace graphecon
