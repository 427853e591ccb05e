#pragma once

#include <random>
#include <vector>

#include "graphecon/assumptions.hpp"
#include "graphecon/economy.hpp"

namespace graphecon {

// Seeded random economies for benchmarks and property tests: connected
// sparse graphs, sparse endowments, positive resale bounds, credit kind.
// Callers filter with check_assumptions when a suite needs Assumptions 1-5.
template <class T>
Economy<T> random_economy_candidate(std::mt19937& rng, int max_agents, int max_goods) {
    std::uniform_int_distribution<int> m_dist(2, max_agents);
    std::uniform_int_distribution<int> g_dist(1, max_goods);
    int m = m_dist(rng), goods = g_dist(rng);
    Economy<T> eco;
    eco.agents = m;
    eco.goods = goods;
    eco.resale_kind = ResaleKind::credit;
    eco.endowments = Matrix<T>(m, goods);
    eco.utilities = Matrix<T>(m, goods);
    eco.resale_bounds.assign(m, T(0));

    std::uniform_real_distribution<double> coin(0.0, 1.0);
    // random spanning tree keeps the graph connected, then a few extras
    for (int i = 1; i < m; ++i) {
        std::uniform_int_distribution<int> parent(0, i - 1);
        eco.edges.emplace_back(parent(rng), i);
    }
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            if (coin(rng) < 0.25) eco.edges.emplace_back(i, j);
    std::sort(eco.edges.begin(), eco.edges.end());
    eco.edges.erase(std::unique(eco.edges.begin(), eco.edges.end()), eco.edges.end());

    auto pick = [&](std::initializer_list<Rational> values) {
        std::uniform_int_distribution<size_t> d(0, values.size() - 1);
        return scalar_traits<T>::from_rational(*(values.begin() + d(rng)));
    };
    for (int i = 0; i < m; ++i)
        for (int k = 0; k < goods; ++k) {
            if (coin(rng) < 0.5)
                eco.endowments(i, k) = pick({Rational(1, 2), Rational(1), Rational(3, 2),
                                             Rational(2), Rational(3)});
            if (coin(rng) < 0.7)
                eco.utilities(i, k) = pick({Rational(1, 2), Rational(1), Rational(2), Rational(3)});
        }
    for (int k = 0; k < goods; ++k) {
        bool endowed = false;
        for (int i = 0; i < m; ++i)
            if (eco.endowments(i, k) > T(0)) endowed = true;
        if (!endowed) {
            std::uniform_int_distribution<int> who(0, m - 1);
            eco.endowments(who(rng), k) = T(1);
        }
    }
    for (int i = 0; i < m; ++i) {
        bool any = false;
        for (int k = 0; k < goods; ++k)
            if (eco.utilities(i, k) > T(0)) any = true;
        if (!any) {
            std::uniform_int_distribution<int> which(0, goods - 1);
            eco.utilities(i, which(rng)) = T(1);
        }
        eco.resale_bounds[i] = pick({Rational(1, 4), Rational(1, 2), Rational(1), Rational(2)});
    }
    eco.rebuild_adjacency();
    eco.validate();
    return eco;
}

// Rejection-samples until the five assumptions hold.
template <class T>
Economy<T> random_admissible_economy(std::mt19937& rng, int max_agents, int max_goods) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Economy<T> eco = random_economy_candidate<T>(rng, max_agents, max_goods);
        if (check_assumptions(eco).all_pass) return eco;
    }
    throw EconomyError("could not sample an admissible economy in 1000 attempts");
}

}  // namespace graphecon
