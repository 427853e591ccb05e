#pragma once

#include <initializer_list>
#include <vector>

#include "graphecon/economy.hpp"
#include "graphecon/scalar.hpp"

namespace graphecon::testing {

// Compact economy builder for tests: values given as rationals row by row.
inline Economy<Rational> make_economy(int agents, int goods,
                                      std::initializer_list<std::pair<int, int>> edges,
                                      std::vector<std::vector<Rational>> endow,
                                      std::vector<std::vector<Rational>> util,
                                      std::vector<Rational> bounds,
                                      ResaleKind kind = ResaleKind::credit) {
    Economy<Rational> eco;
    eco.agents = agents;
    eco.goods = goods;
    for (auto [a, b] : edges) eco.edges.emplace_back(a, b);
    eco.endowments = Matrix<Rational>(agents, goods);
    eco.utilities = Matrix<Rational>(agents, goods);
    for (int i = 0; i < agents; ++i)
        for (int k = 0; k < goods; ++k) {
            eco.endowments(i, k) = endow[i][k];
            eco.utilities(i, k) = util[i][k];
        }
    eco.resale_bounds = std::move(bounds);
    eco.resale_kind = kind;
    eco.rebuild_adjacency();
    eco.validate();
    return eco;
}

inline Rational rat(long long num, long long den = 1) { return Rational(num, den); }

}  // namespace graphecon::testing
