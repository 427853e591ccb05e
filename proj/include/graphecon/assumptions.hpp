#pragma once

#include <deque>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphecon/economy.hpp"

namespace graphecon {

// P[i][j] = true iff a path from i to j exists whose interior nodes all
// have b > 0. Symmetric, reflexive.
template <class T>
std::vector<std::vector<char>> trade_path_reachability(const Economy<T>& eco) {
    int m = eco.agents;
    std::vector<std::vector<char>> reach(m, std::vector<char>(m, 0));
    for (int s = 0; s < m; ++s) {
        reach[s][s] = 1;
        std::deque<int> frontier;
        std::vector<char> seen(m, 0);
        seen[s] = 1;
        frontier.push_back(s);
        while (!frontier.empty()) {
            int v = frontier.front();
            frontier.pop_front();
            // may leave v if it is the source or has resale capacity
            if (v != s && !(eco.resale_bounds[v] > T(0))) continue;
            for (int w : eco.neighbor_list[v]) {
                if (seen[w]) continue;
                seen[w] = 1;
                reach[s][w] = 1;
                frontier.push_back(w);
            }
        }
    }
    return reach;
}

// Supply graph of good k: (i,j) in E^S_k iff e^i_k > 0, u^j_k > 0, and a
// trade path connects i and j. E^S is the union over goods.
struct SupplyGraph {
    std::vector<std::vector<std::pair<int, int>>> per_good;  // E^S_k edge lists
    std::vector<std::pair<int, int>> all;                    // E^S
};

template <class T>
SupplyGraph build_supply_graph(const Economy<T>& eco,
                               const std::vector<std::vector<char>>* reach_opt = nullptr) {
    std::vector<std::vector<char>> local;
    if (!reach_opt) {
        local = trade_path_reachability(eco);
        reach_opt = &local;
    }
    const auto& reach = *reach_opt;
    SupplyGraph g;
    g.per_good.resize(eco.goods);
    std::vector<std::vector<char>> in_all(eco.agents, std::vector<char>(eco.agents, 0));
    for (int k = 0; k < eco.goods; ++k)
        for (int i = 0; i < eco.agents; ++i) {
            if (!(eco.endowments(i, k) > T(0))) continue;
            for (int j = 0; j < eco.agents; ++j) {
                if (!(eco.utilities(j, k) > T(0))) continue;
                if (!reach[i][j]) continue;
                g.per_good[k].emplace_back(i, j);
                if (!in_all[i][j]) {
                    in_all[i][j] = 1;
                    g.all.emplace_back(i, j);
                }
            }
        }
    return g;
}

// Tarjan SCC over an adjacency-list digraph; returns component id per node.
inline std::vector<int> strongly_connected_components(
    const std::vector<std::vector<int>>& graph) {
    int n = static_cast<int>(graph.size());
    std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
    std::vector<char> on_stack(n, 0);
    std::vector<int> stack;
    int next_index = 0, next_comp = 0;

    // iterative DFS to avoid recursion limits
    struct Frame {
        int v;
        size_t child;
    };
    for (int root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        std::vector<Frame> frames{{root, 0}};
        index[root] = low[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!frames.empty()) {
            auto& fr = frames.back();
            if (fr.child < graph[fr.v].size()) {
                int w = graph[fr.v][fr.child++];
                if (index[w] == -1) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    frames.push_back({w, 0});
                } else if (on_stack[w]) {
                    if (index[w] < low[fr.v]) low[fr.v] = index[w];
                }
            } else {
                int v = fr.v;
                frames.pop_back();
                if (!frames.empty() && low[v] < low[frames.back().v])
                    low[frames.back().v] = low[v];
                if (low[v] == index[v]) {
                    while (true) {
                        int w = stack.back();
                        stack.pop_back();
                        on_stack[w] = 0;
                        comp[w] = next_comp;
                        if (w == v) break;
                    }
                    ++next_comp;
                }
            }
        }
    }
    return comp;
}

// Connected components of the undirected trade graph.
template <class T>
std::vector<int> trade_graph_components(const Economy<T>& eco) {
    std::vector<int> comp(eco.agents, -1);
    int next = 0;
    for (int s = 0; s < eco.agents; ++s) {
        if (comp[s] != -1) continue;
        std::deque<int> frontier{s};
        comp[s] = next;
        while (!frontier.empty()) {
            int v = frontier.front();
            frontier.pop_front();
            for (int w : eco.neighbor_list[v])
                if (comp[w] == -1) {
                    comp[w] = next;
                    frontier.push_back(w);
                }
        }
        ++next;
    }
    return comp;
}

struct AssumptionVerdict {
    int id = 0;  // 1..5
    bool pass = true;
    std::string witness;  // nonempty iff pass is false
    std::string note;
};

struct AssumptionReport {
    std::vector<AssumptionVerdict> verdicts;  // always 5 entries
    bool all_pass = true;
    // pass ignoring the structural commodity-resale flag on assumption 2;
    // the auction engine treats that one as a warning, not a gate failure
    bool pass_for_engine = true;

    nlohmann::json to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& v : verdicts) {
            nlohmann::json e;
            e["assumption"] = v.id;
            e["pass"] = v.pass;
            if (!v.witness.empty()) e["witness"] = v.witness;
            if (!v.note.empty()) e["note"] = v.note;
            arr.push_back(e);
        }
        nlohmann::json doc;
        doc["assumptions"] = arr;
        doc["all_pass"] = all_pass;
        return doc;
    }
};

// Executable checks for Assumptions 4.1-4.5. Linear utilities make 4.1's
// continuity and quasi-concavity automatic; non-satiability is a positive
// coefficient. Goods absent from a component and desired by nobody in it
// are excluded from that component's checks.
template <class T>
AssumptionReport check_assumptions(const Economy<T>& eco) {
    AssumptionReport report;
    report.verdicts.resize(5);
    for (int a = 0; a < 5; ++a) report.verdicts[a].id = a + 1;

    auto& a1 = report.verdicts[0];
    for (int i = 0; i < eco.agents && a1.pass; ++i) {
        bool nonsat = false;
        for (int k = 0; k < eco.goods; ++k)
            if (eco.utilities(i, k) > T(0)) nonsat = true;
        if (!nonsat) {
            a1.pass = false;
            a1.witness = "agent " + std::to_string(i) + " has no good with positive utility";
        }
    }
    if (a1.pass) a1.note = "linear utilities: continuity and quasi-concavity hold structurally";

    auto& a2 = report.verdicts[1];
    if (eco.resale_kind == ResaleKind::credit) {
        a2.note = "credit bound resale satisfies (i) and (ii) structurally";
    } else {
        a2.pass = false;
        a2.witness = "commodity bound resale violates 4.2(ii): finite demand at zero prices";
        a2.note = "engine treats this as a warning; existence guarantees do not apply";
    }

    auto& a3 = report.verdicts[2];
    for (int i = 0; i < eco.agents && a3.pass; ++i) {
        if (eco.resale_bounds[i] > T(0)) continue;
        bool all_pos = true;
        for (int k = 0; k < eco.goods; ++k)
            if (!(eco.endowments(i, k) > T(0))) all_pos = false;
        if (!all_pos) {
            a3.pass = false;
            a3.witness = "agent " + std::to_string(i) +
                         " has b = 0 and an endowment that is not strictly positive";
        }
    }

    auto& a4 = report.verdicts[3];
    for (int k = 0; k < eco.goods && a4.pass; ++k) {
        bool endowed = false;
        for (int i = 0; i < eco.agents; ++i)
            if (eco.endowments(i, k) > T(0)) endowed = true;
        if (!endowed) {
            a4.pass = false;
            a4.witness = "good " + std::to_string(k) + " is endowed to nobody";
        }
    }

    auto& a5 = report.verdicts[4];
    auto reach = trade_path_reachability(eco);
    auto supply = build_supply_graph(eco, &reach);
    auto comp = trade_graph_components(eco);
    int ncomp = 0;
    for (int c : comp) ncomp = std::max(ncomp, c + 1);

    // per-component good inclusion: goods endowed somewhere in the component
    std::vector<std::vector<char>> included(ncomp, std::vector<char>(eco.goods, 0));
    for (int i = 0; i < eco.agents; ++i)
        for (int k = 0; k < eco.goods; ++k)
            if (eco.endowments(i, k) > T(0)) included[comp[i]][k] = 1;

    // (i) every agent non-satiable in k has an incoming E^S_k edge
    for (int j = 0; j < eco.agents && a5.pass; ++j)
        for (int k = 0; k < eco.goods && a5.pass; ++k) {
            if (!(eco.utilities(j, k) > T(0))) continue;
            if (!included[comp[j]][k]) {
                a5.pass = false;
                a5.witness = "4.5(i): agent " + std::to_string(j) + " desires good " +
                             std::to_string(k) + " which its component has none of";
                break;
            }
            bool has_in = false;
            for (auto [src, dst] : supply.per_good[k])
                if (dst == j) has_in = true;
            if (!has_in) {
                a5.pass = false;
                a5.witness = "4.5(i): agent " + std::to_string(j) +
                             " has no supplier of desired good " + std::to_string(k);
            }
        }

    // (ii) every unendowed agent sits on a trade path of an E^S_k edge whose
    // source sink pair ends at an endowed agent, for every included good k
    for (int i = 0; i < eco.agents && a5.pass; ++i) {
        bool unendowed = true;
        for (int k = 0; k < eco.goods; ++k)
            if (eco.endowments(i, k) > T(0)) unendowed = false;
        if (!unendowed) continue;
        for (int k = 0; k < eco.goods && a5.pass; ++k) {
            if (!included[comp[i]][k]) continue;  // neglected good for this component
            bool covered = false;
            for (auto [src, dst] : supply.per_good[k]) {
                if (comp[src] != comp[i]) continue;
                bool dst_endowed = false;
                for (int g = 0; g < eco.goods; ++g)
                    if (eco.endowments(dst, g) > T(0)) dst_endowed = true;
                if (!dst_endowed) continue;
                // i on a trade path between src and dst: i reachable from both
                // ends through resale-capable interiors (i itself may be an
                // endpoint or must carry b > 0 as an interior node)
                bool interior_ok = (i == src || i == dst || eco.resale_bounds[i] > T(0));
                if (interior_ok && reach[src][i] && reach[i][dst]) {
                    covered = true;
                    break;
                }
            }
            if (!covered) {
                a5.pass = false;
                a5.witness = "4.5(ii): unendowed agent " + std::to_string(i) +
                             " lies on no supply path for good " + std::to_string(k);
            }
        }
    }

    // (iii) E^S induced on the endowed agents of each component is strongly
    // connected
    if (a5.pass) {
        for (int c = 0; c < ncomp && a5.pass; ++c) {
            std::vector<int> endowed_nodes;
            for (int i = 0; i < eco.agents; ++i) {
                if (comp[i] != c) continue;
                for (int k = 0; k < eco.goods; ++k)
                    if (eco.endowments(i, k) > T(0)) {
                        endowed_nodes.push_back(i);
                        break;
                    }
            }
            if (endowed_nodes.size() <= 1) continue;
            std::vector<int> local_id(eco.agents, -1);
            for (size_t idx = 0; idx < endowed_nodes.size(); ++idx)
                local_id[endowed_nodes[idx]] = static_cast<int>(idx);
            std::vector<std::vector<int>> digraph(endowed_nodes.size());
            for (auto [src, dst] : supply.all)
                if (local_id[src] != -1 && local_id[dst] != -1 && comp[src] == c)
                    digraph[local_id[src]].push_back(local_id[dst]);
            auto scc = strongly_connected_components(digraph);
            for (int id : scc)
                if (id != scc[0]) {
                    a5.pass = false;
                    a5.witness = "4.5(iii): endowed agents of component " + std::to_string(c) +
                                 " are not strongly connected in the supply graph";
                    break;
                }
        }
    }

    for (const auto& v : report.verdicts) report.all_pass = report.all_pass && v.pass;
    report.pass_for_engine = report.all_pass ||
                             (eco.resale_kind == ResaleKind::commodity &&
                              report.verdicts[0].pass && report.verdicts[2].pass &&
                              report.verdicts[3].pass && report.verdicts[4].pass);
    return report;
}

}  // namespace graphecon
