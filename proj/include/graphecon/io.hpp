#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "graphecon/economy.hpp"
#include "graphecon/scalar.hpp"

namespace graphecon {

using json = nlohmann::json;

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class NumericMode { exact, floating };

inline const char* numeric_mode_name(NumericMode m) {
    return m == NumericMode::exact ? "exact" : "float";
}

inline NumericMode numeric_mode_from_string(const std::string& s) {
    if (s == "exact") return NumericMode::exact;
    if (s == "float") return NumericMode::floating;
    throw ParseError("numeric_mode must be \"exact\" or \"float\", got \"" + s + "\"");
}

// Scalars in files are JSON numbers or "num/den" strings.
template <class T>
T scalar_from_json(const json& v, const std::string& where) {
    try {
        if (v.is_string()) return scalar_traits<T>::parse(v.get<std::string>());
        if (v.is_number_integer()) {
            return T(v.get<long long>());
        }
        if (v.is_number_float()) {
            if constexpr (scalar_traits<T>::exact) {
                std::ostringstream out;
                out.precision(17);
                out << v.get<double>();
                return scalar_traits<T>::parse(out.str());
            } else {
                return v.get<double>();
            }
        }
    } catch (const std::exception& e) {
        throw ParseError(where + ": " + e.what());
    }
    throw ParseError(where + ": expected number or \"num/den\" string");
}

inline json scalar_to_json(const Rational& q) {
    if (denominator(q) == 1 && abs(numerator(q)) < BigInt(1) << 53)
        return json(numerator(q).convert_to<long long>());
    return json(rational_to_string(q));
}

inline json scalar_to_json(double x) { return json(x); }

template <class T>
Matrix<T> matrix_from_json(const json& v, int rows, int cols, const std::string& where) {
    if (!v.is_array() || static_cast<int>(v.size()) != rows)
        throw ParseError(where + ": expected " + std::to_string(rows) + " rows");
    Matrix<T> m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const json& row = v[r];
        if (!row.is_array() || static_cast<int>(row.size()) != cols)
            throw ParseError(where + " row " + std::to_string(r) + ": expected " +
                             std::to_string(cols) + " entries");
        for (int c = 0; c < cols; ++c)
            m(r, c) = scalar_from_json<T>(row[c], where + "[" + std::to_string(r) + "][" +
                                                      std::to_string(c) + "]");
    }
    return m;
}

template <class T>
json matrix_to_json(const Matrix<T>& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(scalar_to_json(m(r, c)));
        rows.push_back(row);
    }
    return rows;
}

inline NumericMode economy_file_mode(const json& doc) {
    if (!doc.contains("numeric_mode")) return NumericMode::exact;
    return numeric_mode_from_string(doc.at("numeric_mode").get<std::string>());
}

template <class T>
Economy<T> economy_from_json(const json& doc) {
    auto need = [&](const char* key) -> const json& {
        if (!doc.contains(key)) throw ParseError(std::string("missing key \"") + key + "\"");
        return doc.at(key);
    };
    Economy<T> eco;
    const json& agents_v = need("agents");
    const json& goods_v = need("goods");
    eco.agents = agents_v.get<int>();
    eco.goods = goods_v.get<int>();
    if (eco.agents <= 0 || eco.goods <= 0) throw ParseError("agents and goods must be positive");
    const json& edges_v = need("edges");
    for (const json& e : edges_v) {
        if (!e.is_array() || e.size() != 2) throw ParseError("edges entries must be [i,j] pairs");
        int a = e[0].get<int>(), b = e[1].get<int>();
        if (a > b) std::swap(a, b);
        eco.edges.emplace_back(a, b);
    }
    eco.endowments = matrix_from_json<T>(need("endowments"), eco.agents, eco.goods, "endowments");
    eco.utilities = matrix_from_json<T>(need("utilities"), eco.agents, eco.goods, "utilities");
    const json& rb = need("resale_bounds");
    if (!rb.is_array() || static_cast<int>(rb.size()) != eco.agents)
        throw ParseError("resale_bounds: expected " + std::to_string(eco.agents) + " entries");
    eco.resale_bounds.resize(eco.agents);
    for (int i = 0; i < eco.agents; ++i)
        eco.resale_bounds[i] = scalar_from_json<T>(rb[i], "resale_bounds[" + std::to_string(i) + "]");
    const json& kind_v = need("resale_kind");
    std::string kind = kind_v.get<std::string>();
    if (kind == "credit")
        eco.resale_kind = ResaleKind::credit;
    else if (kind == "commodity")
        eco.resale_kind = ResaleKind::commodity;
    else
        throw ParseError("resale_kind must be \"credit\" or \"commodity\"");
    std::sort(eco.edges.begin(), eco.edges.end());
    eco.edges.erase(std::unique(eco.edges.begin(), eco.edges.end()), eco.edges.end());
    eco.rebuild_adjacency();
    try {
        eco.validate();
    } catch (const EconomyError& e) {
        throw ParseError(e.what());
    }
    return eco;
}

template <class T>
json economy_to_json(const Economy<T>& eco) {
    json doc;
    doc["agents"] = eco.agents;
    doc["goods"] = eco.goods;
    json edges = json::array();
    for (auto [a, b] : eco.edges) edges.push_back(json::array({a, b}));
    doc["edges"] = edges;
    doc["endowments"] = matrix_to_json(eco.endowments);
    doc["utilities"] = matrix_to_json(eco.utilities);
    json rb = json::array();
    for (const T& b : eco.resale_bounds) rb.push_back(scalar_to_json(b));
    doc["resale_bounds"] = rb;
    doc["resale_kind"] = resale_kind_name(eco.resale_kind);
    doc["numeric_mode"] = scalar_traits<T>::exact ? "exact" : "float";
    return doc;
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    return doc;
}

inline void save_json_file(const std::string& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open file for writing: " + path);
    out << doc.dump(2) << "\n";
}

template <class T>
Economy<T> load_economy(const std::string& path) {
    return economy_from_json<T>(load_json_file(path));
}

template <class T>
void save_economy(const Economy<T>& eco, const std::string& path) {
    save_json_file(path, economy_to_json(eco));
}

// Certificate: prices (m x ell) plus sparse consumption/resale entries
// [i, j, k, amount].
template <class T>
struct Certificate {
    PriceSystem<T> prices;
    TradePlan<T> plan;
};

template <class T>
json certificate_to_json(const Certificate<T>& cert) {
    json doc;
    doc["prices"] = matrix_to_json(cert.prices);
    auto dump = [](const SparseTensor<T>& t) {
        json arr = json::array();
        for (auto& [key, v] : t.entries()) {
            auto [i, j, k] = key;
            arr.push_back(json::array({i, j, k, scalar_to_json(v)}));
        }
        return arr;
    };
    doc["consumption"] = dump(cert.plan.x);
    doc["resale"] = dump(cert.plan.y);
    return doc;
}

template <class T>
Certificate<T> certificate_from_json(const json& doc, int agents, int goods) {
    Certificate<T> cert;
    if (!doc.contains("prices")) throw ParseError("certificate missing \"prices\"");
    cert.prices = matrix_from_json<T>(doc.at("prices"), agents, goods, "prices");
    auto read = [&](const char* key, SparseTensor<T>& t) {
        if (!doc.contains(key)) return;
        for (const json& e : doc.at(key)) {
            if (!e.is_array() || e.size() != 4)
                throw ParseError(std::string(key) + " entries must be [i, j, k, amount]");
            int i = e[0].get<int>(), j = e[1].get<int>(), k = e[2].get<int>();
            T v = scalar_from_json<T>(e[3], std::string(key) + " amount");
            if (i < 0 || i >= agents || j < 0 || j >= agents || k < 0 || k >= goods)
                throw ParseError(std::string(key) + " entry index out of range");
            t.add(i, j, k, v);
        }
    };
    read("consumption", cert.plan.x);
    read("resale", cert.plan.y);
    return cert;
}

template <class T>
Certificate<T> load_certificate(const std::string& path, int agents, int goods) {
    return certificate_from_json<T>(load_json_file(path), agents, goods);
}

template <class T>
void save_certificate(const Certificate<T>& cert, const std::string& path) {
    save_json_file(path, certificate_to_json(cert));
}

}  // namespace graphecon
