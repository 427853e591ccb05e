#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphecon/economy.hpp"
#include "graphecon/io.hpp"

namespace graphecon {

template <class T>
T sqrt_or_throw(const T& v);

template <>
inline Rational sqrt_or_throw<Rational>(const Rational& v) {
    auto r = exact_sqrt(v);
    if (!r)
        throw std::domain_error("exact mode requires a rational square root; " +
                                rational_to_string(v) + " is not a perfect square");
    return *r;
}

template <>
inline double sqrt_or_throw<double>(const double& v) {
    return std::sqrt(v);
}

template <class T>
struct Fixture {
    Economy<T> economy;
    std::optional<Certificate<T>> certificate;
    std::vector<T> utilities;  // analytic per-agent utilities, when known
};

namespace detail {

template <class T>
Economy<T> path_economy(int m, int goods) {
    Economy<T> eco;
    eco.agents = m;
    eco.goods = goods;
    for (int i = 0; i + 1 < m; ++i) eco.edges.emplace_back(i, i + 1);
    eco.endowments = Matrix<T>(m, goods);
    eco.utilities = Matrix<T>(m, goods);
    eco.resale_bounds.assign(m, T(0));
    eco.resale_kind = ResaleKind::credit;
    eco.rebuild_adjacency();
    return eco;
}

}  // namespace detail

// Broker economy of the three-node example: endowed endpoints with
// complementary tastes, an unendowed broker in the middle. Certificate at
// alpha = sqrt(b/2): p^0=(a,1), p^1=(1,1), p^2=(1,a); the broker resells
// alpha of each endowment and consumes (1-a, 1-a).
template <class T>
Fixture<T> gen_broker(const T& b, ResaleKind kind = ResaleKind::credit) {
    if (!(b > T(0)) || b > T(2)) throw std::domain_error("gen_broker requires 0 < b <= 2");
    Fixture<T> fix;
    fix.economy = detail::path_economy<T>(3, 2);
    auto& eco = fix.economy;
    eco.endowments(0, 0) = T(1);
    eco.endowments(2, 1) = T(1);
    eco.utilities(0, 1) = T(1);
    eco.utilities(1, 0) = T(1);
    eco.utilities(1, 1) = T(1);
    eco.utilities(2, 0) = T(1);
    eco.resale_bounds.assign(3, b);
    eco.resale_kind = kind;
    eco.validate();
    if (kind == ResaleKind::commodity) return fix;  // analytic certificate is credit-specific

    T a = sqrt_or_throw<T>(b / T(2));
    Certificate<T> cert;
    cert.prices = Matrix<T>(3, 2, T(1));
    cert.prices(0, 0) = a;
    cert.prices(2, 1) = a;
    cert.plan.y.set(1, 0, 0, a);        // b/(2a) = a
    cert.plan.y.set(1, 2, 1, a);
    cert.plan.x.set(0, 1, 1, a);
    cert.plan.x.set(2, 1, 0, a);
    cert.plan.x.set(1, 0, 0, T(1) - a);  // b(1-a)/(2a^2) = 1-a
    cert.plan.x.set(1, 2, 1, T(1) - a);
    fix.certificate = cert;
    fix.utilities = {a, T(2) * (T(1) - a), a};
    return fix;
}

// Asymmetric broker (u^1 = (0,1)): alpha solves alpha^2 + alpha = b.
// Certificate: p^0=(a,1/a), p^1=(1,1/a), p^2=(1,1); broker resells the whole
// first endowment plus alpha^2 of the second and consumes (0, 1-a^2).
template <class T>
Fixture<T> gen_asymmetric_broker(const T& b) {
    if (!(b > T(0)) || b > T(2))
        throw std::domain_error("gen_asymmetric_broker requires 0 < b <= 2");
    Fixture<T> fix;
    fix.economy = detail::path_economy<T>(3, 2);
    auto& eco = fix.economy;
    eco.endowments(0, 0) = T(1);
    eco.endowments(2, 1) = T(1);
    eco.utilities(0, 1) = T(1);
    eco.utilities(1, 1) = T(1);
    eco.utilities(2, 0) = T(1);
    eco.resale_bounds.assign(3, b);
    eco.validate();

    T a = (sqrt_or_throw<T>(T(1) + T(4) * b) - T(1)) / T(2);
    Certificate<T> cert;
    cert.prices = Matrix<T>(3, 2, T(1));
    cert.prices(0, 0) = a;
    cert.prices(0, 1) = T(1) / a;
    cert.prices(1, 1) = T(1) / a;
    cert.plan.y.set(1, 0, 0, T(1));
    cert.plan.y.set(1, 2, 1, a * a);
    cert.plan.x.set(0, 1, 1, a * a);
    cert.plan.x.set(1, 2, 1, T(1) - a * a);
    cert.plan.x.set(2, 1, 0, T(1));
    fix.certificate = cert;
    fix.utilities = {a * a, T(1) - a * a, T(1)};
    return fix;
}

// Epsilon-padded KKO broker (asymmetric tastes, zero resale): endowments
// padded by eps, prices (0,eps)/(1,eps)/(1,eps), utilities eps, 1+eps, 2eps.
template <class T>
Fixture<T> gen_epsilon_kko_broker(const T& eps_pad) {
    if (!(eps_pad > T(0))) throw std::domain_error("gen_epsilon_kko_broker requires eps_pad > 0");
    const T& e = eps_pad;
    Fixture<T> fix;
    fix.economy = detail::path_economy<T>(3, 2);
    auto& eco = fix.economy;
    eco.endowments(0, 0) = T(1);
    eco.endowments(0, 1) = e;
    eco.endowments(1, 0) = e;
    eco.endowments(1, 1) = e;
    eco.endowments(2, 0) = e;
    eco.endowments(2, 1) = T(1);
    eco.utilities(0, 1) = T(1);
    eco.utilities(1, 1) = T(1);
    eco.utilities(2, 0) = T(1);
    eco.validate();

    Certificate<T> cert;
    cert.prices = Matrix<T>(3, 2);
    cert.prices(0, 0) = T(0);
    cert.prices(0, 1) = e;
    cert.prices(1, 0) = T(1);
    cert.prices(1, 1) = e;
    cert.prices(2, 0) = T(1);
    cert.prices(2, 1) = e;
    cert.plan.x.set(0, 0, 0, T(1));
    cert.plan.x.set(0, 0, 1, e);
    cert.plan.x.set(1, 1, 1, e);
    cert.plan.x.set(1, 2, 1, T(1));
    cert.plan.x.set(2, 1, 0, e);
    cert.plan.x.set(2, 2, 0, e);
    fix.certificate = cert;
    fix.utilities = {e, T(1) + e, T(2) * e};
    return fix;
}

// Market-breadth chain: endowed endpoints with complementary tastes joined
// by a line of unendowed brokers wanting both goods.
template <class T>
Fixture<T> gen_breadth_chain(int m, const T& b) {
    if (m < 3) throw std::domain_error("gen_breadth_chain requires m >= 3");
    if (!(b > T(0))) throw std::domain_error("gen_breadth_chain requires b > 0");
    Fixture<T> fix;
    fix.economy = detail::path_economy<T>(m, 2);
    auto& eco = fix.economy;
    eco.endowments(0, 0) = T(1);
    eco.endowments(m - 1, 1) = T(1);
    eco.utilities(0, 1) = T(1);
    eco.utilities(m - 1, 0) = T(1);
    for (int i = 1; i + 1 < m; ++i) {
        eco.utilities(i, 0) = T(1);
        eco.utilities(i, 1) = T(1);
    }
    eco.resale_bounds.assign(m, b);
    eco.validate();
    return fix;
}

// Exponential-p_max chain: ell = m goods, agent i endowed with good i,
// utility 1 for it and alpha for the right neighbor's good. No resale
// capacity; the example runs the auction as a pure bidding war.
template <class T>
Fixture<T> gen_pmax_chain(int m, const T& alpha) {
    if (m < 2) throw std::domain_error("gen_pmax_chain requires m >= 2");
    if (!(alpha > T(1))) throw std::domain_error("gen_pmax_chain requires alpha > 1");
    Fixture<T> fix;
    fix.economy = detail::path_economy<T>(m, m);
    auto& eco = fix.economy;
    for (int i = 0; i < m; ++i) {
        eco.endowments(i, i) = T(1);
        eco.utilities(i, i) = T(1);
        if (i + 1 < m) eco.utilities(i, i + 1) = alpha;
    }
    eco.validate();
    return fix;
}

}  // namespace graphecon
