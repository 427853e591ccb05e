// Python bindings: the main operations exposed over JSON documents, so the
// exact-rational payloads ("num/den" strings) survive the crossing.

#include <pybind11/pybind11.h>

#include <optional>
#include <string>

#include "graphecon/assumptions.hpp"
#include "graphecon/auction.hpp"
#include "graphecon/fixtures.hpp"
#include "graphecon/io.hpp"
#include "graphecon/verifier.hpp"

namespace py = pybind11;
using namespace graphecon;

namespace {

bool is_float_mode(const nlohmann::json& doc, const std::string& mode) {
    if (!mode.empty()) return numeric_mode_from_string(mode) == NumericMode::floating;
    return economy_file_mode(doc) == NumericMode::floating;
}

template <class T>
std::string check_impl(const nlohmann::json& doc) {
    auto eco = economy_from_json<T>(doc);
    return check_assumptions(eco).to_json().dump();
}

template <class T>
std::string solve_impl(const nlohmann::json& doc, const std::string& eps_str, bool force,
                       const std::string& instrument) {
    auto eco = economy_from_json<T>(doc);
    EngineOptions<T> opt;
    opt.eps = scalar_traits<T>::parse(eps_str);
    opt.force = force;
    if (instrument == "off")
        opt.instrument = Instrumentation::off;
    else if (instrument == "full")
        opt.instrument = Instrumentation::full;
    AuctionEngine<T> engine(eco, opt);
    auto result = engine.run();
    auto self_check = verify_approx_equilibrium(eco, result.prices, result.plan, opt.eps);
    nlohmann::json out;
    out["certificate"] = certificate_to_json(Certificate<T>{result.prices, result.plan});
    nlohmann::json stats = result.stats.to_json();
    stats["termination_reason"] = result.termination_reason;
    stats["self_verification"] = self_check.pass;
    stats["commodity_warning"] = result.commodity_warning;
    out["stats"] = stats;
    return out.dump();
}

template <class T>
std::string verify_impl(const nlohmann::json& doc, const nlohmann::json& cert_doc,
                        const std::string& kind, const std::string& value) {
    auto eco = economy_from_json<T>(doc);
    auto cert = certificate_from_json<T>(cert_doc, eco.agents, eco.goods);
    VerifierReport report;
    if (kind == "exact")
        report = verify_resale_equilibrium(eco, cert.prices, cert.plan,
                                           scalar_traits<T>::parse(value.empty() ? "0" : value));
    else if (kind == "approx")
        report = verify_approx_equilibrium(eco, cert.prices, cert.plan,
                                           scalar_traits<T>::parse(value.empty() ? "1/10" : value));
    else if (kind == "kko")
        report = verify_kko(eco, cert.prices, cert.plan);
    else if (kind == "ad")
        report = verify_ad(eco, cert.prices, cert.plan);
    else
        throw std::invalid_argument("kind must be exact, approx, kko, or ad");
    return report.to_json().dump();
}

template <class T>
std::string gen_impl(const std::string& name, const std::string& b, const std::string& eps_pad,
                     int m, const std::string& alpha) {
    Fixture<T> fix;
    if (name == "broker")
        fix = gen_broker<T>(scalar_traits<T>::parse(b));
    else if (name == "asymmetric-broker")
        fix = gen_asymmetric_broker<T>(scalar_traits<T>::parse(b));
    else if (name == "epsilon-kko")
        fix = gen_epsilon_kko_broker<T>(scalar_traits<T>::parse(eps_pad));
    else if (name == "breadth-chain")
        fix = gen_breadth_chain<T>(m, scalar_traits<T>::parse(b));
    else if (name == "pmax-chain")
        fix = gen_pmax_chain<T>(m, scalar_traits<T>::parse(alpha));
    else
        throw std::invalid_argument("unknown fixture: " + name);
    nlohmann::json out;
    out["economy"] = economy_to_json(fix.economy);
    if (fix.certificate) out["certificate"] = certificate_to_json(*fix.certificate);
    nlohmann::json utils = nlohmann::json::array();
    for (const T& u : fix.utilities) utils.push_back(scalar_to_json(u));
    out["utilities"] = utils;
    return out.dump();
}

template <class T>
std::string brute_impl(const nlohmann::json& doc, int depth, const std::string& tol) {
    auto eco = economy_from_json<T>(doc);
    auto hits = brute_force_search(eco, depth, scalar_traits<T>::parse(tol));
    nlohmann::json out = nlohmann::json::array();
    for (const auto& hit : hits) {
        nlohmann::json h = certificate_to_json(Certificate<T>{hit.prices, hit.plan});
        h["residual"] = scalar_traits<T>::to_double(hit.residual);
        out.push_back(h);
    }
    return out.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Solver and verifiers for graphical exchange economies with resale";

    m.def(
        "check",
        [](const std::string& economy, const std::string& mode) {
            auto doc = nlohmann::json::parse(economy);
            return is_float_mode(doc, mode) ? check_impl<double>(doc) : check_impl<Rational>(doc);
        },
        py::arg("economy"), py::arg("mode") = "",
        "Run the five existence-assumption checks; returns a JSON report.");

    m.def(
        "solve",
        [](const std::string& economy, const std::string& eps, bool force,
           const std::string& instrument, const std::string& mode) {
            auto doc = nlohmann::json::parse(economy);
            return is_float_mode(doc, mode) ? solve_impl<double>(doc, eps, force, instrument)
                                            : solve_impl<Rational>(doc, eps, force, instrument);
        },
        py::arg("economy"), py::arg("eps") = "1/10", py::arg("force") = false,
        py::arg("instrument") = "sampled", py::arg("mode") = "",
        "Run the ascending-price auction; returns certificate and stats as JSON.");

    m.def(
        "verify",
        [](const std::string& economy, const std::string& certificate, const std::string& kind,
           const std::string& value, const std::string& mode) {
            auto doc = nlohmann::json::parse(economy);
            auto cert = nlohmann::json::parse(certificate);
            return is_float_mode(doc, mode) ? verify_impl<double>(doc, cert, kind, value)
                                            : verify_impl<Rational>(doc, cert, kind, value);
        },
        py::arg("economy"), py::arg("certificate"), py::arg("kind") = "exact",
        py::arg("value") = "", py::arg("mode") = "",
        "Verify a certificate: kind is exact, approx, kko, or ad; value is tol or eps.");

    m.def(
        "gen_fixture",
        [](const std::string& name, const std::string& b, const std::string& eps_pad, int m,
           const std::string& alpha, const std::string& mode) {
            return mode == "float" ? gen_impl<double>(name, b, eps_pad, m, alpha)
                                   : gen_impl<Rational>(name, b, eps_pad, m, alpha);
        },
        py::arg("name"), py::arg("b") = "1/2", py::arg("eps_pad") = "1/10", py::arg("m") = 6,
        py::arg("alpha") = "2", py::arg("mode") = "",
        "Emit a worked fixture economy (and analytic certificate when one exists).");

    m.def(
        "brute_force",
        [](const std::string& economy, int depth, const std::string& tol,
           const std::string& mode) {
            auto doc = nlohmann::json::parse(economy);
            return is_float_mode(doc, mode) ? brute_impl<double>(doc, depth, tol)
                                            : brute_impl<Rational>(doc, depth, tol);
        },
        py::arg("economy"), py::arg("depth") = 12, py::arg("tol") = "1/20", py::arg("mode") = "",
        "Grid-search approximate equilibria on desk-scale economies.");

#ifdef VERSION_INFO
#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)
    m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
    m.attr("__version__") = "0.1.0";
#endif
}
