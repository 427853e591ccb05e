// Command-line front end: assumption checking, solving, verifying,
// benchmarking, and fixture generation for graphical economies with resale.
//
// Exit codes: 0 = pass, 1 = semantic failure (check/verify/self-check),
// 2 = usage or file error, 3 = non-termination guard.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "graphecon/assumptions.hpp"
#include "graphecon/auction.hpp"
#include "graphecon/fixtures.hpp"
#include "graphecon/io.hpp"
#include "graphecon/random_economy.hpp"
#include "graphecon/verifier.hpp"

using namespace graphecon;

namespace {

struct CliSettings {
    std::string economy_file;
    std::string certificate_file;
    std::string mode_flag;  // "", "exact", "float"
    std::string eps = "1/10";
    std::string tol = "0";
    std::string out;
    std::string stats_file;
    std::string trace_file;
    std::string price_trace_file;
    std::string instrument = "sampled";
    std::optional<long long> max_raises;
    std::optional<unsigned> seed_order;
    bool force = false;
    bool verify_exact = false;
    bool verify_kko_flag = false;
    bool verify_ad_flag = false;
    std::string verify_approx_eps;
    // bench
    std::string suite;
    int m_min = 3, m_max = 6, count = 20;
    unsigned seed = 1;
    std::string alpha = "2";
    std::string b_value = "1/2";
    // gen
    std::string fixture;
    std::string out_economy;
    std::string out_certificate;
    int m = 6;
    std::string eps_pad = "1/10";
};

NumericMode resolve_mode(const nlohmann::json& doc, const std::string& flag) {
    if (!flag.empty()) return numeric_mode_from_string(flag);
    if (const char* env = std::getenv("GRAPHECON_NUMERIC_MODE"))
        return numeric_mode_from_string(env);
    return economy_file_mode(doc);
}

Instrumentation parse_instrument(const std::string& s) {
    if (s == "off") return Instrumentation::off;
    if (s == "sampled") return Instrumentation::sampled;
    if (s == "full") return Instrumentation::full;
    throw CLI::ValidationError("--instrument must be off, sampled, or full");
}

void emit(const nlohmann::json& doc, const std::string& out) {
    if (out.empty())
        std::cout << doc.dump(2) << std::endl;
    else
        save_json_file(out, doc);
}

template <class T>
int run_check(const nlohmann::json& doc, const CliSettings& cfg) {
    auto eco = economy_from_json<T>(doc);
    auto report = check_assumptions(eco);
    emit(report.to_json(), cfg.out);
    return report.all_pass ? 0 : 1;
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows) {
    std::ofstream out(path);
    out << "event_seq,round,event_type,agent,counterparty,good,amount,price,surplus_after,tau\n";
    for (const auto& r : rows)
        out << r.seq << ',' << r.round << ',' << r.event << ',' << r.agent << ','
            << r.counterparty << ',' << r.good << ',' << r.amount << ',' << r.price << ','
            << r.surplus_after << ',' << r.tau << '\n';
}

void write_price_csv(const std::string& path, const std::vector<PriceRow>& rows) {
    std::ofstream out(path);
    out << "round,agent,good,price\n";
    for (const auto& r : rows)
        out << r.round << ',' << r.agent << ',' << r.good << ',' << r.price << '\n';
}

template <class T>
int run_solve(const nlohmann::json& doc, const CliSettings& cfg) {
    auto eco = economy_from_json<T>(doc);
    T eps = scalar_traits<T>::parse(cfg.eps);
    if (!(eps > T(0))) throw CLI::ValidationError("--eps must be positive");

    EngineOptions<T> opt;
    opt.eps = eps;
    opt.force = cfg.force;
    opt.instrument = parse_instrument(cfg.instrument);
    opt.collect_trace = !cfg.trace_file.empty();
    if (cfg.max_raises) opt.max_raises = *cfg.max_raises;
    if (cfg.seed_order) {
        opt.order.resize(eco.agents);
        for (int i = 0; i < eco.agents; ++i) opt.order[i] = i;
        std::mt19937 rng(*cfg.seed_order);
        std::shuffle(opt.order.begin(), opt.order.end(), rng);
    }

    auto t0 = std::chrono::steady_clock::now();
    RunResult<T> result;
    try {
        AuctionEngine<T> engine(eco, opt);
        result = engine.run();
    } catch (const AssumptionGateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NonTerminationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - t0)
                       .count();

    if (result.commodity_warning)
        std::cerr << "warning: commodity bound resale is outside the engine's approximation "
                     "guarantees (Assumption 2(ii) fails)\n";

    auto self_check = verify_approx_equilibrium(eco, result.prices, result.plan, eps);

    Certificate<T> cert{result.prices, result.plan};
    if (!cfg.out.empty()) save_certificate(cert, cfg.out);

    nlohmann::json stats = result.stats.to_json();
    stats["termination_reason"] = result.termination_reason;
    stats["wall_ms"] = wall_ms;
    stats["self_verification"] = self_check.pass;
    stats["eps"] = cfg.eps;
    if (!cfg.stats_file.empty())
        save_json_file(cfg.stats_file, stats);
    else if (cfg.out.empty())
        std::cout << stats.dump(2) << std::endl;
    else
        std::cout << "solved: " << result.termination_reason << ", rounds "
                  << result.stats.rounds_completed << ", raises "
                  << result.stats.raise_price_calls << ", p_max "
                  << scalar_traits<T>::to_double(result.stats.p_max) << ", self-verify "
                  << (self_check.pass ? "pass" : "FAIL") << std::endl;

    if (!cfg.trace_file.empty()) write_trace_csv(cfg.trace_file, result.trace);
    if (!cfg.price_trace_file.empty()) write_price_csv(cfg.price_trace_file, result.stats.price_rows);

    if (!self_check.pass) {
        std::cerr << "error: self-verification failed: " << self_check.first_failure() << "\n";
        return 1;
    }
    return 0;
}

template <class T>
int run_verify(const nlohmann::json& doc, const CliSettings& cfg) {
    auto eco = economy_from_json<T>(doc);
    auto cert = load_certificate<T>(cfg.certificate_file, eco.agents, eco.goods);
    VerifierReport report;
    try {
        if (cfg.verify_kko_flag) {
            report = verify_kko(eco, cert.prices, cert.plan);
        } else if (cfg.verify_ad_flag) {
            report = verify_ad(eco, cert.prices, cert.plan);
        } else if (!cfg.verify_approx_eps.empty()) {
            T eps = scalar_traits<T>::parse(cfg.verify_approx_eps);
            report = verify_approx_equilibrium(eco, cert.prices, cert.plan, eps);
        } else {
            T tol = scalar_traits<T>::parse(cfg.tol);
            report = verify_resale_equilibrium(eco, cert.prices, cert.plan, tol);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    emit(report.to_json(), cfg.out);
    if (!report.pass) std::cerr << "failed: " << report.first_failure() << "\n";
    return report.pass ? 0 : 1;
}

template <class T>
int run_bench(const CliSettings& cfg) {
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!cfg.out.empty()) {
        file.open(cfg.out);
        out = &file;
    }
    *out << "instance,suite,m,ell,eps,rounds,raises,p_max,wall_ms,clearing_residual,status\n";
    T eps = scalar_traits<T>::parse(cfg.eps);

    auto run_one = [&](int index, const std::string& name, const Economy<T>& eco, bool force) {
        EngineOptions<T> opt;
        opt.eps = eps;
        opt.force = force;
        opt.instrument = Instrumentation::sampled;
        auto t0 = std::chrono::steady_clock::now();
        std::string status = "ok";
        long long rounds = 0, raises = 0;
        double pmax = 0, residual = 0;
        try {
            AuctionEngine<T> engine(eco, opt);
            auto result = engine.run();
            rounds = result.stats.rounds_completed;
            raises = result.stats.raise_price_calls;
            pmax = scalar_traits<T>::to_double(result.stats.p_max);
            for (int i = 0; i < eco.agents; ++i) {
                auto outv = supply_drawn(eco, result.plan, i);
                auto sup = supply_of(eco, result.plan, i);
                for (int k = 0; k < eco.goods; ++k) {
                    double gap = std::abs(scalar_traits<T>::to_double(outv[k] - sup[k]));
                    residual = std::max(residual, gap);
                }
            }
            if (!verify_approx_equilibrium(eco, result.prices, result.plan, eps).pass)
                status = "verify-fail";
        } catch (const std::exception& e) {
            status = std::string("error: ") + e.what();
        }
        auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
        *out << index << ',' << name << ',' << eco.agents << ',' << eco.goods << ',' << cfg.eps
             << ',' << rounds << ',' << raises << ',' << pmax << ',' << wall << ',' << residual
             << ',' << status << '\n';
    };

    if (cfg.suite == "breadth") {
        T b = scalar_traits<T>::parse(cfg.b_value);
        int index = 0;
        for (int m = cfg.m_min; m <= cfg.m_max; ++m)
            run_one(index++, "breadth", gen_breadth_chain<T>(m, b).economy, false);
    } else if (cfg.suite == "pmax") {
        T alpha = scalar_traits<T>::parse(cfg.alpha);
        int index = 0;
        for (int m = cfg.m_min; m <= cfg.m_max; ++m)
            run_one(index++, "pmax", gen_pmax_chain<T>(m, alpha).economy, true);
    } else if (cfg.suite == "random") {
        std::mt19937 rng(cfg.seed);
        int index = 0;
        int attempts = 0;
        while (index < cfg.count && attempts < cfg.count * 200) {
            ++attempts;
            Economy<T> eco = random_admissible_economy<T>(rng, 6, 4);
            if (!check_assumptions(eco).all_pass) continue;
            run_one(index++, "random", eco, false);
        }
    } else {
        throw CLI::ValidationError("--suite must be breadth, pmax, or random");
    }
    return 0;
}

template <class T>
int run_gen(const CliSettings& cfg) {
    Fixture<T> fix;
    if (cfg.fixture == "broker")
        fix = gen_broker<T>(scalar_traits<T>::parse(cfg.b_value));
    else if (cfg.fixture == "asymmetric-broker")
        fix = gen_asymmetric_broker<T>(scalar_traits<T>::parse(cfg.b_value));
    else if (cfg.fixture == "epsilon-kko")
        fix = gen_epsilon_kko_broker<T>(scalar_traits<T>::parse(cfg.eps_pad));
    else if (cfg.fixture == "breadth-chain")
        fix = gen_breadth_chain<T>(cfg.m, scalar_traits<T>::parse(cfg.b_value));
    else if (cfg.fixture == "pmax-chain")
        fix = gen_pmax_chain<T>(cfg.m, scalar_traits<T>::parse(cfg.alpha));
    else
        throw CLI::ValidationError("unknown fixture: " + cfg.fixture);
    if (cfg.out_economy.empty()) throw CLI::ValidationError("--out-economy is required");
    save_economy(fix.economy, cfg.out_economy);
    if (!cfg.out_certificate.empty()) {
        if (!fix.certificate)
            throw CLI::ValidationError("fixture " + cfg.fixture + " has no analytic certificate");
        save_certificate(*fix.certificate, cfg.out_certificate);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graphecon: solver and verifier for graphical economies with resale"};
    app.require_subcommand(1);
    CliSettings cfg;

    auto* check = app.add_subcommand("check", "check the five existence assumptions");
    check->add_option("economy", cfg.economy_file)->required();
    check->add_option("--out", cfg.out, "write the JSON report here instead of stdout");
    check->add_option("--mode", cfg.mode_flag)->check(CLI::IsMember({"exact", "float"}));

    auto* solve = app.add_subcommand("solve", "compute a (1+eps)-approximate b-resale equilibrium");
    solve->add_option("economy", cfg.economy_file)->required();
    solve->add_option("--eps", cfg.eps, "accuracy parameter (rational like 1/20, or decimal)");
    solve->add_option("--mode", cfg.mode_flag)->check(CLI::IsMember({"exact", "float"}));
    solve->add_option("--out", cfg.out, "certificate output file");
    solve->add_option("--stats", cfg.stats_file, "stats JSON output file");
    solve->add_option("--trace", cfg.trace_file, "per-event trace CSV");
    solve->add_option("--price-trace", cfg.price_trace_file, "price trajectory CSV");
    solve->add_option("--max-raises", cfg.max_raises, "non-termination guard on raise_price calls");
    solve->add_option("--seed-order", cfg.seed_order, "shuffle the round-robin order with this seed");
    solve->add_flag("--force", cfg.force, "run even if the existence assumptions fail");
    solve->add_option("--instrument", cfg.instrument)->check(CLI::IsMember({"off", "sampled", "full"}));

    auto* verify = app.add_subcommand("verify", "verify a certificate against an economy");
    verify->add_option("economy", cfg.economy_file)->required();
    verify->add_option("certificate", cfg.certificate_file)->required();
    verify->add_option("--mode", cfg.mode_flag)->check(CLI::IsMember({"exact", "float"}));
    verify->add_option("--tol", cfg.tol, "tolerance for the exact check");
    verify->add_option("--out", cfg.out);
    auto* fe = verify->add_flag("--exact", cfg.verify_exact, "Def. 3.2 b-resale equilibrium");
    auto* fa = verify->add_option("--approx", cfg.verify_approx_eps, "Def. 5.2 at this eps");
    auto* fk = verify->add_flag("--kko", cfg.verify_kko_flag, "Def. 2.3 KKO equilibrium");
    auto* fd = verify->add_flag("--ad", cfg.verify_ad_flag, "Def. 2.1 AD equilibrium");
    fe->excludes(fa)->excludes(fk)->excludes(fd);
    fa->excludes(fk)->excludes(fd);
    fk->excludes(fd);

    auto* bench = app.add_subcommand("bench", "sweep a generator suite and emit CSV results");
    bench->add_option("--suite", cfg.suite)->required()->check(CLI::IsMember({"breadth", "pmax", "random"}));
    bench->add_option("--m-min", cfg.m_min);
    bench->add_option("--m-max", cfg.m_max);
    bench->add_option("--count", cfg.count);
    bench->add_option("--seed", cfg.seed);
    bench->add_option("--eps", cfg.eps);
    bench->add_option("--alpha", cfg.alpha);
    bench->add_option("--b", cfg.b_value);
    bench->add_option("--mode", cfg.mode_flag)->check(CLI::IsMember({"exact", "float"}));
    bench->add_option("--out", cfg.out);

    auto* gen = app.add_subcommand("gen", "emit a worked fixture economy (and certificate)");
    gen->add_option("fixture", cfg.fixture)->required()->check(CLI::IsMember(
        {"broker", "asymmetric-broker", "epsilon-kko", "breadth-chain", "pmax-chain"}));
    gen->add_option("--b", cfg.b_value);
    gen->add_option("--eps-pad", cfg.eps_pad);
    gen->add_option("--m", cfg.m);
    gen->add_option("--alpha", cfg.alpha);
    gen->add_option("--mode", cfg.mode_flag)->check(CLI::IsMember({"exact", "float"}));
    gen->add_option("--out-economy", cfg.out_economy);
    gen->add_option("--out-certificate", cfg.out_certificate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        bool floating = false;
        nlohmann::json doc;
        if (check->parsed() || solve->parsed() || verify->parsed()) {
            doc = load_json_file(cfg.economy_file);
            floating = resolve_mode(doc, cfg.mode_flag) == NumericMode::floating;
        } else {
            std::string flag = cfg.mode_flag;
            if (flag.empty())
                if (const char* env = std::getenv("GRAPHECON_NUMERIC_MODE")) flag = env;
            floating = !flag.empty() && numeric_mode_from_string(flag) == NumericMode::floating;
        }
        if (check->parsed()) return floating ? run_check<double>(doc, cfg) : run_check<Rational>(doc, cfg);
        if (solve->parsed()) return floating ? run_solve<double>(doc, cfg) : run_solve<Rational>(doc, cfg);
        if (verify->parsed()) return floating ? run_verify<double>(doc, cfg) : run_verify<Rational>(doc, cfg);
        if (bench->parsed()) return floating ? run_bench<double>(cfg) : run_bench<Rational>(cfg);
        if (gen->parsed()) return floating ? run_gen<double>(cfg) : run_gen<Rational>(cfg);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const EconomyError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NonTerminationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
