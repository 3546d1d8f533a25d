#pragma once

// Command-line front end: solve, sweep, estimate, simulate, analyze.
// Exit codes: 0 ok, 2 invalid flags or input, 3 model-domain error,
// 4 numeric failure.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sbarg/closed_form.hpp"
#include "sbarg/core_types.hpp"
#include "sbarg/estimation.hpp"
#include "sbarg/funding_analysis.hpp"
#include "sbarg/json_io.hpp"
#include "sbarg/nash_numeric.hpp"
#include "sbarg/negotiation_sim.hpp"

namespace sbarg::cli {

enum ExitCode : int { Ok = 0, InvalidFlags = 2, ModelDomain = 3, Numeric = 4 };

struct Flags {
    std::optional<std::string> institution, contract, arm, belief, proration;
    std::optional<double> e, alpha_h, alpha_l, p, de;
    std::vector<double> theta, risk;
    std::uint64_t seed = 0;
    std::optional<std::string> out;
    std::string method = "auto";
};

enum class Method { Auto, Closed, Numeric };

inline Method parse_method(const std::string& s) {
    const auto k = detail::lower_alnum(s);
    if (k == "auto") return Method::Auto;
    if (k == "closed") return Method::Closed;
    if (k == "numeric") return Method::Numeric;
    throw InvalidParameter("unknown --method '" + s + "'");
}

inline bool want_csv(const Flags& f, bool csv_default) {
    if (!f.out) return csv_default;
    const auto k = detail::lower_alnum(*f.out);
    if (k == "csv") return true;
    if (k == "json") return false;
    throw InvalidParameter("--out must be json or csv");
}

// --arm picks the experimental preset; explicit flags override its fields.
inline Scenario build_scenario(const Flags& f, bool need_institution = true) {
    if (need_institution && !f.institution) throw InvalidParameter("--institution is required");
    const Institution inst = f.institution ? parse_institution(*f.institution) : Institution::SI;
    const Contract contract = f.contract ? parse_contract(*f.contract) : Contract::Common;

    double e = 0, ah = 0, al = 0, p = 0, de = 0;
    if (f.arm) {
        const auto base = make_paper_scenario(parse_arm(*f.arm), inst, contract).params();
        e = base.e();
        ah = base.alpha_h();
        al = base.alpha_l();
        p = base.p();
        de = base.d_e();
    } else {
        if (!f.e || !f.alpha_h || !f.alpha_l || !f.p)
            throw InvalidParameter("without --arm, --e, --alpha-h, --alpha-l and --p are required");
    }
    if (f.e) e = *f.e;
    if (f.alpha_h) ah = *f.alpha_h;
    if (f.alpha_l) al = *f.alpha_l;
    if (f.p) p = *f.p;
    if (f.de) de = *f.de;
    const MarketParams mp(e, ah, al, p, de);

    const int n = investor_count(inst);
    std::vector<double> theta = f.theta.empty() ? std::vector<double>{0.5} : f.theta;
    if (theta.size() == 1 && n == 2) theta.push_back(theta[0]);
    if (static_cast<int>(theta.size()) != n)
        throw InvalidParameter("--theta needs 1 or " + std::to_string(n) + " values for this institution");

    const BeliefModel belief = f.belief ? parse_belief(*f.belief) : BeliefModel::Standard;
    if (belief == BeliefModel::JointDisagreement && inst == Institution::SI)
        throw InvalidParameter("--belief joint conflicts with --institution si");

    RiskProfile risk;
    if (!f.risk.empty()) {
        if (f.risk.size() < 2 || f.risk.size() > 3)
            throw InvalidParameter("--risk takes rho_e,rho_i or rho_e,rho_1,rho_2");
        if (f.risk.size() == 3 && n == 1) throw InvalidParameter("--risk has two investor exponents but SI has one");
        risk = RiskProfile(f.risk[0], std::vector<double>(f.risk.begin() + 1, f.risk.end()));
    }
    const ProrationRule pr = f.proration ? parse_proration(*f.proration) : ProrationRule::Linear;
    return Scenario(inst, contract, mp, BargainingPowers(theta), belief, risk, pr);
}

inline EquilibriumSet solve_scenario(const Scenario& sc, Method m) {
    if (m == Method::Auto) m = sc.risk().neutral() ? Method::Closed : Method::Numeric;
    if (m == Method::Closed) {
        if (!sc.risk().neutral()) throw InvalidParameter("--method closed conflicts with a non-neutral --risk");
        return solve_closed_form(sc);
    }
    EquilibriumSet set;
    if (sc.institution() == Institution::TIL || sc.risk().neutral())
        set.outcomes.push_back(solve_numeric(sc));
    else
        set.outcomes.push_back(solve_risk_averse(sc, sc.risk()));
    return set;
}

inline std::string num(double x) { return nlohmann::json(x).dump(); }

inline std::string outcome_csv_header() {
    return "institution,contract,belief,d_e,theta_1,theta_2,rho_e,rho_inv,regime,entrepreneur_share,"
           "share_1,share_2,investment_1,investment_2,profit_e,profit_1,profit_2";
}

inline std::string outcome_csv_row(const Scenario& sc, const EquilibriumOutcome& o) {
    auto at = [](const std::vector<double>& v, std::size_t i) { return i < v.size() ? num(v[i]) : std::string(); };
    std::ostringstream os;
    os << to_string(sc.institution()) << ',' << to_string(sc.contract()) << ',' << to_string(sc.belief()) << ','
       << num(sc.params().d_e()) << ',' << at(sc.powers().theta(), 0) << ',' << at(sc.powers().theta(), 1) << ','
       << num(sc.risk().rho_e()) << ',' << num(sc.risk().rho_investor(0)) << ',' << o.regime_label() << ','
       << num(o.entrepreneur_share()) << ',' << at(o.shares(), 0) << ',' << at(o.shares(), 1) << ','
       << at(o.investments(), 0) << ',' << at(o.investments(), 1) << ',' << num(o.expected_profit_e()) << ','
       << at(o.expected_profit_i(), 0) << ',' << at(o.expected_profit_i(), 1);
    return os.str();
}

// ---------------------------------------------------------------------------

inline int cmd_solve(const Flags& f, std::ostream& out) {
    const auto sc = build_scenario(f);
    const auto m = parse_method(f.method);
    const auto set = solve_scenario(sc, m);
    if (want_csv(f, false)) {
        out << outcome_csv_header() << '\n';
        for (const auto& o : set.outcomes) out << outcome_csv_row(sc, o) << '\n';
        return Ok;
    }
    nlohmann::json j = to_json(set);
    j["scenario"] = sc;
    out << j.dump(2) << '\n';
    return Ok;
}

struct GridAxis {
    std::string key;
    std::vector<double> values;
};

inline GridAxis parse_grid(const std::string& arg) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos) throw InvalidParameter("--grid expects key=v1,v2,...");
    GridAxis g;
    g.key = detail::lower_alnum(arg.substr(0, eq));
    if (g.key != "de" && g.key != "theta" && g.key != "rhoe" && g.key != "rhoinv")
        throw InvalidParameter("--grid key must be one of de, theta, rho_e, rho_inv");
    std::stringstream ss(arg.substr(eq + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = csv::trim(tok);
        if (tok.empty()) continue;
        const auto v = csv::parse_double(tok);
        if (!v) throw InvalidParameter("--grid value '" + tok + "' is not a number");
        g.values.push_back(*v);
    }
    if (g.values.empty()) throw InvalidParameter("--grid " + g.key + " has no values");
    return g;
}

inline Flags apply_grid(Flags f, const GridAxis& g, double v) {
    if (g.key == "de") {
        f.de = v;
    } else if (g.key == "theta") {
        f.theta = {v};
    } else {
        double re = f.risk.empty() ? 0.0 : f.risk[0];
        double ri = f.risk.size() > 1 ? f.risk[1] : 0.0;
        (g.key == "rhoe" ? re : ri) = v;
        f.risk = {re, ri};
    }
    return f;
}

// Rows ordered by contract, institution, then grid axes in the order given.
inline int cmd_sweep(const Flags& f, const std::vector<std::string>& grids,
                     const std::vector<std::string>& institutions, const std::vector<std::string>& contracts,
                     std::ostream& out) {
    if (grids.empty()) throw InvalidParameter("sweep needs at least one --grid");
    if (grids.size() > 2) throw InvalidParameter("sweep takes one or two --grid axes");
    std::vector<GridAxis> axes;
    for (const auto& g : grids) axes.push_back(parse_grid(g));
    if (axes.size() == 2 && axes[0].key == axes[1].key) throw InvalidParameter("duplicate --grid axis");
    const auto m = parse_method(f.method);

    std::vector<std::string> insts = institutions, cons = contracts;
    if (insts.empty()) insts.push_back(f.institution.value_or("si"));
    if (cons.empty()) cons.push_back(f.contract.value_or("common"));

    std::vector<Flags> points;
    for (const auto& c : cons)
        for (const auto& i : insts) {
            Flags base = f;
            base.contract = c;
            base.institution = i;
            const auto& a0 = axes[0];
            for (double v0 : a0.values) {
                Flags p0 = apply_grid(base, a0, v0);
                if (axes.size() == 1) {
                    points.push_back(p0);
                    continue;
                }
                for (double v1 : axes[1].values) points.push_back(apply_grid(p0, axes[1], v1));
            }
        }

    std::vector<Scenario> scenarios;
    for (const auto& p : points) scenarios.push_back(build_scenario(p));

    // Parallel over grid points; results land in input order.
    std::vector<std::optional<EquilibriumOutcome>> results(scenarios.size());
    std::vector<std::exception_ptr> errors(scenarios.size());
    const std::size_t workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), 8u));
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < workers; ++w)
        jobs.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t k = w; k < scenarios.size(); k += workers) {
                try {
                    results[k] = solve_scenario(scenarios[k], m).primary();
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            }
        }));
    for (auto& j : jobs) j.get();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    if (want_csv(f, true)) {
        out << outcome_csv_header() << '\n';
        for (std::size_t k = 0; k < scenarios.size(); ++k) out << outcome_csv_row(scenarios[k], *results[k]) << '\n';
        return Ok;
    }
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t k = 0; k < scenarios.size(); ++k)
        rows.push_back({{"scenario", scenarios[k]}, {"outcome", *results[k]}});
    out << nlohmann::json{{"rows", rows}}.dump(2) << '\n';
    return Ok;
}

inline int cmd_estimate(const Flags& f, const std::string& data, const std::optional<std::string>& model,
                        bool separate, std::ostream& out) {
    const auto obs = read_observations_csv(data);
    std::vector<ModelComparisonRow> rows;
    if (model) {
        const auto tag = parse_model_tag(*model);
        auto fit = fit_theta(obs, tag, !separate);
        rows.push_back({obs.front().institution, tag, std::move(fit), false});
    } else {
        if (separate) throw InvalidParameter("--separate needs --model");
        rows = compare_models(obs);
    }
    if (want_csv(f, false)) {
        out << "institution,model,theta_hat,mse,coincides_with_revised_i\n";
        for (const auto& r : rows) {
            std::string th;
            for (std::size_t i = 0; i < r.fit.theta_hat.size(); ++i)
                th += (i ? ";" : "") + num(r.fit.theta_hat[i]);
            out << (model ? std::string("All") : std::string(to_string(r.institution))) << ','
                << to_string(r.model) << ',' << th << ',' << num(r.fit.mse) << ','
                << (r.coincides_with_revised_i ? "true" : "false") << '\n';
        }
        return Ok;
    }
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json j{{"model", to_string(r.model)},
                         {"theta_hat", r.fit.theta_hat},
                         {"mse", r.fit.mse},
                         {"residuals", r.fit.residuals},
                         {"coincides_with_revised_i", r.coincides_with_revised_i}};
        j["institution"] = model ? nlohmann::json("All") : nlohmann::json(to_string(r.institution));
        arr.push_back(j);
    }
    out << nlohmann::json{{"rows", arr}}.dump(2) << '\n';
    return Ok;
}

struct SimFlags {
    int rounds = 1000;
    std::optional<int> ticks;
    double hesitation = 0.1;
    double reach = 0.5;
    std::optional<double> ent_opening, inv_opening;
    std::optional<std::string> transcripts;
};

inline int cmd_simulate(const Flags& f, const SimFlags& s, std::ostream& out) {
    const auto sc = build_scenario(f);
    auto cfg = ProtocolConfig::defaults(sc.institution(), sc.contract(), sc.params());
    if (s.ticks) cfg.tick_count = *s.ticks;
    cfg.hesitation = s.hesitation;
    cfg.proration = sc.proration();
    const Arm arm = f.arm ? parse_arm(*f.arm) : Arm::PoorEnt;
    auto pop = calibrated_population(arm, sc.institution(), s.reach);
    if (s.ent_opening) pop.entrepreneur.opening_mean = *s.ent_opening;
    if (s.inv_opening) pop.investors[0].opening_mean = *s.inv_opening;
    const auto st = run_batch(cfg, pop, s.rounds, f.seed, s.transcripts.has_value());
    if (s.transcripts) {
        std::ofstream tf(*s.transcripts);
        if (!tf) throw DataError("cannot write '" + *s.transcripts + "'");
        for (std::size_t r = 0; r < st.transcripts.size(); ++r)
            tf << transcript_to_jsonl(st.transcripts[r], static_cast<int>(r));
    }
    if (want_csv(f, true)) {
        out << sim_stats_csv_header() << '\n' << sim_stats_csv_row(st) << '\n';
        return Ok;
    }
    auto opt = [](double x) { return std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x); };
    nlohmann::json j{{"n_rounds", st.n_rounds},
                     {"full_rate", st.full_rate},
                     {"partial_rate", st.partial_rate},
                     {"none_rate", st.none_rate},
                     {"mean_entrepreneur_share_full", opt(st.mean_entrepreneur_share_full)},
                     {"mean_investor_share_full", opt(st.mean_investor_share_full)},
                     {"mean_entrepreneur_profit", st.mean_entrepreneur_profit}};
    out << j.dump(2) << '\n';
    return Ok;
}

inline int cmd_analyze(const Flags& f, const std::string& data, bool pooled, bool rates, std::ostream& out,
                       std::ostream& err) {
    const auto ing = ingest_csv(data);
    for (const auto& q : ing.quarantine) err << "quarantined line " << q.line << ": " << q.reason << '\n';
    const auto rows = analyze_rounds(ing.rounds, pooled);
    const auto sr = single_investor_rates(ing.rounds);
    if (want_csv(f, true)) {
        if (rates) {
            out << "stage,single_investor_rate\n";
            for (const auto& [stage, r] : sr) out << to_string(stage) << ',' << num(r) << '\n';
        } else {
            out << decile_csv(rows);
        }
        return Ok;
    }
    auto opt = [](const std::optional<double>& x) { return x ? nlohmann::json(*x) : nlohmann::json(nullptr); };
    nlohmann::json deciles = nlohmann::json::array();
    for (const auto& r : rows)
        deciles.push_back({{"stage", r.stage ? std::string(to_string(*r.stage)) : std::string("Pooled")},
                           {"decile", r.decile},
                           {"n", r.n},
                           {"r", opt(r.corr.r)},
                           {"p", opt(r.corr.p)}});
    nlohmann::json rj = nlohmann::json::object();
    for (const auto& [stage, r] : sr) rj[std::string(to_string(stage))] = r;
    nlohmann::json qj = nlohmann::json::array();
    for (const auto& q : ing.quarantine) qj.push_back({{"line", q.line}, {"reason", q.reason}});
    out << nlohmann::json{{"deciles", deciles}, {"single_investor_rates", rj}, {"quarantine", qj}}.dump(2) << '\n';
    return Ok;
}

// ---------------------------------------------------------------------------

inline int report(std::ostream& err, const Error& e, int code) {
    err << e.name() << ": " << e.what() << '\n';
    return code;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Staged-financing bargaining toolkit", "sbarg"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value file; keys mirror the long flag names");

    Flags f;
    app.add_option("--institution", f.institution, "si | ti | til");
    app.add_option("--contract", f.contract, "common | preferred");
    app.add_option("--arm", f.arm, "poor | rich experimental preset");
    app.add_option("--e", f.e, "capital requirement");
    app.add_option("--alpha-h", f.alpha_h, "high-state return multiple");
    app.add_option("--alpha-l", f.alpha_l, "low-state return multiple");
    app.add_option("--p", f.p, "high-state probability");
    app.add_option("--de", f.de, "entrepreneur outside option");
    app.add_option("--theta", f.theta, "investor bargaining power(s)")->delimiter(',');
    app.add_option("--belief", f.belief, "standard | joint");
    app.add_option("--risk", f.risk, "rho_e,rho_i[,rho_i2]")->delimiter(',');
    app.add_option("--proration", f.proration, "linear | forfeit");
    app.add_option("--seed", f.seed, "RNG seed");
    app.add_option("--out", f.out, "json | csv");
    app.add_option("--method", f.method, "auto | closed | numeric");

    auto* solve = app.add_subcommand("solve", "equilibrium for one scenario")->fallthrough();

    std::vector<std::string> grids, insts, cons;
    auto* sweep = app.add_subcommand("sweep", "grid over de, theta, rho_e, rho_inv")->fallthrough();
    sweep->add_option("--grid", grids, "key=v1,v2,... (repeatable, at most two)");
    sweep->add_option("--institutions", insts, "institution list")->delimiter(',');
    sweep->add_option("--contracts", cons, "contract list")->delimiter(',');

    std::string est_data;
    std::optional<std::string> est_model;
    bool est_separate = false;
    auto* estimate = app.add_subcommand("estimate", "fit bargaining power to observed shares")->fallthrough();
    estimate->add_option("--data", est_data, "CSV: institution,contract,arm,share[,weight]")->required();
    estimate->add_option("--model", est_model, "original | revisedI | revisedII (default: compare all)");
    estimate->add_flag("--separate", est_separate, "separate theta per TI investor");

    SimFlags sf;
    auto* simulate = app.add_subcommand("simulate", "batch of alternating-offer negotiations")->fallthrough();
    simulate->add_option("--rounds", sf.rounds, "number of rounds");
    simulate->add_option("--ticks", sf.ticks, "ticks per negotiation");
    simulate->add_option("--hesitation", sf.hesitation, "per-tick pass probability");
    simulate->add_option("--reach", sf.reach, "mean concession as a fraction of the opening gap");
    simulate->add_option("--ent-opening", sf.ent_opening, "mean entrepreneur opening (investor share)");
    simulate->add_option("--inv-opening", sf.inv_opening, "mean investor opening (investor share)");
    simulate->add_option("--transcripts", sf.transcripts, "write JSONL transcripts here");

    std::string an_data;
    bool an_pooled = false, an_rates = false;
    auto* analyze = app.add_subcommand("analyze", "decile correlations on funding rounds")->fallthrough();
    analyze->add_option("--data", an_data, "CSV: stage,amount,post_money_valuation,investor_count")->required();
    analyze->add_flag("--pooled", an_pooled, "bucket all stages together");
    analyze->add_flag("--rates", an_rates, "print single-investor rates instead of deciles");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return Ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return Ok;
    } catch (const CLI::ParseError& e) {
        err << "InvalidFlags: " << e.what() << '\n';
        return InvalidFlags;
    }

    try {
        if (*solve) return cmd_solve(f, out);
        if (*sweep) return cmd_sweep(f, grids, insts, cons, out);
        if (*estimate) return cmd_estimate(f, est_data, est_model, est_separate, out);
        if (*simulate) return cmd_simulate(f, sf, out);
        if (*analyze) return cmd_analyze(f, an_data, an_pooled, an_rates, out, err);
    } catch (const InvalidParameter& e) {
        return report(err, e, InvalidFlags);
    } catch (const DataError& e) {
        return report(err, e, InvalidFlags);
    } catch (const ModelError& e) {
        return report(err, e, ModelDomain);
    } catch (const NumericError& e) {
        return report(err, e, Numeric);
    }
    return InvalidFlags;
}

} // namespace sbarg::cli
