#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sbarg/core_types.hpp"
#include "sbarg/payoffs.hpp"

namespace sbarg {

enum class Role { Entrepreneur, Investor };
enum class ConcessionCurve { Linear, Geometric };

inline std::string_view to_string(Role r) {
    return r == Role::Entrepreneur ? "Entrepreneur" : "Investor";
}

inline std::string_view to_string(ConcessionCurve c) {
    return c == ConcessionCurve::Linear ? "Linear" : "Geometric";
}

inline ConcessionCurve parse_concession(std::string_view s) {
    auto k = detail::lower_alnum(s);
    if (k == "linear") return ConcessionCurve::Linear;
    if (k == "geometric") return ConcessionCurve::Geometric;
    throw InvalidParameter("unknown concession curve '" + std::string(s) + "'");
}

struct ProtocolConfig {
    int tick_count;
    Institution institution;
    Contract contract;
    MarketParams params;
    // Chance that the active party lets a tick pass without a new offer.
    // The opening offer at tick 1 is always made.
    double hesitation = 0.1;
    ProrationRule proration = ProrationRule::Linear;

    // One tick per second: 90 for SI, 180 for TI.
    static ProtocolConfig defaults(Institution inst, Contract contract, const MarketParams& mp) {
        return {inst == Institution::SI ? 90 : 180, inst, contract, mp};
    }

    void validate() const {
        if (tick_count < 2) throw InvalidParameter("tick_count must be >= 2");
        if (institution == Institution::TIL) throw InvalidParameter("the protocol covers SI and TI");
        if (!(hesitation >= 0 && hesitation < 1)) throw InvalidParameter("hesitation must lie in [0, 1)");
        if (contract == Contract::Preferred && params.alpha_l() != 1.0)
            throw InvalidParameter("Preferred contracts require alpha_l = 1");
    }
    int channels() const { return investor_count(institution); }
};

// Shares are always the investor's proposed share of the firm.
struct AgentStrategy {
    double opening_share;
    double reservation_share;
    ConcessionCurve curve = ConcessionCurve::Linear;
    double geometric_rate = 0.95; // per-tick gap multiplier for Geometric

    void validate(Role role) const {
        auto in01 = [](double x) { return x >= 0 && x <= 1; };
        if (!in01(opening_share) || !in01(reservation_share))
            throw InvalidParameter("strategy shares must lie in [0, 1]");
        if (role == Role::Investor && opening_share < reservation_share)
            throw InvalidParameter("investor opening must be >= reservation");
        if (role == Role::Entrepreneur && opening_share > reservation_share)
            throw InvalidParameter("entrepreneur opening must be <= reservation");
        if (curve == ConcessionCurve::Geometric && !(geometric_rate > 0 && geometric_rate < 1))
            throw InvalidParameter("geometric_rate must lie in (0, 1)");
    }

    // Offer planned for tick index t in [0, T-1]; reaches the reservation
    // share at the last tick.
    double planned_offer(int t, int T) const {
        const double gap = opening_share - reservation_share;
        if (T <= 1) return reservation_share;
        if (curve == ConcessionCurve::Linear)
            return opening_share - gap * (static_cast<double>(t) / (T - 1));
        const double q = geometric_rate;
        const double qend = std::pow(q, T - 1);
        const double w = (std::pow(q, t) - qend) / (1 - qend);
        return reservation_share + gap * w;
    }
};

struct OfferEvent {
    int tick;       // 1-based
    Role proposer;  // who made the offer (for acceptances: the accepted offer's author)
    int channel;    // 0-based investor index
    double share;   // proposed investor share
    bool accepted;

    friend bool operator==(const OfferEvent&, const OfferEvent&) = default;
};

struct ChannelResult {
    bool agreed = false;
    double share = 0.0;
    int tick = -1;
    std::optional<double> entrepreneur_first;
    std::optional<double> investor_first;

    friend bool operator==(const ChannelResult&, const ChannelResult&) = default;
};

struct NegotiationTranscript {
    std::vector<OfferEvent> events; // ordered by (tick, channel)
    std::vector<ChannelResult> channels;
    std::vector<double> investments;
    std::vector<double> shares;
    double expected_profit_e = 0.0;
    std::vector<double> expected_profit_i;

    double entrepreneur_share() const {
        double s = 1;
        for (double x : shares) s -= x;
        return s;
    }
    int agreements() const {
        return static_cast<int>(std::count_if(channels.begin(), channels.end(),
                                              [](const ChannelResult& c) { return c.agreed; }));
    }

    friend bool operator==(const NegotiationTranscript&, const NegotiationTranscript&) = default;
};

// Independent stream per channel, derived from the master seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

inline std::uint64_t channel_seed(std::uint64_t seed, int channel) {
    return derive_seed(seed, 0xC4A77E1ULL, static_cast<std::uint64_t>(channel));
}

namespace detail {

inline std::vector<OfferEvent> run_channel(const ProtocolConfig& cfg, const AgentStrategy& ent,
                                           const AgentStrategy& inv, int channel, std::uint64_t seed,
                                           ChannelResult& res) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<OfferEvent> ev;
    const int T = cfg.tick_count;
    Role active = unif(rng) < 0.5 ? Role::Entrepreneur : Role::Investor;
    std::optional<double> standing_e, standing_i;

    for (int t = 1; t <= T; ++t) {
        const double u = unif(rng); // drawn every tick so the stream is state-independent
        const bool is_ent = active == Role::Entrepreneur;
        const double planned = (is_ent ? ent : inv).planned_offer(t - 1, T);
        const auto& counter = is_ent ? standing_i : standing_e;
        const bool acceptable =
            counter && (is_ent ? *counter <= planned : *counter >= planned);
        if (acceptable) {
            const Role author = is_ent ? Role::Investor : Role::Entrepreneur;
            ev.push_back({t, author, channel, *counter, true});
            res.agreed = true;
            res.share = *counter;
            res.tick = t;
            return ev;
        }
        if (t == 1 || u >= cfg.hesitation) {
            ev.push_back({t, active, channel, planned, false});
            (is_ent ? standing_e : standing_i) = planned;
            auto& first = is_ent ? res.entrepreneur_first : res.investor_first;
            if (!first) first = planned;
        }
        active = is_ent ? Role::Investor : Role::Entrepreneur;
    }
    return ev;
}

} // namespace detail

// Runs each channel on its own RNG stream; channel_seeds has one entry per
// channel.
inline NegotiationTranscript run_negotiation_streams(const ProtocolConfig& cfg, const AgentStrategy& ent,
                                                     const std::vector<AgentStrategy>& investors,
                                                     const std::vector<std::uint64_t>& channel_seeds) {
    cfg.validate();
    const int n = cfg.channels();
    if (static_cast<int>(investors.size()) != n)
        throw InvalidParameter("need one investor strategy per channel");
    if (static_cast<int>(channel_seeds.size()) != n) throw InvalidParameter("need one seed per channel");
    ent.validate(Role::Entrepreneur);
    for (const auto& s : investors) s.validate(Role::Investor);
    if (n * std::max(ent.opening_share, ent.reservation_share) > 1 + 1e-12)
        throw InvalidParameter("entrepreneur could grant more than the whole firm across channels");

    NegotiationTranscript tr;
    tr.channels.resize(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c) {
        auto ev = detail::run_channel(cfg, ent, investors[c], c, channel_seeds[c], tr.channels[c]);
        tr.events.insert(tr.events.end(), ev.begin(), ev.end());
    }
    std::stable_sort(tr.events.begin(), tr.events.end(), [](const OfferEvent& a, const OfferEvent& b) {
        return a.tick != b.tick ? a.tick < b.tick : a.channel < b.channel;
    });

    // All-or-nothing investments; disagreement leaves the outside option,
    // pro-rated by the unfunded fraction.
    const Scenario sc(cfg.institution, cfg.contract, cfg.params,
                      BargainingPowers(std::vector<double>(static_cast<std::size_t>(n), 0.5)),
                      BeliefModel::Standard, RiskProfile{}, cfg.proration);
    double secured = 0;
    for (int c = 0; c < n; ++c) {
        const bool ok = tr.channels[c].agreed;
        tr.investments.push_back(ok ? sc.endowment(c) : 0.0);
        tr.shares.push_back(ok ? tr.channels[c].share : 0.0);
        secured += tr.investments.back();
    }
    const auto pr = expected_profits(sc, tr.investments, tr.shares);
    tr.expected_profit_e = pr.entrepreneur;
    if (secured > 0) tr.expected_profit_e += prorated_outside_option(sc, secured);
    tr.expected_profit_i = pr.investors;
    return tr;
}

inline NegotiationTranscript run_negotiation(const ProtocolConfig& cfg, const AgentStrategy& ent,
                                             const std::vector<AgentStrategy>& investors,
                                             std::uint64_t seed) {
    std::vector<std::uint64_t> seeds;
    for (int c = 0; c < cfg.channels(); ++c) seeds.push_back(channel_seed(seed, c));
    return run_negotiation_streams(cfg, ent, investors, seeds);
}

// ---------------------------------------------------------------------------
// Batches

// Opening ~ N(opening_mean, opening_sd); reservation = opening + N(offset_mean,
// offset_sd). Both clamped to [0, cap] and ordered for the role.
struct StrategyDistribution {
    double opening_mean;
    double opening_sd = 0.0;
    double offset_mean = 0.0;
    double offset_sd = 0.0;
    ConcessionCurve curve = ConcessionCurve::Linear;
    double geometric_rate = 0.95;

    AgentStrategy draw(std::mt19937_64& rng, Role role, double cap) const {
        std::normal_distribution<double> z(0.0, 1.0);
        const double z1 = z(rng), z2 = z(rng);
        double open = std::clamp(opening_mean + opening_sd * z1, 0.0, cap);
        double res = std::clamp(open + offset_mean + offset_sd * z2, 0.0, cap);
        if (role == Role::Investor) res = std::min(res, open);
        else res = std::max(res, open);
        return {open, res, curve, geometric_rate};
    }
};

struct StrategyPopulation {
    StrategyDistribution entrepreneur;
    std::vector<StrategyDistribution> investors; // one entry applies to every channel
};

struct SimStats {
    int n_rounds = 0;
    double full_rate = 0.0;
    double partial_rate = 0.0;
    double none_rate = 0.0;
    double mean_entrepreneur_share_full = std::numeric_limits<double>::quiet_NaN();
    double mean_investor_share_full = std::numeric_limits<double>::quiet_NaN();
    double mean_entrepreneur_profit = 0.0;
    std::vector<NegotiationTranscript> transcripts; // kept only on request
};

inline SimStats run_batch(const ProtocolConfig& cfg, const StrategyPopulation& pop, int n_rounds,
                          std::uint64_t seed, bool keep_transcripts = false) {
    cfg.validate();
    if (n_rounds < 1) throw InvalidParameter("n_rounds must be >= 1");
    const int n = cfg.channels();
    if (pop.investors.empty() || (pop.investors.size() != 1 && static_cast<int>(pop.investors.size()) != n))
        throw InvalidParameter("investor distributions must have 1 entry or one per channel");
    const double ent_cap = 1.0 / n;

    SimStats st;
    st.n_rounds = n_rounds;
    int full = 0, partial = 0, none = 0;
    double sum_se = 0, sum_si = 0, sum_profit = 0;
    for (int r = 0; r < n_rounds; ++r) {
        std::mt19937_64 rng(derive_seed(seed, 0x57A7ULL, static_cast<std::uint64_t>(r)));
        const auto ent = pop.entrepreneur.draw(rng, Role::Entrepreneur, ent_cap);
        std::vector<AgentStrategy> invs;
        for (int c = 0; c < n; ++c) {
            const auto& d = pop.investors.size() == 1 ? pop.investors[0] : pop.investors[c];
            invs.push_back(d.draw(rng, Role::Investor, 1.0));
        }
        auto tr = run_negotiation(cfg, ent, invs, derive_seed(seed, 0x7E60ULL, static_cast<std::uint64_t>(r)));
        const int k = tr.agreements();
        if (k == n) {
            ++full;
            sum_se += tr.entrepreneur_share();
            sum_si += 1.0 - tr.entrepreneur_share();
        } else if (k == 0) {
            ++none;
        } else {
            ++partial;
        }
        sum_profit += tr.expected_profit_e;
        if (keep_transcripts) st.transcripts.push_back(std::move(tr));
    }
    st.full_rate = static_cast<double>(full) / n_rounds;
    st.partial_rate = static_cast<double>(partial) / n_rounds;
    st.none_rate = static_cast<double>(none) / n_rounds;
    if (full > 0) {
        st.mean_entrepreneur_share_full = sum_se / full;
        st.mean_investor_share_full = sum_si / full;
    }
    st.mean_entrepreneur_profit = sum_profit / n_rounds;
    return st;
}

// Opening offers observed in the experiment (proposed investor share) with
// symmetric linear concession: each side may concede `reach` of the gap
// between the two openings.
inline StrategyPopulation calibrated_population(Arm arm, Institution inst, double reach = 0.5,
                                                double opening_sd = 0.05, double offset_sd = 0.05) {
    double ent = 0, inv = 0;
    const bool poor = arm == Arm::PoorEnt;
    if (inst == Institution::SI) {
        ent = poor ? 0.3697 : 0.4030;
        inv = poor ? 0.7077 : 0.6513;
    } else if (inst == Institution::TI) {
        ent = poor ? 0.2378 : 0.2331;
        inv = poor ? 0.4429 : 0.4454;
    } else {
        throw InvalidParameter("calibrated openings exist for SI and TI");
    }
    const double gap = inv - ent;
    StrategyPopulation pop;
    pop.entrepreneur = {ent, opening_sd, reach * gap, offset_sd};
    pop.investors = {{inv, opening_sd, -reach * gap, offset_sd}};
    return pop;
}

// ---------------------------------------------------------------------------
// Anchoring regressions

struct OlsFit {
    double intercept;
    double slope_entrepreneur_first;
    double slope_investor_first;
    int n;
};

struct ChannelAnchoring {
    int channel;
    OlsFit agreement;            // agreement indicator on both first offers
    std::optional<OlsFit> share; // final share on both first offers, agreed rounds only
};

namespace detail {

inline std::optional<OlsFit> ols3(const std::vector<double>& x1, const std::vector<double>& x2,
                                  const std::vector<double>& y) {
    const auto n = static_cast<Eigen::Index>(y.size());
    if (n < 3) return std::nullopt;
    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd Y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = x1[static_cast<std::size_t>(i)];
        X(i, 2) = x2[static_cast<std::size_t>(i)];
        Y(i) = y[static_cast<std::size_t>(i)];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < 3) return std::nullopt;
    const Eigen::VectorXd b = qr.solve(Y);
    return OlsFit{b(0), b(1), b(2), static_cast<int>(n)};
}

} // namespace detail

// Rounds lacking either side's first offer in a channel are skipped.
inline std::vector<ChannelAnchoring> anchoring_stats(const std::vector<NegotiationTranscript>& trs) {
    std::size_t channels = 0;
    for (const auto& t : trs) channels = std::max(channels, t.channels.size());
    if (channels == 0) throw InvalidParameter("no transcripts");
    std::vector<ChannelAnchoring> out;
    for (std::size_t c = 0; c < channels; ++c) {
        std::vector<double> e1, i1, agree, e1s, i1s, share;
        for (const auto& t : trs) {
            if (c >= t.channels.size()) continue;
            const auto& ch = t.channels[c];
            if (!ch.entrepreneur_first || !ch.investor_first) continue;
            e1.push_back(*ch.entrepreneur_first);
            i1.push_back(*ch.investor_first);
            agree.push_back(ch.agreed ? 1.0 : 0.0);
            if (ch.agreed) {
                e1s.push_back(*ch.entrepreneur_first);
                i1s.push_back(*ch.investor_first);
                share.push_back(ch.share);
            }
        }
        if (e1.size() < 10)
            throw InvalidParameter("channel " + std::to_string(c) +
                                   ": need >= 10 transcripts with both first offers");
        const auto fa = detail::ols3(e1, i1, agree);
        if (!fa) throw DomainError("degenerate design matrix: first offers lack variation");
        out.push_back({static_cast<int>(c), *fa, detail::ols3(e1s, i1s, share)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Export

inline std::string transcript_to_jsonl(const NegotiationTranscript& tr, std::optional<int> round = std::nullopt) {
    std::string out;
    for (const auto& e : tr.events) {
        nlohmann::json j;
        if (round) j["round"] = *round;
        j["tick"] = e.tick;
        j["proposer"] = to_string(e.proposer);
        j["channel"] = e.channel;
        j["share"] = e.share;
        j["accepted"] = e.accepted;
        out += j.dump();
        out += '\n';
    }
    return out;
}

inline std::string sim_stats_csv_header() {
    return "n_rounds,full_rate,partial_rate,none_rate,mean_entrepreneur_share_full,"
           "mean_investor_share_full,mean_entrepreneur_profit";
}

inline std::string sim_stats_csv_row(const SimStats& s) {
    auto num = [](double x) {
        if (std::isnan(x)) return std::string();
        return nlohmann::json(x).dump();
    };
    std::ostringstream os;
    os << s.n_rounds << ',' << num(s.full_rate) << ',' << num(s.partial_rate) << ',' << num(s.none_rate) << ','
       << num(s.mean_entrepreneur_share_full) << ',' << num(s.mean_investor_share_full) << ','
       << num(s.mean_entrepreneur_profit);
    return os.str();
}

} // namespace sbarg
