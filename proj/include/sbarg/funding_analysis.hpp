#pragma once

// Field-data pipeline over funding rounds. Combined investor share is
// amount / post-money valuation.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "sbarg/core_types.hpp"
#include "sbarg/csv.hpp"

namespace sbarg {

enum class Stage { PreSeed, Seed, SeriesAB };

inline std::string_view to_string(Stage s) {
    switch (s) {
    case Stage::PreSeed: return "PreSeed";
    case Stage::Seed: return "Seed";
    case Stage::SeriesAB: return "SeriesAB";
    }
    return "?";
}

inline std::optional<Stage> try_parse_stage(std::string_view s) {
    auto k = detail::lower_alnum(s);
    if (k == "preseed") return Stage::PreSeed;
    if (k == "seed") return Stage::Seed;
    if (k == "seriesab" || k == "seriesa" || k == "seriesb") return Stage::SeriesAB;
    return std::nullopt;
}

struct FundingRound {
    Stage stage;
    double amount;
    double post_money_valuation;
    int investor_count;

    double share() const { return amount / post_money_valuation; }
    friend bool operator==(const FundingRound&, const FundingRound&) = default;
};

struct QuarantineEntry {
    int line;
    std::string reason;
};

struct IngestResult {
    std::vector<FundingRound> rounds;
    std::vector<QuarantineEntry> quarantine;
};

// Empty string when the record is valid.
inline std::string validate_round(const FundingRound& r) {
    if (!(r.amount > 0)) return "nonpositive amount";
    if (!(r.post_money_valuation > 0)) return "nonpositive valuation";
    if (!std::isfinite(r.amount) || !std::isfinite(r.post_money_valuation)) return "non-finite value";
    if (r.investor_count < 1) return "investor_count below 1";
    if (r.share() > 1) return "share exceeds 1 (amount > valuation)";
    return {};
}

inline IngestResult ingest_csv(std::istream& in) {
    const auto t = csv::read(in);
    const auto cs = t.require("stage"), ca = t.require("amount"), cv = t.require("post_money_valuation"),
               cn = t.require("investor_count");
    IngestResult res;
    for (const auto& row : t.rows) {
        auto reject = [&](std::string why) { res.quarantine.push_back({row.line, std::move(why)}); };
        if (row.fields.size() != t.header.size()) {
            reject("expected " + std::to_string(t.header.size()) + " fields, got " +
                   std::to_string(row.fields.size()));
            continue;
        }
        const auto stage = try_parse_stage(row.fields[cs]);
        if (!stage) {
            reject("unknown stage '" + row.fields[cs] + "'");
            continue;
        }
        const auto amount = csv::parse_double(row.fields[ca]);
        const auto val = csv::parse_double(row.fields[cv]);
        const auto count = csv::parse_int(row.fields[cn]);
        if (!amount) { reject("amount is not a number"); continue; }
        if (!val) { reject("post_money_valuation is not a number"); continue; }
        if (!count) { reject("investor_count is not an integer"); continue; }
        if (*count < 1 || *count > 1'000'000'000) { reject("investor_count below 1"); continue; }
        FundingRound r{*stage, *amount, *val, static_cast<int>(*count)};
        if (auto why = validate_round(r); !why.empty()) {
            reject(std::move(why));
            continue;
        }
        res.rounds.push_back(r);
    }
    return res;
}

inline IngestResult ingest_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return ingest_csv(in);
}

// ---------------------------------------------------------------------------
// Statistics

struct Correlation {
    std::optional<double> r; // undefined for n < 3 or zero variance
    std::optional<double> p; // two-sided
};

// Centered two-pass formula.
inline std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw InvalidParameter("pearson: size mismatch");
    const std::size_t n = x.size();
    if (n < 2) return std::nullopt;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0 || syy == 0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// t = r sqrt((n-2)/(1-r^2)) against Student t with n-2 degrees of freedom.
inline double pearson_p_value(double r, std::size_t n) {
    if (n < 3) throw InvalidParameter("p-value needs n >= 3");
    if (std::abs(r) >= 1) return 0.0;
    const double df = static_cast<double>(n - 2);
    const double t = std::abs(r) * std::sqrt(df / (1 - r * r));
    boost::math::students_t dist(df);
    return std::min(1.0, 2 * boost::math::cdf(boost::math::complement(dist, t)));
}

inline Correlation correlate(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() < 3) return {};
    const auto r = pearson(x, y);
    if (!r) return {};
    return {r, pearson_p_value(*r, x.size())};
}

struct DecileRow {
    std::optional<Stage> stage; // empty when pooled
    int decile;                 // 1-based, ascending amount
    int n;
    double amount_lo = 0, amount_hi = 0;
    Correlation corr;
};

namespace detail {

inline bool round_less(const FundingRound& a, const FundingRound& b) {
    if (a.amount != b.amount) return a.amount < b.amount;
    if (a.investor_count != b.investor_count) return a.investor_count < b.investor_count;
    return a.post_money_valuation > b.post_money_valuation;
}

} // namespace detail

// Bucket boundaries sit at floor(k n / B) with B = min(10, n); a boundary
// falling inside a run of equal amounts moves past the run so ties stay in the
// lower bucket. Without ties, sizes differ by at most 1.
inline std::vector<std::vector<FundingRound>> decile_partition(std::vector<FundingRound> rounds) {
    std::sort(rounds.begin(), rounds.end(), detail::round_less);
    const std::size_t n = rounds.size();
    const std::size_t B = std::min<std::size_t>(10, n);
    std::vector<std::vector<FundingRound>> out(B);
    std::size_t start = 0;
    for (std::size_t k = 1; k <= B; ++k) {
        std::size_t end = k == B ? n : std::max(start, k * n / B);
        while (end > 0 && end < n && rounds[end].amount == rounds[end - 1].amount) ++end;
        out[k - 1].assign(rounds.begin() + static_cast<std::ptrdiff_t>(start),
                          rounds.begin() + static_cast<std::ptrdiff_t>(end));
        start = end;
    }
    return out;
}

inline std::vector<DecileRow> bucket_rows(const std::vector<FundingRound>& rounds, std::optional<Stage> stage) {
    std::vector<DecileRow> rows;
    const auto parts = decile_partition(rounds);
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto& b = parts[k];
        DecileRow row{stage, static_cast<int>(k + 1), static_cast<int>(b.size()), 0.0, 0.0, {}};
        std::vector<double> x, y;
        for (const auto& r : b) {
            x.push_back(r.investor_count);
            y.push_back(r.share());
        }
        if (!b.empty()) {
            row.amount_lo = b.front().amount;
            row.amount_hi = b.back().amount;
        }
        row.corr = correlate(x, y);
        rows.push_back(row);
    }
    return rows;
}

inline std::vector<DecileRow> decile_correlations(const std::vector<FundingRound>& rounds, Stage stage) {
    std::vector<FundingRound> sub;
    for (const auto& r : rounds)
        if (r.stage == stage) sub.push_back(r);
    return bucket_rows(sub, stage);
}

// Per-stage deciles by default; pooled buckets all stages together.
inline std::vector<DecileRow> analyze_rounds(const std::vector<FundingRound>& rounds, bool pooled = false) {
    if (pooled) return bucket_rows(rounds, std::nullopt);
    std::vector<DecileRow> out;
    for (Stage s : {Stage::PreSeed, Stage::Seed, Stage::SeriesAB}) {
        auto rows = decile_correlations(rounds, s);
        out.insert(out.end(), rows.begin(), rows.end());
    }
    return out;
}

// Stages without rounds are absent.
inline std::map<Stage, double> single_investor_rates(const std::vector<FundingRound>& rounds) {
    std::map<Stage, std::pair<long, long>> tally;
    for (const auto& r : rounds) {
        auto& [ones, all] = tally[r.stage];
        ones += r.investor_count == 1;
        ++all;
    }
    std::map<Stage, double> out;
    for (const auto& [s, t] : tally) out[s] = static_cast<double>(t.first) / static_cast<double>(t.second);
    return out;
}

inline std::string decile_csv(const std::vector<DecileRow>& rows) {
    auto num = [](const std::optional<double>& x) { return x ? nlohmann::json(*x).dump() : std::string(); };
    std::ostringstream os;
    os << "stage,decile,n,r,p\n";
    for (const auto& r : rows)
        os << (r.stage ? std::string(to_string(*r.stage)) : std::string("Pooled")) << ',' << r.decile << ','
           << r.n << ',' << num(r.corr.r) << ',' << num(r.corr.p) << '\n';
    return os.str();
}

} // namespace sbarg
