#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mrsq/error.hpp"

namespace mrsq {

/// Aggregate SMAPE in percent: 100 * sum|a - a_hat| / sum(a + a_hat) over the
/// whole set. 0/0 is defined as 0.
inline double smape(const std::vector<double>& truth, const std::vector<double>& est)
{
    if (truth.size() != est.size()) throw InvalidArgument("smape: length mismatch");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0.0 || est[i] < 0.0) throw InvalidArgument("smape: values must be nonnegative");
        num += std::abs(truth[i] - est[i]);
        den += truth[i] + est[i];
    }
    if (den == 0.0) {
        if (num == 0.0) return 0.0;
        throw InvalidArgument("smape: zero denominator");
    }
    return 100.0 * num / den;
}

/// Per-output SMAPE table with the #wins / average-rank summary.
struct EvalReport {
    std::vector<std::string> outputs;
    std::vector<std::string> methods;
    /// smape[output][method]
    std::vector<std::vector<double>> smape;
    std::vector<int> wins;
    std::vector<double> avg_rank;
};

struct Ranking {
    std::vector<int> wins;
    std::vector<double> avg_rank;
    /// rank[output][method], ties share the mean rank
    std::vector<std::vector<double>> ranks;
};

/// table[output][method] -> per-method wins (strict minimum) and mean rank.
inline Ranking rank_methods(const std::vector<std::vector<double>>& table)
{
    if (table.empty()) throw InvalidArgument("rank_methods: no outputs");
    const std::size_t k = table.front().size();
    if (k < 2) throw InvalidArgument("rank_methods: need at least two methods");
    Ranking r;
    r.wins.assign(k, 0);
    r.avg_rank.assign(k, 0.0);
    for (const auto& row : table) {
        if (row.size() != k) throw InvalidArgument("rank_methods: mismatched method sets across outputs");
        std::vector<double> ranks(k);
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t less = 0, equal = 0;
            for (std::size_t j = 0; j < k; ++j) {
                if (row[j] < row[i]) ++less;
                else if (row[j] == row[i]) ++equal;
            }
            // positions less+1 .. less+equal share their mean
            ranks[i] = static_cast<double>(less) + (static_cast<double>(equal) + 1.0) / 2.0;
            if (less == 0 && equal == 1) ++r.wins[i];
        }
        for (std::size_t i = 0; i < k; ++i) r.avg_rank[i] += ranks[i];
        r.ranks.push_back(std::move(ranks));
    }
    for (auto& a : r.avg_rank) a /= static_cast<double>(table.size());
    return r;
}

/// estimates[method][sample][output] against truth[sample][output].
inline EvalReport make_report(const std::vector<std::string>& outputs, const std::vector<std::string>& methods,
                              const std::vector<std::vector<double>>& truth,
                              const std::vector<std::vector<std::vector<double>>>& estimates)
{
    if (estimates.size() != methods.size()) throw InvalidArgument("make_report: method count mismatch");
    EvalReport rep;
    rep.outputs = outputs;
    rep.methods = methods;
    for (std::size_t o = 0; o < outputs.size(); ++o) {
        std::vector<double> t(truth.size());
        for (std::size_t i = 0; i < truth.size(); ++i) t[i] = truth[i].at(o);
        std::vector<double> row;
        for (const auto& est : estimates) {
            if (est.size() != truth.size()) throw InvalidArgument("make_report: sample count mismatch");
            std::vector<double> e(est.size());
            for (std::size_t i = 0; i < est.size(); ++i) e[i] = est[i].at(o);
            row.push_back(smape(t, e));
        }
        rep.smape.push_back(std::move(row));
    }
    const auto ranking = rank_methods(rep.smape);
    rep.wins = ranking.wins;
    rep.avg_rank = ranking.avg_rank;
    return rep;
}

inline std::string format_fixed(double v, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

/// Table layout: one row per output, then "wins" and "avg_rank"; one column per method.
inline std::string to_csv(const EvalReport& rep)
{
    std::string out = "metabolite";
    for (const auto& m : rep.methods) out += "," + m;
    out += "\n";
    for (std::size_t o = 0; o < rep.outputs.size(); ++o) {
        out += rep.outputs[o];
        for (double v : rep.smape[o]) out += "," + format_fixed(v, 4);
        out += "\n";
    }
    out += "wins";
    for (int w : rep.wins) out += "," + std::to_string(w);
    out += "\navg_rank";
    for (double a : rep.avg_rank) out += "," + format_fixed(a, 4);
    out += "\n";
    return out;
}

/// Inverse of to_csv (values carry the CSV's four decimals).
inline EvalReport parse_report_csv(const std::string& text)
{
    auto split_row = [](const std::string& line) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        return cells;
    };
    std::stringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("report: empty file");
    auto header = split_row(line);
    if (header.size() < 2 || header[0] != "metabolite") throw FormatError("report: bad header");
    EvalReport rep;
    rep.methods.assign(header.begin() + 1, header.end());
    const std::size_t k = rep.methods.size();
    try {
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto cells = split_row(line);
            if (cells.size() != k + 1) throw FormatError("report: row '" + cells.at(0) + "' has the wrong width");
            if (cells[0] == "wins") {
                for (std::size_t i = 1; i <= k; ++i) rep.wins.push_back(std::stoi(cells[i]));
            } else if (cells[0] == "avg_rank") {
                for (std::size_t i = 1; i <= k; ++i) rep.avg_rank.push_back(std::stod(cells[i]));
            } else {
                rep.outputs.push_back(cells[0]);
                std::vector<double> row;
                for (std::size_t i = 1; i <= k; ++i) row.push_back(std::stod(cells[i]));
                rep.smape.push_back(std::move(row));
            }
        }
    } catch (const std::logic_error& e) {
        throw FormatError(std::string("report: unparsable number: ") + e.what());
    }
    if (rep.wins.size() != k || rep.avg_rank.size() != k) throw FormatError("report: missing summary rows");
    return rep;
}

} // namespace mrsq
