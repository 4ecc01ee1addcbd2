#pragma once
// JSON and text renderings of scores, search reports and eval reports.
// Wall-clock time is deliberately absent from search report JSON so equal
// inputs give byte-identical reports.

#include "odin/beam_search.hpp"
#include "odin/compass.hpp"
#include "odin/eval.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <string>

namespace odin {

inline nlohmann::json breakdown_to_json(const SignalBreakdown& b) {
    nlohmann::json factors = nlohmann::json::object();
    for (Signal s : kSignals) factors[std::string(signal_key(s))] = b.factor(s);
    nlohmann::json out = {{"compass", b.compass}, {"factors", factors}};
    if (b.compass > 0.0) {
        nlohmann::json shapley = nlohmann::json::object();
        for (const auto& a : explain(b)) shapley[std::string(signal_key(a.signal))] = a.phi;
        out["shapley"] = shapley;
    } else {
        out["shapley"] = nullptr;
        nlohmann::json veto = nlohmann::json::array();
        for (Signal s : b.vetoing_signals()) veto.push_back(signal_key(s));
        out["veto"] = veto;
    }
    return out;
}

inline SignalBreakdown breakdown_from_json(const nlohmann::json& j) {
    std::array<double, kNumSignals> f{};
    for (std::size_t i = 0; i < kNumSignals; ++i) f[i] = j.at("factors").at(std::string(signal_key(kSignals[i]))).get<double>();
    auto b = SignalBreakdown::from_factors(f);
    b.compass = j.at("compass").get<double>();
    return b;
}

inline nlohmann::json path_to_json(const GraphSnapshot& g, const ScoredPath& sp, std::size_t rank) {
    nlohmann::json entities = nlohmann::json::array();
    for (EntityIndex e : sp.path.entities) entities.push_back(g.entity_name(e));
    nlohmann::json edges = nlohmann::json::array();
    for (TripleIndex t : sp.path.triples) {
        const auto& triple = g.triple(t);
        nlohmann::json edge = {{"s", g.entity_name(triple.subject)},
                               {"r", g.relation_name(triple.relation)},
                               {"o", g.entity_name(triple.object)},
                               {"prov", triple.provenance}};
        edge["t"] = triple.timestamp ? nlohmann::json(*triple.timestamp) : nlohmann::json(nullptr);
        edges.push_back(edge);
    }
    nlohmann::json out = breakdown_to_json(sp.breakdown);
    out["rank"] = rank;
    out["hop"] = sp.hop;
    out["entities"] = entities;
    out["edges"] = edges;
    return out;
}

inline nlohmann::json search_report_to_json(const GraphSnapshot& g, const SearchReport& report) {
    nlohmann::json paths = nlohmann::json::array();
    for (std::size_t i = 0; i < report.results.size(); ++i) paths.push_back(path_to_json(g, report.results[i], i + 1));
    return {{"score_evaluations", report.score_evaluations},
            {"paths_explored", report.paths_explored},
            {"paths", paths}};
}

inline std::string format_number(double value, int precision = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, value);
    return buf;
}

inline std::string format_signed(double value, int precision = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%+.*f", precision, value);
    return buf;
}

// Narrative explanation, e.g. "Path #1 (compass 0.4120) ranks primarily due
// to structural importance (phi_struct=-0.012) and bridge entities
// (phi_bridge=+0.160); held back most by temporal relevance (phi_temp=-0.700)."
inline std::string explain_narrative(const SignalBreakdown& b, std::size_t rank) {
    std::ostringstream out;
    out << "Path #" << rank << " (compass " << format_number(b.compass) << ")";
    if (!(b.compass > 0.0)) {
        out << " is vetoed by";
        for (Signal s : b.vetoing_signals()) out << ' ' << signal_label(s) << " (S_" << signal_key(s) << "=0)";
        out << "; it has no finite log decomposition.";
        return out.str();
    }
    auto ranked = explain(b);
    std::stable_sort(ranked.begin(), ranked.end(), [](const Attribution& x, const Attribution& y) { return x.phi > y.phi; });
    auto term = [](const Attribution& a) {
        return std::string(signal_label(a.signal)) + " (phi_" + std::string(signal_key(a.signal)) + "=" +
               format_signed(a.phi) + ")";
    };
    if (ranked.front().phi == 0.0 && ranked.back().phi == 0.0) {
        out << " is neutral on every signal (all phi = 0).";
        return out.str();
    }
    out << " ranks primarily due to " << term(ranked[0]) << " and " << term(ranked[1]);
    if (ranked.back().phi < 0.0) out << "; held back most by " << term(ranked.back());
    out << ". Sum of phi = ln(compass) = " << format_signed(std::log(b.compass)) << '.';
    return out.str();
}

// Human-readable ranked list with provenance and attribution lines.
inline std::string render_search_report(const GraphSnapshot& g, const SearchReport& report) {
    std::ostringstream out;
    out << "ranked paths: " << report.results.size() << "  (score evaluations " << report.score_evaluations
        << ", paths explored " << report.paths_explored << ")\n";
    for (std::size_t i = 0; i < report.results.size(); ++i) {
        const auto& sp = report.results[i];
        out << "#" << (i + 1) << "  compass=" << format_number(sp.breakdown.compass, 6) << "  hop=" << sp.hop << "\n";
        for (TripleIndex t : sp.path.triples) {
            const auto& triple = g.triple(t);
            out << "    " << g.entity_name(triple.subject) << " -[" << g.relation_name(triple.relation) << "]-> "
                << g.entity_name(triple.object);
            if (!triple.provenance.empty()) {
                out << "  prov:";
                for (const auto& doc : triple.provenance) out << ' ' << doc;
            }
            out << '\n';
        }
        out << "    factors:";
        for (Signal s : kSignals) out << ' ' << signal_key(s) << '=' << format_number(sp.breakdown.factor(s));
        out << '\n';
        if (sp.breakdown.compass > 0.0) {
            out << "    shapley:";
            for (const auto& a : explain(sp.breakdown)) out << ' ' << signal_key(a.signal) << '=' << format_signed(a.phi);
            out << '\n';
        } else {
            out << "    vetoed\n";
        }
    }
    return out.str();
}

inline nlohmann::json eval_report_to_json(const EvalReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    for (const auto& r : report.rows) {
        rows.push_back({{"method", r.method},
                        {"coverage_at_k", opt(r.coverage_at_k)},
                        {"cross_community_fraction", opt(r.cross_community)},
                        {"pattern_fraction", opt(r.pattern_fraction)},
                        {"results", r.results},
                        {"paths_explored", r.paths_explored},
                        {"score_evaluations", r.score_evaluations},
                        {"elapsed_ms", r.elapsed_ms}});
    }
    return {{"k", report.k}, {"rows", rows}};
}

inline std::string render_eval_table(const EvalReport& report) {
    auto opt = [](const std::optional<double>& v, bool percent) {
        if (!v) return std::string("-");
        return percent ? format_number(*v * 100.0, 1) + "%" : format_number(*v, 3);
    };
    std::vector<std::array<std::string, 6>> cells;
    cells.push_back({"Method", "Coverage@" + std::to_string(report.k), "Cross-comm", "Paths explored", "Evaluations", "Time (ms)"});
    for (const auto& r : report.rows)
        cells.push_back({r.method, opt(r.coverage_at_k, true), opt(r.cross_community, true), std::to_string(r.paths_explored),
                         std::to_string(r.score_evaluations), format_number(r.elapsed_ms, 1)});
    std::array<std::size_t, 6> width{};
    for (const auto& row : cells)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::ostringstream out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        for (std::size_t c = 0; c < cells[i].size(); ++c) {
            const auto& text = cells[i][c];
            if (c == 0) out << text << std::string(width[c] - text.size(), ' ');
            else out << "  " << std::string(width[c] - text.size(), ' ') << text;
        }
        out << '\n';
        if (i == 0) {
            std::size_t total = 0;
            for (std::size_t w : width) total += w + 2;
            out << std::string(total - 2, '-') << '\n';
        }
    }
    return out.str();
}

inline nlohmann::json recall_curve_to_json(const std::vector<RecallPoint>& curve) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : curve) out.push_back({{"beam_width", p.beam_width}, {"mean_recall", p.mean_recall}, {"bound", p.bound}});
    return out;
}

}  // namespace odin
