#include "nfl/report.hpp"

#include <fstream>
#include <stdexcept>

namespace nfl {

namespace {

nlohmann::json opt_rect(const std::optional<HyperRectangle>& rect) {
    return rect ? nlohmann::json(*rect) : nlohmann::json(nullptr);
}

nlohmann::json backward_to_json(const BackreachResult& r) {
    nlohmann::json j;
    j["bp_sets"] = r.bp_sets;
    j["hulls"] = nlohmann::json::array();
    for (const auto& h : r.hulls) j["hulls"].push_back(opt_rect(h));
    j["backreach_rects"] = nlohmann::json::array();
    for (const auto& b : r.backreach_rects) j["backreach_rects"].push_back(opt_rect(b));
    j["omega"] = nlohmann::json::array();
    for (const auto& o : r.omega) j["omega"].push_back(o ? nlohmann::json(*o) : nlohmann::json(nullptr));
    j["lp_solves"] = r.lp_solves;
    j["backreach_lp_solves"] = r.backreach_lp_solves;
    return j;
}

nlohmann::json truth_to_json(const TrueBpEstimate& t) {
    nlohmann::json j;
    j["seed"] = t.seed;
    j["samples"] = t.n_samples;
    j["sample_region"] = t.sample_region;
    j["per_step"] = nlohmann::json::array();
    for (size_t i = 0; i < t.step_rects.size(); ++i) {
        j["per_step"].push_back({{"hits", t.hits[i]}, {"rect", opt_rect(t.step_rects[i])}});
    }
    return j;
}

}  // namespace

nlohmann::json report_to_json(const RunReport& report) {
    nlohmann::json j;
    j["version"] = report.version;
    j["config"] = report.config;
    j["algorithm"] = report.algorithm;
    j["wall_clock_s"] = report.wall_clock_s;
    j["lp_solves"] = report.lp_solves;
    j["backreach_lp_solves"] = report.backreach_lp_solves;
    j["target"] = report.target;
    j["init"] = report.init;
    if (report.backward) j["backward"] = backward_to_json(*report.backward);
    if (report.forward) {
        j["forward"] = {{"sets", report.forward->sets}, {"lp_solves", report.forward->lp_solves}};
    }
    if (report.truth) j["truth"] = truth_to_json(*report.truth);
    j["errors"] = nlohmann::json::array();
    for (const auto& e : report.errors) j["errors"].push_back(e ? nlohmann::json(*e) : nlohmann::json(nullptr));
    j["verdict"] = {{"certified", report.verdict.certified},
                    {"first_unsafe_step", report.verdict.first_unsafe_step
                                              ? nlohmann::json(*report.verdict.first_unsafe_step)
                                              : nlohmann::json(nullptr)},
                    {"witness", opt_rect(report.verdict.witness)}};
    return j;
}

void write_report(const RunReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << report_to_json(report).dump(2) << "\n";
}

namespace {

void csv_rect(std::ofstream& out, int step, const std::string& kind, int index,
              const HyperRectangle& rect) {
    out << step << ',' << kind << ',' << index;
    for (int k = 0; k < rect.dim(); ++k) out << ',' << rect.lo[k];
    for (int k = 0; k < rect.dim(); ++k) out << ',' << rect.hi[k];
    out << '\n';
}

}  // namespace

void write_csv(const RunReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write csv: " + path);
    out.precision(17);
    const int dim = report.target.dim();
    out << "step,kind,rect_index";
    for (int k = 0; k < dim; ++k) out << ",lo" << k;
    for (int k = 0; k < dim; ++k) out << ",hi" << k;
    out << '\n';

    csv_rect(out, 0, "target", 0, report.target);
    csv_rect(out, 0, "init", 0, report.init);
    if (report.backward) {
        const std::string kind = report.algorithm == "rebreach" ? "bp-refined" : "bp";
        for (size_t t = 1; t < report.backward->bp_sets.size(); ++t) {
            const auto& members = report.backward->bp_sets[t].members;
            for (size_t i = 0; i < members.size(); ++i)
                csv_rect(out, static_cast<int>(t), kind, static_cast<int>(i), members[i]);
        }
    }
    if (report.forward) {
        for (size_t t = 1; t < report.forward->sets.size(); ++t) {
            const auto& members = report.forward->sets[t].members;
            for (size_t i = 0; i < members.size(); ++i)
                csv_rect(out, static_cast<int>(t), "forward", static_cast<int>(i), members[i]);
        }
    }
    if (report.truth) {
        for (size_t t = 0; t < report.truth->step_rects.size(); ++t) {
            if (report.truth->step_rects[t])
                csv_rect(out, static_cast<int>(t), "truth-hull", 0, *report.truth->step_rects[t]);
        }
    }
}

LoadedReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("report parse error in " + path + ": " + e.what());
    }

    LoadedReport loaded;
    loaded.config = j.at("config");
    loaded.algorithm = j.at("algorithm").get<std::string>();
    loaded.target = j.at("target").get<HyperRectangle>();
    if (!j.contains("backward"))
        throw std::runtime_error("report has no backward result to audit: " + path);
    const auto& jb = j.at("backward");
    loaded.backward.bp_sets = jb.at("bp_sets").get<std::vector<RectUnion>>();
    loaded.backward.lp_solves = jb.at("lp_solves").get<long>();
    loaded.backward.backreach_lp_solves = jb.at("backreach_lp_solves").get<long>();
    for (const auto& u : loaded.backward.bp_sets)
        loaded.backward.hulls.push_back(bound_with_rectangle(u));
    return loaded;
}

}  // namespace nfl
