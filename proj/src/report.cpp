#include "fjsteer/config.hpp"

#include <cmath>

namespace fjsteer {

using nlohmann::json;

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json matrix_rows(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(number(m(r, c)));
        out.push_back(row);
    }
    return out;
}

}  // namespace

json to_json(const AnalysisSnapshot& a, const Community& community) {
    json out;
    out["step"] = a.step;
    out["spectral_radius"] = number(a.spectral_radius);
    out["hurwitz"] = a.hurwitz;
    out["rcond"] = number(a.rcond);

    json rows = json::array(), columns = json::array();
    for (AgentId i : community.regular()) rows.push_back(i.value);
    for (AgentId s : community.stubborn()) columns.push_back(s.value);
    for (AgentId i : community.regular()) columns.push_back(i.value);

    if (a.unique_equilibrium) {
        out["row_sum_error_max"] = number(a.row_sum_error_max);
        out["min_C_entry"] = number(a.min_C_entry);
        out["C"] = {{"rows", rows}, {"columns", columns}, {"values", matrix_rows(a.C)}};
        json eq = json::array();
        for (Index r = 0; r < a.equilibrium.rows(); ++r) {
            json o = json::array();
            for (Index s = 0; s < a.equilibrium.cols(); ++s) o.push_back(number(a.equilibrium(r, s)));
            eq.push_back({{"agent", community.regular()[static_cast<std::size_t>(r)].value}, {"opinion", o}});
        }
        out["equilibrium"] = eq;
    } else {
        out["row_sum_error_max"] = nullptr;
        out["min_C_entry"] = nullptr;
        out["C"] = nullptr;
        out["equilibrium"] = a.equilibrium_status;
    }

    out["layering"] = {{"mode", a.layering ? to_string(*a.layering) : "none"}, {"layers", a.layer_count}};
    json conv;
    conv["mode"] = a.convergence.finite ? "finite" : "asymptotic";
    conv["steps"] = a.convergence.finite ? json(a.convergence.steps) : json(nullptr);
    conv["layer_fixed"] = a.convergence.layer_fixed;
    conv["spectral_radius"] = number(a.convergence.spectral_radius);
    out["convergence"] = conv;

    json violations = json::array();
    for (const auto& v : a.containment.violations)
        violations.push_back({{"agent", community.regular()[static_cast<std::size_t>(v.regular_index)].value},
                              {"kind", v.kind},
                              {"magnitude", number(v.magnitude)}});
    out["containment"] = {{"checked", a.containment.certificate_checked},
                          {"hull_checked", a.containment.hull_checked},
                          {"passed", a.unique_equilibrium && a.containment.passed()},
                          {"violations", violations}};
    return out;
}

json to_json(const RunReport& r, const Community& community) {
    json out = to_json(r.analysis, community);
    out["scenario_name"] = r.scenario_name;
    out["seed"] = r.seed;
    out["converged"] = r.converged;
    out["convergence_step"] = r.convergence_step ? json(*r.convergence_step) : json(nullptr);
    out["convergence_kind"] =
        !r.converged ? "none" : (r.static_at_convergence ? "equilibrium reached" : "settled");
    out["steps_run"] = r.steps_run;
    out["update_order"] = r.update_order;
    json deltas = json::array();
    for (double d : r.step_deltas) deltas.push_back(number(d));
    out["step_deltas"] = deltas;
    json fallbacks = json::array();
    for (const auto& [k, agent] : r.fallbacks) fallbacks.push_back({{"step", k}, {"agent", agent.value}});
    out["fallbacks"] = fallbacks;
    out["final_equilibrium_gap"] = number(r.final_equilibrium_gap);
    return out;
}

json to_json(const MonteCarloSummary& s, const Community& community) {
    json runs = json::array();
    for (const auto& [seed, report] : s.reports) runs.push_back(to_json(report, community));
    json errors = json::array();
    for (const auto& [seed, message] : s.errors) errors.push_back({{"seed", seed}, {"error", message}});
    json out;
    out["runs"] = runs;
    out["errors"] = errors;
    out["mean_convergence_step"] = s.mean_convergence_step ? json(*s.mean_convergence_step) : json(nullptr);
    out["containment_pass_rate"] = s.containment_pass_rate;
    out["mean_distance_to_utility_mean"] =
        s.mean_distance_to_utility_mean ? number(*s.mean_distance_to_utility_mean) : json(nullptr);
    return out;
}

}  // namespace fjsteer
