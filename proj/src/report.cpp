#include "remlab/report.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

namespace remlab {

const char* kConventionBanner =
    "tail convention: the limiting Levy tail is u^(-alpha) (a tail must decrease in u); "
    "slope diagnostics target -alpha_n";

std::string config_hash_hex(const nlohmann::json& config) {
    std::string dump = config.dump();  // nlohmann objects keep sorted keys
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf).substr(0, 12);
}

nlohmann::json to_json(const ScaleSet& s) {
    return {
        {"n", s.n},
        {"beta", s.beta},
        {"epsilon", s.epsilon},
        {"c_star", s.c_star},
        {"theta", s.theta},
        {"beta_c", s.beta_c},
        {"alpha", s.alpha},
        {"c_n", s.c_n},
        {"alpha_n", s.alpha_n},
        {"rho_star", s.rho_star},
        {"r_star", s.r_star},
        {"delta_n", s.delta_n},
        {"epsilon_n", s.epsilon_n},
        {"r_eps_n", std::isnan(s.r_eps_n) ? nlohmann::json() : nlohmann::json(s.r_eps_n)},
        {"kappa_n", s.kappa_n},
        {"kappa_tilde", s.kappa_tilde},
        {"nu_bar", s.nu_bar},
        {"b_n", std::isnan(s.b_n) ? nlohmann::json() : nlohmann::json(s.b_n)},
        {"a_n", std::isnan(s.a_n) ? nlohmann::json() : nlohmann::json(s.a_n)},
        {"aging_regime", s.aging_regime},
        {"regime_valid", s.regime_valid},
    };
}

nlohmann::json to_json(const ThetaReport& r) {
    return {
        {"log_theta", r.log_theta},
        {"lower_bound_log", r.lower_bound_log},
        {"lower_bound_defined", r.lower_bound_defined},
        {"pass_lower", r.pass_lower},
        {"pass_kappa", r.pass_kappa},
        {"ll_ratio", r.ll_ratio},
        {"pass_ll", r.pass_ll},
        {"r4_ratio", r.r4_ratio},
        {"pass_r4", r.pass_r4},
        {"window_empty_at_this_n", r.window_empty},
        {"tol", r.tol},
    };
}

nlohmann::json to_json(const AsymptoticsReport& r) {
    return {
        {"c_n_closed_form", r.c_n_closed_form},
        {"c_n_rel_dev", r.c_n_rel_dev},
        {"r_star_closed_form", r.r_star_closed_form},
        {"r_star_rel_dev", r.r_star_rel_dev},
        {"ratio_defined", r.ratio_defined},
        {"ratio_exact", r.ratio_exact},
        {"ratio_closed_form", r.ratio_closed_form},
        {"ratio_rel_dev", r.ratio_rel_dev},
    };
}

nlohmann::json to_json(const TailEstimate& e) {
    return {
        {"grid", e.grid},          {"values", e.values},   {"cleaned", e.cleaned},
        {"ci_lo", e.ci_lo},        {"ci_hi", e.ci_hi},     {"replicas", e.replicas},
        {"censored", e.censored},  {"t", e.t},             {"k_factor", e.k_factor},
    };
}

nlohmann::json to_json(const BnEstimate& e) {
    return {
        {"b_n", e.b_n},
        {"b_circ", e.b_circ},
        {"se_b_n", e.se_b_n},
        {"se_b_circ", e.se_b_circ},
        {"windows", e.windows},
        {"windows_visiting_top", e.windows_visiting_top},
        {"degenerate", e.degenerate},
    };
}

nlohmann::json to_json(const SubordinatorCheck& c) {
    return {
        {"lambda_grid", c.lambda_grid}, {"empirical", c.empirical}, {"target", c.target},
        {"deviation", c.deviation},     {"ci_half", c.ci_half},     {"replicas", c.replicas},
        {"low_power", c.low_power},
    };
}

nlohmann::json to_json(const AgingReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        rows.push_back({
            {"t", row.t},
            {"s", row.s},
            {"ratio", row.ratio},
            {"estimate", row.estimate},
            {"ci_lo", row.ci_lo},
            {"ci_hi", row.ci_hi},
            {"limit", row.limit},
            {"deviation", row.deviation},
            {"replicas", row.replicas},
            {"censored", row.censored},
        });
    }
    return {
        {"alpha", r.alpha},
        {"rows", rows},
        {"ratio_consistent", r.ratio_consistent},
        {"worst_pair_z", r.worst_pair_z},
    };
}

OutputWriter::OutputWriter(const std::filesystem::path& out_root, const nlohmann::json& config,
                           std::uint64_t master_seed) {
    id_ = config_hash_hex(config);
    dir_ = out_root / id_;
    std::filesystem::create_directories(dir_);
    header_ = {
        {"experiment_id", id_},
        {"config", config},
        {"seed_ledger", {{"master", master_seed}, {"scheme", "splitmix64(master, module_tag, replica)"}}},
        {"note", kConventionBanner},
    };
}

void OutputWriter::write_summary(const nlohmann::json& body) const {
    nlohmann::json doc = header_;
    doc["generated_at"] =
        std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
            .count();
    doc["report"] = body;
    std::ofstream out(dir_ / "summary.json");
    out << doc.dump(2) << "\n";
}

void OutputWriter::write_csv(const std::string& name, const std::vector<std::string>& columns,
                             const std::vector<std::vector<double>>& rows) const {
    std::ofstream out(dir_ / (name + ".csv"));
    auto now =
        std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
            .count();
    out << "# experiment " << id_ << " generated_at " << now << " | " << kConventionBanner << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << "\n";
    char buf[64];
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", row[i]);
            out << (i ? "," : "") << buf;
        }
        out << "\n";
    }
}

} // namespace remlab
