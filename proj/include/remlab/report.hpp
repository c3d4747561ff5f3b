#ifndef REMLAB_REPORT_HPP
#define REMLAB_REPORT_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "remlab/scales.hpp"
#include "remlab/verification.hpp"

namespace remlab {

// Convention note stamped into every output so downstream analysis is
// self-describing: all tail targets use the decreasing form u^(-alpha), and
// slope checks compare against -alpha_n.
extern const char* kConventionBanner;

// FNV-1a over the canonical (sorted-key) dump; first 12 hex digits name the
// experiment directory.
std::string config_hash_hex(const nlohmann::json& config);

nlohmann::json to_json(const ScaleSet& s);
nlohmann::json to_json(const ThetaReport& r);
nlohmann::json to_json(const AsymptoticsReport& r);
nlohmann::json to_json(const TailEstimate& e);
nlohmann::json to_json(const BnEstimate& e);
nlohmann::json to_json(const SubordinatorCheck& c);
nlohmann::json to_json(const AgingReport& r);

// Writes summary.json and CSV tables under out_root/<config hash prefix>/.
// Every file carries the config, the seed ledger, and the convention banner;
// the timestamp lives in a single comment line so bodies stay byte-stable.
class OutputWriter {
public:
    OutputWriter(const std::filesystem::path& out_root, const nlohmann::json& config,
                 std::uint64_t master_seed);

    const std::filesystem::path& dir() const { return dir_; }
    const std::string& experiment_id() const { return id_; }

    void write_summary(const nlohmann::json& body) const;
    void write_csv(const std::string& name, const std::vector<std::string>& columns,
                   const std::vector<std::vector<double>>& rows) const;

private:
    std::filesystem::path dir_;
    std::string id_;
    nlohmann::json header_;
};

} // namespace remlab

#endif
