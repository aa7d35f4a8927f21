#pragma once

#include <map>
#include <string>
#include <vector>

#include "pdfool/data.hpp"
#include "pdfool/metrics.hpp"
#include "pdfool/pipeline.hpp"

namespace pdfool {

// Flat key=value run configuration. Unknown keys are rejected; every known
// key has a default so a resolved config fully describes a run.
class RunConfig {
  public:
    static RunConfig from_file(const std::string& path);
    static RunConfig from_lines(const std::vector<std::string>& lines, const std::string& origin);
    static RunConfig from_pairs(const std::vector<std::pair<std::string, std::string>>& pairs);

    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;
    double number(const std::string& key) const;
    std::size_t count(const std::string& key) const;
    std::uint64_t seed(const std::string& key) const;
    bool flag(const std::string& key) const;
    std::vector<double> numbers(const std::string& key) const;
    std::vector<std::size_t> counts(const std::string& key) const;

    // Full resolved view (defaults filled), sorted by key.
    std::vector<std::pair<std::string, std::string>> resolved() const;

  private:
    void set(const std::string& key, const std::string& value, const std::string& origin);
    void fill_defaults();

    std::map<std::string, std::string> kv_;
};

SimulationConfig make_sim_config(const RunConfig& config);
Dataset load_dataset(const RunConfig& config);
LearnerSettings make_learner_settings(const RunConfig& config, const std::string& section);
TargetSpec parse_target_spec(const std::string& feature, const std::string& text);
AttackSettings make_attack_settings(const RunConfig& config);
SweepSettings make_sweep_settings(const RunConfig& config);

}  // namespace pdfool
