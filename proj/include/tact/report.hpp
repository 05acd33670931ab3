#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tact/trainer.hpp"

namespace tact {

struct RunSeries {
  std::string name;  // typically the run directory name
  std::vector<MetricRow> rows;
};

RunSeries load_run(const std::filesystem::path& run_dir);

/// Writes summary.txt plus static SVG plots (loss curves, retrieval curve,
/// and a multi-run overlay when two or more runs are given, e.g. the γ
/// ablation comparison). Returns the list of files written.
std::vector<std::filesystem::path> write_report(const std::vector<RunSeries>& runs,
                                                const std::filesystem::path& out_dir);

}  // namespace tact
