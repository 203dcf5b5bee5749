#ifndef QLSV_RUNNER_HPP
#define QLSV_RUNNER_HPP

#include <filesystem>
#include <functional>
#include <string>

#include "qlsv/config.hpp"
#include "qlsv/io.hpp"

namespace qlsv {

/// Get-or-insert disk cache of grid functions.  Corrupted entries (bad magic
/// or length) are recomputed and overwritten; an unusable cache directory
/// degrades to plain computation.
GridFunction cache_lookup_or_compute(const std::filesystem::path& cache_dir,
                                     const std::string& key,
                                     const std::function<GridFunction()>& producer,
                                     bool* hit = nullptr);

struct RunResult {
    int exit_code = 0;          // 0 ok/inconclusive, 1 numeric failure, 2 config
    std::string verdict;        // pass | fail | inconclusive | n/a
    std::filesystem::path manifest_path;
};

/// Executes one configured experiment: validates, computes, writes the
/// kind-specific outputs plus manifest.json (config hash, version, seed,
/// wall clock, per-output checksums) atomically into out_dir.
RunResult run_experiment(const ExperimentConfig& config);

extern const char* kVersionString;

}  // namespace qlsv

#endif
