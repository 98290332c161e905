#pragma once

#include <string>
#include <vector>

#include "lagrange/systems.hpp"

namespace lagrange {

// Disjoint gain buckets; the reported columns are cumulative except the
// first. Negative realized gains count as "no improvement".
struct GainSummary {
    SystemId system = SystemId::S0;
    int clips = 0;
    double pct_no_improvement = 0.0;  // gain <= 0
    double pct_over_0_1 = 0.0;        // gain > 0.1
    double pct_over_1 = 0.0;          // gain > 1.0
    double best_gain = 0.0;
    double mean_gain = 0.0;           // negatives included, honest average
};

GainSummary summarize_gains(SystemId system,
                            const std::vector<SystemOutcome>& outcomes);

struct ReportResult {
    std::vector<std::string> files_written;
    std::vector<std::string> missing_systems;
};

// Per-system CDF of realized gain: "gain_percent,cumulative_fraction" rows,
// gains ascending. Identical stores produce byte-identical files.
ReportResult report_cdf(const std::vector<SystemOutcome>& outcomes,
                        const std::vector<SystemId>& systems,
                        const std::string& out_dir);

// Bucket summary table, CSV plus aligned text.
ReportResult report_summary(const std::vector<SystemOutcome>& outcomes,
                            const std::vector<SystemId>& systems,
                            const std::string& out_dir);

// Estimate-phase speedup table vs S0.
ReportResult report_speedup(const std::vector<SystemOutcome>& outcomes,
                            const std::string& out_dir,
                            bool allow_cached_timing = false);

}  // namespace lagrange
