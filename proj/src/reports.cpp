#include "lagrange/reports.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace lagrange {
namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::vector<double> ok_gains(SystemId system,
                             const std::vector<SystemOutcome>& outcomes) {
    std::vector<double> gains;
    for (const SystemOutcome& o : outcomes)
        if (o.system == system && o.status == OutcomeStatus::Ok)
            gains.push_back(o.realized_gain_percent);
    return gains;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("cannot write report: " + path);
}

}  // namespace

GainSummary summarize_gains(SystemId system,
                            const std::vector<SystemOutcome>& outcomes) {
    GainSummary s;
    s.system = system;
    const std::vector<double> gains = ok_gains(system, outcomes);
    s.clips = static_cast<int>(gains.size());
    if (gains.empty()) return s;

    int none = 0, tiny = 0, small = 0, large = 0;  // disjoint buckets
    double best = gains.front(), sum = 0.0;
    for (double g : gains) {
        if (g <= 0.0) ++none;
        else if (g <= 0.1) ++tiny;
        else if (g <= 1.0) ++small;
        else ++large;
        best = std::max(best, g);
        sum += g;
    }
    const double n = static_cast<double>(s.clips);
    s.pct_no_improvement = 100.0 * none / n;
    s.pct_over_0_1 = 100.0 * (small + large) / n;  // cumulative over 0.1
    s.pct_over_1 = 100.0 * large / n;
    s.best_gain = best;
    s.mean_gain = sum / n;
    (void)tiny;
    return s;
}

ReportResult report_cdf(const std::vector<SystemOutcome>& outcomes,
                        const std::vector<SystemId>& systems,
                        const std::string& out_dir) {
    if (outcomes.empty()) throw std::runtime_error("no outcomes to report");
    fs::create_directories(out_dir);
    ReportResult res;
    for (SystemId system : systems) {
        std::vector<double> gains = ok_gains(system, outcomes);
        if (gains.empty()) {
            res.missing_systems.push_back(to_string(system));
            continue;
        }
        std::sort(gains.begin(), gains.end());
        std::ostringstream os;
        os << "gain_percent,cumulative_fraction\n";
        const double n = static_cast<double>(gains.size());
        for (std::size_t i = 0; i < gains.size(); ++i) {
            os << fmt("%.6f", gains[i]) << ","
               << fmt("%.6f", static_cast<double>(i + 1) / n) << "\n";
        }
        const std::string path =
            (fs::path(out_dir) / ("cdf_" + to_string(system) + ".csv")).string();
        write_file(path, os.str());
        res.files_written.push_back(path);
    }
    return res;
}

ReportResult report_summary(const std::vector<SystemOutcome>& outcomes,
                            const std::vector<SystemId>& systems,
                            const std::string& out_dir) {
    if (outcomes.empty()) throw std::runtime_error("no outcomes to report");
    fs::create_directories(out_dir);
    ReportResult res;

    std::vector<GainSummary> rows;
    for (SystemId system : systems) {
        GainSummary s = summarize_gains(system, outcomes);
        if (s.clips == 0) {
            res.missing_systems.push_back(to_string(system));
            continue;
        }
        rows.push_back(s);
    }
    if (rows.empty()) throw std::runtime_error("no requested system has outcomes");

    std::ostringstream csv;
    csv << "system,clips,pct_no_improvement,pct_over_0_1,pct_over_1,"
           "best_gain,mean_gain\n";
    for (const GainSummary& s : rows) {
        csv << to_string(s.system) << "," << s.clips << ","
            << fmt("%.4f", s.pct_no_improvement) << ","
            << fmt("%.4f", s.pct_over_0_1) << "," << fmt("%.4f", s.pct_over_1)
            << "," << fmt("%.4f", s.best_gain) << "," << fmt("%.4f", s.mean_gain)
            << "\n";
    }
    const std::string csv_path = (fs::path(out_dir) / "summary.csv").string();
    write_file(csv_path, csv.str());
    res.files_written.push_back(csv_path);

    std::ostringstream txt;
    txt << "system  clips  =0%     >0.1%   >1%     best    mean\n";
    for (const GainSummary& s : rows) {
        char line[160];
        std::snprintf(line, sizeof(line),
                      "%-7s %-6d %-7.1f %-7.1f %-7.1f %-7.2f %-7.2f\n",
                      to_string(s.system).c_str(), s.clips,
                      s.pct_no_improvement, s.pct_over_0_1, s.pct_over_1,
                      s.best_gain, s.mean_gain);
        txt << line;
    }
    const std::string txt_path = (fs::path(out_dir) / "summary.txt").string();
    write_file(txt_path, txt.str());
    res.files_written.push_back(txt_path);
    return res;
}

ReportResult report_speedup(const std::vector<SystemOutcome>& outcomes,
                            const std::string& out_dir,
                            bool allow_cached_timing) {
    if (outcomes.empty()) throw std::runtime_error("no outcomes to report");
    fs::create_directories(out_dir);
    const std::vector<SpeedupRow> rows =
        measure_speedup(outcomes, allow_cached_timing);

    std::ostringstream csv;
    csv << "system,clips,total_estimate_s,mean_estimate_s,speedup_vs_s0\n";
    for (const SpeedupRow& r : rows) {
        csv << to_string(r.system) << "," << r.clips << ","
            << fmt("%.6f", r.total_estimate_s) << ","
            << fmt("%.6f", r.mean_estimate_s) << "," << fmt("%.4f", r.speedup)
            << "\n";
    }
    ReportResult res;
    const std::string path = (fs::path(out_dir) / "speedup.csv").string();
    write_file(path, csv.str());
    res.files_written.push_back(path);
    return res;
}

}  // namespace lagrange
