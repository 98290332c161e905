#include "lagrange/results_store.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace lagrange {

ResultsStore::ResultsStore(std::string path) : path_(std::move(path)) {
    const fs::path parent = fs::path(path_).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    load();
}

std::string ResultsStore::outcome_key(const std::string& clip_id,
                                      SystemId system, Codec codec) {
    return clip_id + "\x1f" + to_string(system) + "\x1f" + to_string(codec);
}

void ResultsStore::load() {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;  // first run, nothing stored yet

    std::string line;
    std::size_t line_no = 0;
    bool ended_with_newline = true;
    while (true) {
        if (!std::getline(in, line)) break;
        ++line_no;
        ended_with_newline = !in.eof();
        if (line.empty()) continue;
        try {
            const nlohmann::json j = nlohmann::json::parse(line);
            const std::string type = j.at("type").get<std::string>();
            if (type == "outcome") {
                SystemOutcome o = j.at("record").get<SystemOutcome>();
                outcome_index_.insert(outcome_key(o.clip_id, o.system, o.codec));
                outcomes_.push_back(std::move(o));
            } else if (type == "optimization") {
                optimizations_.push_back(
                    j.at("record").get<OptimizationResult>());
            } else {
                warnings_.push_back("line " + std::to_string(line_no) +
                                    ": unknown record type '" + type + "'");
            }
        } catch (const std::exception& e) {
            if (!ended_with_newline) break;  // torn final line, silently dropped
            warnings_.push_back("line " + std::to_string(line_no) +
                                " unreadable: " + e.what());
        }
    }
    // A file that stops mid-line lost its trailing newline in a crash; the
    // next append must not land on the same line as the fragment.
    trailing_newline_ = ended_with_newline;
}

bool ResultsStore::has_outcome(const std::string& clip_id, SystemId system,
                               Codec codec) const {
    std::lock_guard lock(mu_);
    return outcome_index_.count(outcome_key(clip_id, system, codec)) > 0;
}

void ResultsStore::append_line(const std::string& line) {
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!trailing_newline_) {
        out << "\n";  // terminate a torn fragment left by a crash
        trailing_newline_ = true;
    }
    out << line << "\n";
    out.flush();
    if (!out) throw std::runtime_error("results store write failed: " + path_);
}

void ResultsStore::append(const SystemOutcome& outcome) {
    nlohmann::json j{{"type", "outcome"}, {"record", outcome}};
    std::lock_guard lock(mu_);
    append_line(j.dump());
    outcome_index_.insert(
        outcome_key(outcome.clip_id, outcome.system, outcome.codec));
    outcomes_.push_back(outcome);
}

void ResultsStore::append(const OptimizationResult& result) {
    nlohmann::json j{{"type", "optimization"}, {"record", result}};
    std::lock_guard lock(mu_);
    append_line(j.dump());
    optimizations_.push_back(result);
}

}  // namespace lagrange
