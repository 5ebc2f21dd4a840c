#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace flat4::cli {

// One job: a command name, its parameters (flags merged over an optional --config file) and an output directory.
struct JobConfig {
    std::string command;
    nlohmann::json params = nlohmann::json::object();
    std::string out_dir = ".";
    bool write_files = true;

    // Checks tolerances and the output directory; throws flat4::Error.
    void validate() const;
};

const std::vector<std::string>& commands();

// Runs a job and returns its report. Artifacts go to out_dir; the report is also written to report.json.
nlohmann::json run(const JobConfig& job);

// Parses argv, runs, prints the report (or an error object) and returns the exit status.
int main(int argc, char** argv);

}  // namespace flat4::cli
