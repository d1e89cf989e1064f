#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace mtf::cli {

const char* version();
const std::vector<std::string>& experiments();

// Every key an experiment accepts, with its default value.
nlohmann::json defaults(const std::string& experiment);

struct ExperimentConfig {
    std::string experiment;
    std::string name;  // output basename
    std::uint64_t seed = 0;
    int threads = 1;
    nlohmann::json params;  // complete: defaults merged with the document

    // Strict: unknown keys and mistyped values throw PreconditionError naming the key.
    static ExperimentConfig parse(const std::string& experiment, const nlohmann::json& doc);
    nlohmann::json to_json() const;
    // FNV-1a of the canonical serialization, as 16 hex digits. Thread count is excluded.
    std::string hash() const;
};

// Checks each experiment's preconditions without running it.
void validate(const ExperimentConfig& cfg);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
    CsvTable& row();
    CsvTable& add(double v);
    CsvTable& add(std::int64_t v);
    CsvTable& add(std::uint64_t v);
    CsvTable& add(int v) { return add(static_cast<std::int64_t>(v)); }
    CsvTable& add(bool v) { return add(static_cast<std::int64_t>(v)); }
    CsvTable& add(const std::string& v);
    std::size_t rows() const { return cells_.size(); }
    // RFC 4180 with LF line endings; `extra` columns are appended to every row.
    std::string str(const std::vector<std::pair<std::string, std::string>>& extra = {}) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> cells_;
};

std::string format_number(double v);

struct Artifacts {
    nlohmann::json summary;
    CsvTable table{{}};
    std::string headline;
};

Artifacts execute(const ExperimentConfig& cfg);

// Entry point; returns 0, 2 on precondition errors, 3 on budget errors, 1 otherwise.
int main(int argc, char** argv);

}  // namespace mtf::cli
