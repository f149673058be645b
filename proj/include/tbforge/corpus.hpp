#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace tbforge::corpus {

// One corpus item: a design spec plus its golden implementation and, when the
// upstream dataset provides one, a reference testbench.
struct ProblemRecord {
    std::string id;
    std::string source;       // dataset tag, free-form ("pyranet", "deepcircuitx", ...)
    std::string spec;         // natural-language design specification
    std::string golden_code;  // reference Verilog module, stored verbatim
    std::optional<std::string> reference_tb;
    std::map<std::string, std::string> meta;  // unknown input fields land here

    bool operator==(const ProblemRecord&) const = default;
};

struct DatasetManifest {
    std::string path;
    std::size_t record_count = 0;
    std::size_t with_tb_count = 0;
    std::set<std::string> source_tags;

    bool operator==(const DatasetManifest&) const = default;
};

struct SftLabels {
    std::string classification;  // "functional", "syntactic_only", ...
    std::string provenance;      // pipeline variant or "distillation"

    bool operator==(const SftLabels&) const = default;
};

// One supervised fine-tuning example. The response must contain at least one
// extractable Verilog code block; write_sft_dataset enforces this.
struct SftRecord {
    std::string instruction;
    std::string response;
    SftLabels labels;

    bool operator==(const SftRecord&) const = default;
};

// Throws ValidationError if a required field is empty.
void validate_record(const ProblemRecord& record);

// Loads a line-delimited dataset. Order preserved, one JSON object per line.
// Throws ParseError (with line number) on malformed lines and ValidationError
// on missing/empty required fields or duplicate ids.
std::vector<ProblemRecord> load_dataset(const std::filesystem::path& path);

// Order-preserving predicate filter. When require_tb is set, only records with
// a reference testbench survive; when source_filter is given, only records
// whose source tag is in the set survive. An empty result is valid.
std::vector<ProblemRecord> filter_records(
    const std::vector<ProblemRecord>& records, bool require_tb,
    const std::optional<std::set<std::string>>& source_filter = std::nullopt);

// Writes records one per line and a sibling "<path>.manifest.json".
DatasetManifest write_dataset(const std::vector<ProblemRecord>& records,
                              const std::filesystem::path& path);

// Validates every record (response must contain a code block), then writes.
// Also emits the sibling manifest; its source_tags hold the provenance labels.
DatasetManifest write_sft_dataset(const std::vector<SftRecord>& records,
                                  const std::filesystem::path& path);

std::vector<SftRecord> load_sft_dataset(const std::filesystem::path& path);

// Manifest for an in-memory record list (what write_dataset would emit).
DatasetManifest manifest_for(const std::vector<ProblemRecord>& records,
                             const std::string& path);

} // namespace tbforge::corpus
