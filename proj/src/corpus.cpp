#include "tbforge/corpus.hpp"

#include "tbforge/agents.hpp"
#include "tbforge/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <unordered_set>

using nlohmann::json;

namespace tbforge::corpus {

namespace {

const std::unordered_set<std::string> kKnownFields = {
    "id", "source", "spec", "golden_code", "reference_tb", "meta"};

std::string require_string(const json& obj, const std::string& field, std::size_t line) {
    auto it = obj.find(field);
    if (it == obj.end() || it->is_null() || (it->is_string() && it->get<std::string>().empty())) {
        throw ValidationError("line " + std::to_string(line) + ": missing or empty required field '" +
                              field + "'");
    }
    if (!it->is_string()) {
        throw ValidationError("line " + std::to_string(line) + ": field '" + field +
                              "' must be a string");
    }
    return it->get<std::string>();
}

ProblemRecord record_from_json(const json& obj, std::size_t line) {
    if (!obj.is_object()) {
        throw ParseError("record is not an object", line);
    }
    ProblemRecord rec;
    rec.id = require_string(obj, "id", line);
    rec.spec = require_string(obj, "spec", line);
    rec.golden_code = require_string(obj, "golden_code", line);

    if (auto it = obj.find("source"); it != obj.end() && it->is_string()) {
        rec.source = it->get<std::string>();
    }
    if (auto it = obj.find("reference_tb"); it != obj.end() && !it->is_null()) {
        if (!it->is_string()) {
            throw ValidationError("line " + std::to_string(line) + ": field 'reference_tb' must be a string");
        }
        if (it->get<std::string>().empty()) {
            throw ValidationError("line " + std::to_string(line) + ": field 'reference_tb' present but empty");
        }
        rec.reference_tb = it->get<std::string>();
    }
    if (auto it = obj.find("meta"); it != obj.end() && it->is_object()) {
        for (const auto& [key, value] : it->items()) {
            rec.meta[key] = value.is_string() ? value.get<std::string>() : value.dump();
        }
    }
    // Upstream datasets vary; keep unknown fields instead of rejecting them.
    for (const auto& [key, value] : obj.items()) {
        if (!kKnownFields.count(key)) {
            rec.meta[key] = value.is_string() ? value.get<std::string>() : value.dump();
        }
    }
    return rec;
}

json record_to_json(const ProblemRecord& rec) {
    json obj;
    obj["id"] = rec.id;
    obj["source"] = rec.source;
    obj["spec"] = rec.spec;
    obj["golden_code"] = rec.golden_code;
    if (rec.reference_tb) obj["reference_tb"] = *rec.reference_tb;
    if (!rec.meta.empty()) obj["meta"] = rec.meta;
    return obj;
}

json sft_to_json(const SftRecord& rec) {
    return json{{"instruction", rec.instruction},
                {"response", rec.response},
                {"labels",
                 {{"classification", rec.labels.classification},
                  {"provenance", rec.labels.provenance}}}};
}

SftRecord sft_from_json(const json& obj, std::size_t line) {
    if (!obj.is_object()) throw ParseError("record is not an object", line);
    SftRecord rec;
    rec.instruction = require_string(obj, "instruction", line);
    rec.response = require_string(obj, "response", line);
    if (auto it = obj.find("labels"); it != obj.end() && it->is_object()) {
        rec.labels.classification = it->value("classification", "");
        rec.labels.provenance = it->value("provenance", "");
    }
    return rec;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& dataset_path) {
    json obj;
    obj["path"] = manifest.path;
    obj["record_count"] = manifest.record_count;
    obj["with_tb_count"] = manifest.with_tb_count;
    obj["source_tags"] = manifest.source_tags;
    std::filesystem::path manifest_path = dataset_path;
    manifest_path += ".manifest.json";
    std::ofstream out(manifest_path);
    if (!out) throw Error("cannot write manifest: " + manifest_path.string());
    out << obj.dump(2) << '\n';
}

template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dataset: " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        fn(line, line_no);
    }
}

json parse_line(const std::string& line, std::size_t line_no) {
    try {
        return json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed record: ") + e.what(), line_no);
    }
}

} // namespace

void validate_record(const ProblemRecord& record) {
    if (record.id.empty()) throw ValidationError("record id is empty");
    if (record.spec.empty()) throw ValidationError("record '" + record.id + "': spec is empty");
    if (record.golden_code.empty())
        throw ValidationError("record '" + record.id + "': golden_code is empty");
    if (record.reference_tb && record.reference_tb->empty())
        throw ValidationError("record '" + record.id + "': reference_tb present but empty");
}

std::vector<ProblemRecord> load_dataset(const std::filesystem::path& path) {
    std::vector<ProblemRecord> records;
    std::unordered_set<std::string> seen_ids;
    for_each_line(path, [&](const std::string& line, std::size_t line_no) {
        json obj = parse_line(line, line_no);
        ProblemRecord rec = record_from_json(obj, line_no);
        if (!seen_ids.insert(rec.id).second) {
            throw ValidationError("line " + std::to_string(line_no) + ": duplicate id '" + rec.id +
                                  "'");
        }
        records.push_back(std::move(rec));
    });
    return records;
}

std::vector<ProblemRecord> filter_records(const std::vector<ProblemRecord>& records,
                                          bool require_tb,
                                          const std::optional<std::set<std::string>>& source_filter) {
    std::vector<ProblemRecord> kept;
    for (const auto& rec : records) {
        if (require_tb && !rec.reference_tb) continue;
        if (source_filter && !source_filter->count(rec.source)) continue;
        kept.push_back(rec);
    }
    return kept;
}

DatasetManifest manifest_for(const std::vector<ProblemRecord>& records, const std::string& path) {
    DatasetManifest manifest;
    manifest.path = path;
    manifest.record_count = records.size();
    for (const auto& rec : records) {
        if (rec.reference_tb) ++manifest.with_tb_count;
        if (!rec.source.empty()) manifest.source_tags.insert(rec.source);
    }
    return manifest;
}

DatasetManifest write_dataset(const std::vector<ProblemRecord>& records,
                              const std::filesystem::path& path) {
    for (const auto& rec : records) validate_record(rec);
    std::ofstream out(path);
    if (!out) throw Error("cannot write dataset: " + path.string());
    for (const auto& rec : records) {
        out << record_to_json(rec).dump() << '\n';
    }
    out.close();
    if (!out) throw Error("I/O failure writing dataset: " + path.string());
    DatasetManifest manifest = manifest_for(records, path.string());
    write_manifest(manifest, path);
    return manifest;
}

DatasetManifest write_sft_dataset(const std::vector<SftRecord>& records,
                                  const std::filesystem::path& path) {
    for (std::size_t i = 0; i < records.size(); ++i) {
        try {
            agents::extract_code_block(records[i].response);
        } catch (const ExtractionError&) {
            throw ValidationError("sft record " + std::to_string(i) +
                                  ": response contains no extractable code block");
        }
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write sft dataset: " + path.string());
    for (const auto& rec : records) {
        out << sft_to_json(rec).dump() << '\n';
    }
    out.close();
    if (!out) throw Error("I/O failure writing sft dataset: " + path.string());

    DatasetManifest manifest;
    manifest.path = path.string();
    manifest.record_count = records.size();
    for (const auto& rec : records) {
        if (!rec.labels.provenance.empty()) manifest.source_tags.insert(rec.labels.provenance);
    }
    write_manifest(manifest, path);
    return manifest;
}

std::vector<SftRecord> load_sft_dataset(const std::filesystem::path& path) {
    std::vector<SftRecord> records;
    for_each_line(path, [&](const std::string& line, std::size_t line_no) {
        records.push_back(sft_from_json(parse_line(line, line_no), line_no));
    });
    return records;
}

} // namespace tbforge::corpus
