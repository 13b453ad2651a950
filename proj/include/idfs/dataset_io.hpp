#pragma once

#include "idfs/core.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace idfs {

namespace fs = std::filesystem;

/// 17 significant digits; parses back to the identical double.
std::string format_double(double v);
double parse_double(std::string_view text, const std::string& context = {});

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const fs::path& path, std::string_view content);
std::string read_file(const fs::path& path);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Plain comma-separated values without quoting; empty cells are kept.
CsvTable parse_csv(std::string_view text, const std::string& context = {});
std::string to_csv(const CsvTable& table);

/// Dataset directory layout:
///   manifest.json     format version, n, c, per-view channel index and feature count, extras
///   labels.csv        sample_id,label
///   present.csv       sample_id,channel_<v>... as 0/1
///   view_<v>.csv      sample_id,<feature names>; one row per sample, absent rows hold zeros
///   ground_truth.json optional planted (channel, feature) pairs
void write_dataset(const fs::path& dir, const MultiChannelDataset& ds,
                   const nlohmann::json& extra = nlohmann::json::object(),
                   const std::vector<FeatureRef>& planted = {});
MultiChannelDataset read_dataset(const fs::path& dir);
/// Empty when the directory has no ground-truth file.
std::vector<FeatureRef> read_ground_truth(const fs::path& dir);

/// One raw recording: time x channel samples plus the sidecar metadata.
struct Recording {
    Matrix samples;  // time x channel; NaN marks a missing channel
    double sample_rate_hz = 250.0;
    int label = 0;
};

/// <stem>.csv with header channel_0..channel_{ch-1} and <stem>.json {sample_rate_hz, label}.
/// Missing channels are written as empty cells.
void write_recording(const fs::path& csv_path, const Recording& rec);
Recording read_recording(const fs::path& csv_path);

/// Features of every recording in `dir` (sorted by file name). A channel whose column is
/// entirely empty is absent for that sample.
MultiChannelDataset extract_dataset(const fs::path& dir, int n_classes = 0);

nlohmann::json hyperparams_to_json(const Hyperparams& hp);
/// Rejects unknown keys; missing keys keep the values in `base`.
Hyperparams hyperparams_from_json(const nlohmann::json& j, Hyperparams base = {});

/// Throws SchemaError naming the first key of `j` outside `allowed`.
void reject_unknown_keys(const nlohmann::json& j, const std::vector<std::string>& allowed,
                         const std::string& where);

}  // namespace idfs
