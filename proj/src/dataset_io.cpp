#include "idfs/dataset_io.hpp"

#include "idfs/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#ifndef IDFS_VERSION
#define IDFS_VERSION "unknown"
#endif

namespace idfs {

namespace {

constexpr int kFormatVersion = 1;

std::string view_file(std::size_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "view_%03zu.csv", v);
    return buf;
}

void check_cell_text(const std::string& s, const std::string& what) {
    if (s.empty() || s.find_first_of(",\n\r") != std::string::npos) {
        throw Error(ErrorCode::SchemaError, what + " must be non-empty without commas or newlines",
                    s);
    }
}

template <typename T>
T get_key(const nlohmann::json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw Error(ErrorCode::SchemaError, "missing required key", where + "." + key);
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::SchemaError, "wrong type for key", where + "." + key);
    }
}

nlohmann::json parse_json_file(const fs::path& path) {
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::SchemaError, "malformed JSON", path.string());
    }
}

int parse_int(std::string_view text, const std::string& context) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw Error(ErrorCode::SchemaError, "expected an integer", context);
    }
    return v;
}

CsvTable read_csv(const fs::path& path) { return parse_csv(read_file(path), path.string()); }

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, ptr);
}

double parse_double(std::string_view text, const std::string& context) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw Error(ErrorCode::SchemaError, "expected a number", context + ": '" + std::string(text) + "'");
    }
    return v;
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot open file for writing", tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error(ErrorCode::IoError, "write failed", tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorCode::IoError, "rename failed", path.string());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open file", path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CsvTable parse_csv(std::string_view text, const std::string& context) {
    CsvTable t;
    std::vector<std::vector<std::string>> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = end + 1;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            cells.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos
                                                                                   : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        lines.push_back(std::move(cells));
    }
    if (lines.empty()) throw Error(ErrorCode::SchemaError, "CSV has no header", context);
    t.header = std::move(lines.front());
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].size() != t.header.size()) {
            throw Error(ErrorCode::SchemaError, "CSV row width differs from header",
                        context + ", line " + std::to_string(i + 1));
        }
        t.rows.push_back(std::move(lines[i]));
    }
    return t;
}

std::string to_csv(const CsvTable& table) {
    std::string out;
    auto append_row = [&out](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += row[i];
        }
        out += '\n';
    };
    append_row(table.header);
    for (const auto& r : table.rows) append_row(r);
    return out;
}

void reject_unknown_keys(const nlohmann::json& j, const std::vector<std::string>& allowed,
                         const std::string& where) {
    if (!j.is_object()) throw Error(ErrorCode::SchemaError, "expected a JSON object", where);
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw Error(ErrorCode::SchemaError, "unknown key", where.empty() ? key : where + "." + key);
        }
    }
}

void write_dataset(const fs::path& dir, const MultiChannelDataset& ds, const nlohmann::json& extra,
                   const std::vector<FeatureRef>& planted) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create directory", dir.string());

    const auto& ids = ds.sample_ids();
    for (const auto& id : ids) check_cell_text(id, "sample id");
    const auto cls = ds.class_indices();

    CsvTable labels{{"sample_id", "label"}, {}};
    CsvTable present{{"sample_id"}, {}};
    for (const auto& v : ds.views()) present.header.push_back("channel_" + std::to_string(v.channel_index()));
    for (Eigen::Index j = 0; j < ds.n_samples(); ++j) {
        const auto sj = static_cast<std::size_t>(j);
        labels.rows.push_back({ids[sj], std::to_string(cls[sj])});
        std::vector<std::string> row{ids[sj]};
        for (const auto& v : ds.views()) row.push_back(v.present()(j) ? "1" : "0");
        present.rows.push_back(std::move(row));
    }

    nlohmann::json views = nlohmann::json::array();
    for (std::size_t v = 0; v < ds.n_channels(); ++v) {
        const auto& view = ds.view(v);
        CsvTable t{{"sample_id"}, {}};
        for (const auto& name : view.feature_names()) {
            check_cell_text(name, "feature name");
            t.header.push_back(name);
        }
        for (Eigen::Index j = 0; j < ds.n_samples(); ++j) {
            std::vector<std::string> row{ids[static_cast<std::size_t>(j)]};
            for (Eigen::Index f = 0; f < view.n_features(); ++f) {
                row.push_back(format_double(view.features()(f, j)));
            }
            t.rows.push_back(std::move(row));
        }
        write_file_atomic(dir / view_file(v), to_csv(t));
        views.push_back({{"channel_index", view.channel_index()},
                         {"n_features", view.n_features()},
                         {"file", view_file(v)}});
    }
    write_file_atomic(dir / "labels.csv", to_csv(labels));
    write_file_atomic(dir / "present.csv", to_csv(present));

    nlohmann::json manifest = {{"format", "idfs-dataset"},
                               {"format_version", kFormatVersion},
                               {"version", IDFS_VERSION},
                               {"n_samples", ds.n_samples()},
                               {"n_classes", ds.n_classes()},
                               {"views", views},
                               {"extra", extra}};
    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");

    const fs::path truth = dir / "ground_truth.json";
    if (!planted.empty()) {
        nlohmann::json pairs = nlohmann::json::array();
        for (const auto& [c, f] : planted) pairs.push_back({{"channel", c}, {"feature", f}});
        write_file_atomic(truth, nlohmann::json{{"planted", pairs}}.dump(2) + "\n");
    } else {
        fs::remove(truth, ec);
    }
}

MultiChannelDataset read_dataset(const fs::path& dir) {
    const auto manifest = parse_json_file(dir / "manifest.json");
    reject_unknown_keys(manifest,
                        {"format", "format_version", "version", "n_samples", "n_classes", "views", "extra"},
                        "manifest");
    if (get_key<std::string>(manifest, "format", "manifest") != "idfs-dataset") {
        throw Error(ErrorCode::SchemaError, "not a dataset manifest", dir.string());
    }
    if (get_key<int>(manifest, "format_version", "manifest") != kFormatVersion) {
        throw Error(ErrorCode::SchemaError, "unsupported dataset format version", dir.string());
    }
    const auto n = get_key<Eigen::Index>(manifest, "n_samples", "manifest");
    const auto c = get_key<int>(manifest, "n_classes", "manifest");
    const auto views_meta = get_key<nlohmann::json>(manifest, "views", "manifest");

    const CsvTable labels = read_csv(dir / "labels.csv");
    if (labels.header != std::vector<std::string>{"sample_id", "label"} ||
        static_cast<Eigen::Index>(labels.rows.size()) != n) {
        throw Error(ErrorCode::SchemaError, "labels.csv must be sample_id,label with n rows", dir.string());
    }
    std::vector<std::string> ids;
    std::vector<int> cls;
    for (const auto& row : labels.rows) {
        ids.push_back(row[0]);
        cls.push_back(parse_int(row[1], "labels.csv"));
    }

    const CsvTable present = read_csv(dir / "present.csv");
    if (present.header.size() != views_meta.size() + 1 ||
        static_cast<Eigen::Index>(present.rows.size()) != n) {
        throw Error(ErrorCode::SchemaError, "present.csv shape disagrees with manifest", dir.string());
    }

    std::vector<ChannelView> views;
    for (std::size_t v = 0; v < views_meta.size(); ++v) {
        const auto& meta = views_meta[v];
        const std::string where = "manifest.views[" + std::to_string(v) + "]";
        reject_unknown_keys(meta, {"channel_index", "n_features", "file"}, where);
        const int channel = get_key<int>(meta, "channel_index", where);
        const auto d = get_key<Eigen::Index>(meta, "n_features", where);
        const auto file = get_key<std::string>(meta, "file", where);

        const CsvTable t = read_csv(dir / file);
        if (static_cast<Eigen::Index>(t.header.size()) != d + 1 ||
            static_cast<Eigen::Index>(t.rows.size()) != n) {
            throw Error(ErrorCode::SchemaError, "view file shape disagrees with manifest", file);
        }
        Matrix x(d, n);
        Mask mask(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto sj = static_cast<std::size_t>(j);
            if (t.rows[sj][0] != ids[sj] || present.rows[sj][0] != ids[sj]) {
                throw Error(ErrorCode::SchemaError, "sample ids differ between files",
                            file + ", row " + std::to_string(j + 1));
            }
            const std::string& flag = present.rows[sj][v + 1];
            if (flag != "0" && flag != "1") {
                throw Error(ErrorCode::SchemaError, "present.csv entries must be 0 or 1",
                            "row " + std::to_string(j + 1));
            }
            mask(j) = flag == "1";
            for (Eigen::Index f = 0; f < d; ++f) {
                x(f, j) = mask(j) ? parse_double(t.rows[sj][static_cast<std::size_t>(f) + 1], file) : 0.0;
            }
        }
        views.emplace_back(channel, std::move(x), std::move(mask),
                           std::vector<std::string>(t.header.begin() + 1, t.header.end()));
    }
    return MultiChannelDataset(std::move(views), one_hot(cls, c), std::move(ids));
}

std::vector<FeatureRef> read_ground_truth(const fs::path& dir) {
    const fs::path path = dir / "ground_truth.json";
    if (!fs::exists(path)) return {};
    const auto j = parse_json_file(path);
    reject_unknown_keys(j, {"planted"}, "ground_truth");
    std::vector<FeatureRef> out;
    for (const auto& p : get_key<nlohmann::json>(j, "planted", "ground_truth")) {
        reject_unknown_keys(p, {"channel", "feature"}, "ground_truth.planted");
        out.emplace_back(get_key<int>(p, "channel", "ground_truth.planted"),
                         get_key<int>(p, "feature", "ground_truth.planted"));
    }
    return out;
}

void write_recording(const fs::path& csv_path, const Recording& rec) {
    CsvTable t;
    for (Eigen::Index ch = 0; ch < rec.samples.cols(); ++ch) t.header.push_back("channel_" + std::to_string(ch));
    for (Eigen::Index i = 0; i < rec.samples.rows(); ++i) {
        std::vector<std::string> row;
        for (Eigen::Index ch = 0; ch < rec.samples.cols(); ++ch) {
            const double v = rec.samples(i, ch);
            row.push_back(std::isnan(v) ? std::string() : format_double(v));
        }
        t.rows.push_back(std::move(row));
    }
    write_file_atomic(csv_path, to_csv(t));
    fs::path sidecar = csv_path;
    sidecar.replace_extension(".json");
    const nlohmann::json meta = {{"sample_rate_hz", rec.sample_rate_hz}, {"label", rec.label}};
    write_file_atomic(sidecar, meta.dump(2) + "\n");
}

Recording read_recording(const fs::path& csv_path) {
    fs::path sidecar = csv_path;
    sidecar.replace_extension(".json");
    const auto meta = parse_json_file(sidecar);
    reject_unknown_keys(meta, {"sample_rate_hz", "label"}, sidecar.filename().string());
    Recording rec;
    rec.sample_rate_hz = get_key<double>(meta, "sample_rate_hz", "sidecar");
    rec.label = get_key<int>(meta, "label", "sidecar");

    const CsvTable t = read_csv(csv_path);
    for (std::size_t ch = 0; ch < t.header.size(); ++ch) {
        if (t.header[ch] != "channel_" + std::to_string(ch)) {
            throw Error(ErrorCode::SchemaError, "recording header must be channel_0..channel_{ch-1}",
                        csv_path.string());
        }
    }
    rec.samples.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        for (std::size_t ch = 0; ch < t.header.size(); ++ch) {
            const std::string& cell = t.rows[i][ch];
            rec.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(ch)) =
                cell.empty() ? std::numeric_limits<double>::quiet_NaN()
                             : parse_double(cell, csv_path.string());
        }
    }
    return rec;
}

MultiChannelDataset extract_dataset(const fs::path& dir, int n_classes) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.size() < 2) throw Error(ErrorCode::TooFewSamples, "need at least two recordings", dir.string());

    std::vector<Recording> recs;
    for (const auto& f : files) recs.push_back(read_recording(f));
    const Eigen::Index ch = recs.front().samples.cols();
    int max_label = 0;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        if (recs[i].samples.cols() != ch) {
            throw Error(ErrorCode::ShapeMismatch, "recordings differ in channel count", files[i].string());
        }
        max_label = std::max(max_label, recs[i].label);
    }
    const int c = n_classes > 0 ? n_classes : max_label + 1;

    const auto n = static_cast<Eigen::Index>(recs.size());
    std::vector<ChannelView> views;
    for (Eigen::Index v = 0; v < ch; ++v) {
        Matrix x = Matrix::Zero(kFeaturesPerChannel, n);
        Mask present = Mask::Constant(n, false);
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto& rec = recs[static_cast<std::size_t>(j)];
            const auto col = rec.samples.col(v);
            if (col.array().isNaN().all()) continue;
            SignalEpoch epoch{col, rec.sample_rate_hz, static_cast<int>(v)};
            try {
                x.col(j) = extract_features(epoch);
            } catch (const Error& e) {
                throw Error(e.code(), e.what(), files[static_cast<std::size_t>(j)].string() + ", " + e.context());
            }
            present(j) = true;
        }
        views.emplace_back(static_cast<int>(v), std::move(x), std::move(present), feature_names());
    }
    std::vector<int> labels;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        labels.push_back(recs[i].label);
        ids.push_back(files[i].stem().string());
    }
    return MultiChannelDataset(std::move(views), one_hot(labels, c), std::move(ids));
}

nlohmann::json hyperparams_to_json(const Hyperparams& hp) {
    return {{"lambda", hp.lambda},
            {"gamma", hp.gamma},
            {"outer_tol", hp.outer_tol},
            {"outer_max_iter", hp.outer_max_iter},
            {"gpi_tol", hp.gpi_tol},
            {"gpi_max_iter", hp.gpi_max_iter},
            {"gpi_restarts", hp.gpi_restarts},
            {"alm_tol", hp.alm_tol},
            {"alm_max_iter", hp.alm_max_iter},
            {"alm_mu0", hp.alm_mu0},
            {"alm_rho", hp.alm_rho},
            {"rng_seed", hp.rng_seed},
            {"freeze_alpha", hp.freeze_alpha},
            {"ignore_indicator", hp.ignore_indicator}};
}

Hyperparams hyperparams_from_json(const nlohmann::json& j, Hyperparams base) {
    const auto keys = hyperparams_to_json(base);
    std::vector<std::string> allowed;
    for (const auto& [k, v] : keys.items()) allowed.push_back(k);
    reject_unknown_keys(j, allowed, "hyperparams");
    auto take = [&](const char* key, auto& field) {
        if (j.contains(key)) field = get_key<std::decay_t<decltype(field)>>(j, key, "hyperparams");
    };
    take("lambda", base.lambda);
    take("gamma", base.gamma);
    take("outer_tol", base.outer_tol);
    take("outer_max_iter", base.outer_max_iter);
    take("gpi_tol", base.gpi_tol);
    take("gpi_max_iter", base.gpi_max_iter);
    take("gpi_restarts", base.gpi_restarts);
    take("alm_tol", base.alm_tol);
    take("alm_max_iter", base.alm_max_iter);
    take("alm_mu0", base.alm_mu0);
    take("alm_rho", base.alm_rho);
    take("rng_seed", base.rng_seed);
    take("freeze_alpha", base.freeze_alpha);
    take("ignore_indicator", base.ignore_indicator);
    return base;
}

}  // namespace idfs
