#include "idfs/dataset_io.hpp"
#include "idfs/evaluation.hpp"
#include "idfs/features.hpp"
#include "idfs/optimizer.hpp"
#include "idfs/ranking.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <numeric>
#include <optional>

using nlohmann::json;
using namespace idfs;

namespace {

enum class LogLevel { Quiet, Info, Debug };
LogLevel g_log = LogLevel::Info;

void log_info(const std::string& msg) {
    if (g_log != LogLevel::Quiet) std::cerr << "[info] " << msg << '\n';
}

void log_debug(const std::string& msg) {
    if (g_log == LogLevel::Debug) std::cerr << "[debug] " << msg << '\n';
}

void emit_error(const std::string& code, const std::string& message, const std::string& context) {
    std::cerr << json{{"code", code}, {"message", message}, {"context", context}}.dump() << '\n';
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error&) {
        throw Error(ErrorCode::SchemaError, "config file is not valid JSON", path);
    }
    if (!j.is_object()) throw Error(ErrorCode::SchemaError, "config file must hold a JSON object", path);
    return j;
}

/// Copies a flag into the config object when it was given on the command line.
template <typename T>
void override_key(const CLI::App* sub, const std::string& flag, json& cfg, const std::string& key,
                  const T& value) {
    if (sub->count(flag) > 0) cfg[key] = value;
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

void prepare_out(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create output directory", dir.string());
}

void write_config_echo(const fs::path& out, const std::string& command, const json& resolved) {
    write_json(out / "config.json", {{"version", IDFS_VERSION}, {"command", command}, {"config", resolved}});
}

FeatureRef parse_plant(const json& j) {
    reject_unknown_keys(j, {"channel", "feature"}, "informative[]");
    if (!j.contains("channel") || !j.contains("feature")) {
        throw Error(ErrorCode::SchemaError, "informative entries need channel and feature");
    }
    const int channel = j.at("channel").get<int>();
    const auto& f = j.at("feature");
    return {channel, f.is_string() ? feature_index(f.get<std::string>()) : f.get<int>()};
}

// ---- generate ----

struct GenerateArgs {
    std::string config, out;
    int n = 0, ch = 0, c = 0;
    std::uint64_t seed = 0;
    double effect = 0.0, missing_ratio = 0.0, sample_rate_hz = 0.0, duration_s = 0.0;
    std::uint64_t missing_seed = 0;
    std::vector<std::string> plant;
};

int run_generate(const CLI::App* sub, const GenerateArgs& a) {
    json cfg = load_config(a.config);
    const bool from_file = !a.config.empty();
    reject_unknown_keys(cfg, {"n", "ch", "c", "seed", "informative", "sample_rate_hz", "duration_s", "effect",
                              "missing_ratio", "missing_seed"},
                        "generate");
    if (from_file) {
        for (const char* key : {"n", "ch", "c", "seed"}) {
            if (!cfg.contains(key)) throw Error(ErrorCode::SchemaError, "missing required key", key);
        }
    }
    override_key(sub, "--n", cfg, "n", a.n);
    override_key(sub, "--ch", cfg, "ch", a.ch);
    override_key(sub, "--c", cfg, "c", a.c);
    override_key(sub, "--seed", cfg, "seed", a.seed);
    override_key(sub, "--effect", cfg, "effect", a.effect);
    override_key(sub, "--sample-rate", cfg, "sample_rate_hz", a.sample_rate_hz);
    override_key(sub, "--duration", cfg, "duration_s", a.duration_s);
    override_key(sub, "--missing-ratio", cfg, "missing_ratio", a.missing_ratio);
    override_key(sub, "--missing-seed", cfg, "missing_seed", a.missing_seed);
    if (sub->count("--plant") > 0) {
        json list = json::array();
        for (const auto& p : a.plant) {
            const auto colon = p.find(':');
            if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--plant expects CHANNEL:FEATURE", p);
            const std::string feat = p.substr(colon + 1);
            list.push_back({{"channel", std::stoi(p.substr(0, colon))}, {"feature", feat}});
        }
        cfg["informative"] = list;
    }

    SyntheticSpec spec;
    double missing_ratio = 0.0;
    try {
        spec.n = cfg.value("n", spec.n);
        spec.ch = cfg.value("ch", spec.ch);
        spec.c = cfg.value("c", spec.c);
        spec.seed = cfg.value("seed", spec.seed);
        spec.effect = cfg.value("effect", spec.effect);
        spec.sample_rate_hz = cfg.value("sample_rate_hz", spec.sample_rate_hz);
        spec.duration_s = cfg.value("duration_s", spec.duration_s);
        missing_ratio = cfg.value("missing_ratio", 0.0);
        if (cfg.contains("informative")) {
            for (const auto& e : cfg.at("informative")) spec.informative.push_back(parse_plant(e));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, "wrong type in generator config", e.what());
    }
    const std::uint64_t missing_seed = cfg.value("missing_seed", spec.seed);

    json resolved = {{"n", spec.n}, {"ch", spec.ch}, {"c", spec.c}, {"seed", spec.seed}, {"effect", spec.effect},
                     {"sample_rate_hz", spec.sample_rate_hz}, {"duration_s", spec.duration_s},
                     {"missing_ratio", missing_ratio}, {"missing_seed", missing_seed}};
    json plants = json::array();
    for (const auto& [ch, f] : spec.informative) {
        plants.push_back({{"channel", ch}, {"feature", feature_names().at(static_cast<std::size_t>(f))}});
    }
    resolved["informative"] = plants;

    auto ds = generate_synthetic(spec);
    bool capped = false;
    if (missing_ratio > 0.0) {
        const auto plan = make_missing_plan(spec.n, spec.ch, missing_ratio, missing_seed);
        capped = plan.capped;
        ds = apply_missing(ds, plan);
    } else if (missing_ratio < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "missing ratio must lie in [0, 1)");
    }
    const fs::path out = a.out;
    prepare_out(out);
    write_dataset(out, ds, {{"generator", resolved}, {"missing_capped", capped}}, spec.informative);
    write_config_echo(out, "generate", resolved);
    log_info("wrote dataset with " + std::to_string(spec.n) + " samples to " + out.string());
    return 0;
}

// ---- extract ----

struct ExtractArgs {
    std::string input, out;
    int classes = 0;
};

int run_extract(const ExtractArgs& a) {
    const auto ds = extract_dataset(a.input, a.classes);
    const fs::path out = a.out;
    prepare_out(out);
    const json resolved = {{"input", a.input}, {"classes", ds.n_classes()}};
    write_dataset(out, ds, {{"extracted_from", a.input}});
    write_config_echo(out, "extract", resolved);
    log_info("extracted " + std::to_string(ds.n_samples()) + " recordings into " + out.string());
    return 0;
}

// ---- select ----

struct HyperFlags {
    double lambda = 0, gamma = 0, outer_tol = 0, gpi_tol = 0, alm_tol = 0;
    int outer_max_iter = 0, gpi_max_iter = 0, gpi_restarts = 0, alm_max_iter = 0;
    bool freeze_alpha = false, ignore_indicator = false;
};

void add_hyper_flags(CLI::App* sub, HyperFlags& h) {
    sub->add_option("--lambda", h.lambda, "redundancy weight (>= 0)");
    sub->add_option("--gamma", h.gamma, "channel-weight exponent (> 1)");
    sub->add_option("--outer-tol", h.outer_tol, "relative objective change for convergence");
    sub->add_option("--outer-max-iter", h.outer_max_iter, "alternating sweeps cap");
    sub->add_option("--gpi-tol", h.gpi_tol);
    sub->add_option("--gpi-max-iter", h.gpi_max_iter);
    sub->add_option("--gpi-restarts", h.gpi_restarts);
    sub->add_option("--alm-tol", h.alm_tol);
    sub->add_option("--alm-max-iter", h.alm_max_iter);
    sub->add_flag("--freeze-alpha", h.freeze_alpha, "keep channel weights uniform");
    sub->add_flag("--ignore-indicator", h.ignore_indicator, "treat absent samples as observed zeros");
}

void apply_hyper_flags(const CLI::App* sub, const HyperFlags& h, json& hp) {
    override_key(sub, "--lambda", hp, "lambda", h.lambda);
    override_key(sub, "--gamma", hp, "gamma", h.gamma);
    override_key(sub, "--outer-tol", hp, "outer_tol", h.outer_tol);
    override_key(sub, "--outer-max-iter", hp, "outer_max_iter", h.outer_max_iter);
    override_key(sub, "--gpi-tol", hp, "gpi_tol", h.gpi_tol);
    override_key(sub, "--gpi-max-iter", hp, "gpi_max_iter", h.gpi_max_iter);
    override_key(sub, "--gpi-restarts", hp, "gpi_restarts", h.gpi_restarts);
    override_key(sub, "--alm-tol", hp, "alm_tol", h.alm_tol);
    override_key(sub, "--alm-max-iter", hp, "alm_max_iter", h.alm_max_iter);
    override_key(sub, "--freeze-alpha", hp, "freeze_alpha", h.freeze_alpha);
    override_key(sub, "--ignore-indicator", hp, "ignore_indicator", h.ignore_indicator);
}

struct SelectArgs {
    std::string config, data, out, trace, score;
    std::uint64_t seed = 0;
    bool standardize = true;
    HyperFlags hyper;
};

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

int run_select(const CLI::App* sub, const SelectArgs& a) {
    json cfg = load_config(a.config);
    reject_unknown_keys(cfg, {"hyperparams", "score", "standardize"}, "select");
    json hp_json = cfg.value("hyperparams", json::object());
    apply_hyper_flags(sub, a.hyper, hp_json);
    override_key(sub, "--seed", hp_json, "rng_seed", a.seed);
    override_key(sub, "--score", cfg, "score", a.score);
    override_key(sub, "--standardize", cfg, "standardize", a.standardize);

    const Hyperparams hp = hyperparams_from_json(hp_json);
    hp.validate();
    ScoreMode score = ScoreMode::Product;
    bool standardize_features = true;
    try {
        score = parse_score_mode(cfg.value("score", std::string("product")));
        standardize_features = cfg.value("standardize", true);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, "wrong type in select config", e.what());
    }
    const json resolved = {{"data", a.data},
                           {"hyperparams", hyperparams_to_json(hp)},
                           {"score", to_string(score)},
                           {"standardize", standardize_features}};

    const auto raw = read_dataset(a.data);
    MultiChannelDataset ds = raw;
    if (standardize_features) {
        IndexList all(static_cast<std::size_t>(raw.n_samples()));
        std::iota(all.begin(), all.end(), Index{0});
        ds = standardize(raw, fit_standardizer(raw, all));
    }
    log_info("fitting " + std::to_string(ds.n_channels()) + " views, " + std::to_string(ds.n_samples()) +
             " samples");

    std::string trace_lines;
    TraceSink sink;
    if (!a.trace.empty()) {
        sink = [&trace_lines](const SweepTrace& t) {
            trace_lines += json{{"iteration", t.iteration},
                                {"objective", t.objective},
                                {"delta_w", t.delta_w},
                                {"delta_theta", t.delta_theta},
                                {"delta_alpha", t.delta_alpha},
                                {"orthogonality_residual", t.orthogonality_residual},
                                {"theta_simplex_residual", t.theta_simplex_residual},
                                {"alpha_simplex_residual", t.alpha_simplex_residual}}
                               .dump() +
                           "\n";
        };
    }
    const ModelState state = fit(ds, hp, sink);
    log_debug("converged=" + std::string(state.converged ? "true" : "false") +
              " sweeps=" + std::to_string(state.iterations_run));
    const SelectionResult sel = rank_features(state, score, hp.gamma);

    const fs::path out = a.out;
    prepare_out(out);
    CsvTable table{{"channel", "feature", "score", "rank"}, {}};
    for (std::size_t i = 0; i < sel.ranked.size(); ++i) {
        const auto& r = sel.ranked[i];
        table.rows.push_back({std::to_string(ds.view(static_cast<std::size_t>(r.channel)).channel_index()),
                              std::to_string(r.feature), format_double(r.score), std::to_string(i + 1)});
    }
    write_file_atomic(out / "selection.csv", to_csv(table));

    json views = json::array();
    for (std::size_t v = 0; v < ds.n_channels(); ++v) {
        json w_rows = json::array();
        for (Index i = 0; i < state.w[v].rows(); ++i) w_rows.push_back(vector_json(state.w[v].row(i).transpose()));
        views.push_back({{"channel_index", ds.view(v).channel_index()},
                         {"feature_names", ds.view(v).feature_names()},
                         {"theta", vector_json(state.theta[v])},
                         {"bias", vector_json(state.bias[v])},
                         {"w", w_rows}});
    }
    write_json(out / "model_state.json", {{"config", resolved},
                                          {"version", IDFS_VERSION},
                                          {"converged", state.converged},
                                          {"iterations_run", state.iterations_run},
                                          {"objective_history", state.objective_history},
                                          {"alpha", vector_json(state.alpha)},
                                          {"views", views}});
    if (!a.trace.empty()) write_file_atomic(a.trace, trace_lines);
    write_config_echo(out, "select", resolved);
    log_info("wrote ranking of " + std::to_string(sel.ranked.size()) + " features to " + out.string());
    return 0;
}

// ---- evaluate / sweep ----

struct EvalArgs {
    std::string config, data, out, score;
    int folds = 0;
    std::vector<int> k;
    std::vector<double> ratios, lambda_grid, gamma_grid;
    std::vector<std::string> methods;
    bool no_redundancy = false, no_channel_weight = false, no_indicator = false;
    bool standardize = true;
    std::uint64_t seed = 0;
    double ridge = 0.0;
    HyperFlags hyper;
};

void add_eval_flags(CLI::App* sub, EvalArgs& a) {
    sub->add_option("--config", a.config, "JSON config file; flags take precedence");
    sub->add_option("--data", a.data, "dataset directory")->required();
    sub->add_option("--out", a.out, "output directory")->required();
    sub->add_option("--folds", a.folds, "cross-validation folds (>= 2)");
    sub->add_option("--k", a.k, "feature subset sizes");
    sub->add_option("--ratios", a.ratios, "missing ratios in [0, 1)");
    sub->add_option("--methods", a.methods,
                    "idfs-mec, no-redundancy, no-channel-weight, no-indicator, variance, fisher");
    sub->add_flag("--no-redundancy", a.no_redundancy, "add the lambda = 0 ablation");
    sub->add_flag("--no-channel-weight", a.no_channel_weight, "add the frozen-alpha ablation");
    sub->add_flag("--no-indicator", a.no_indicator, "add the indicator-free ablation");
    sub->add_option("--seed", a.seed, "fold and missing-plan seed");
    sub->add_option("--ridge", a.ridge, "classifier ridge penalty");
    sub->add_option("--score", a.score, "product or product-gamma");
    sub->add_option("--standardize", a.standardize, "z-score with train-fold statistics");
    sub->add_option("--lambda-grid", a.lambda_grid);
    sub->add_option("--gamma-grid", a.gamma_grid);
    add_hyper_flags(sub, a.hyper);
}

EvalConfig resolve_eval(const CLI::App* sub, const EvalArgs& a) {
    json cfg = load_config(a.config);
    override_key(sub, "--folds", cfg, "folds", a.folds);
    override_key(sub, "--k", cfg, "k_grid", a.k);
    override_key(sub, "--ratios", cfg, "missing_ratios", a.ratios);
    override_key(sub, "--methods", cfg, "methods", a.methods);
    override_key(sub, "--seed", cfg, "seed", a.seed);
    override_key(sub, "--ridge", cfg, "ridge", a.ridge);
    override_key(sub, "--score", cfg, "score", a.score);
    override_key(sub, "--standardize", cfg, "standardize", a.standardize);
    override_key(sub, "--lambda-grid", cfg, "lambda_grid", a.lambda_grid);
    override_key(sub, "--gamma-grid", cfg, "gamma_grid", a.gamma_grid);
    if (a.no_redundancy) cfg["ablation"]["no_redundancy"] = true;
    if (a.no_channel_weight) cfg["ablation"]["no_channel_weight"] = true;
    if (a.no_indicator) cfg["ablation"]["no_indicator"] = true;
    json hp = cfg.value("hyperparams", json::object());
    apply_hyper_flags(sub, a.hyper, hp);
    cfg["hyperparams"] = hp;
    EvalConfig out = config_from_json(cfg);
    out.validate();
    return out;
}

int run_evaluate(const CLI::App* sub, const EvalArgs& a) {
    const EvalConfig cfg = resolve_eval(sub, a);
    const auto ds = read_dataset(a.data);
    const auto planted = read_ground_truth(a.data);
    log_info("evaluating " + std::to_string(cfg.resolved_methods().size()) + " methods over " +
             std::to_string(cfg.missing_ratios.size()) + " missing ratios");
    const EvalReport report = run_experiment(ds, cfg, planted);
    const fs::path out = a.out;
    prepare_out(out);
    json j = report_to_json(report);
    j["version"] = IDFS_VERSION;
    write_json(out / "report.json", j);
    write_file_atomic(out / "report.csv", report_to_csv(report));
    write_json(out / "timing.json", timing_to_json(report));
    write_config_echo(out, "evaluate", config_to_json(cfg));
    for (const auto& c : report.cells) {
        log_debug(std::string(to_string(c.method)) + " ratio=" + format_double(c.ratio) + " k=" +
                  std::to_string(c.k) + " accuracy=" + format_double(c.mean_accuracy));
    }
    return 0;
}

int run_sweep(const CLI::App* sub, const EvalArgs& a) {
    const EvalConfig cfg = resolve_eval(sub, a);
    const auto ds = read_dataset(a.data);
    log_info("sweeping " + std::to_string(cfg.lambda_grid.size() * cfg.gamma_grid.size()) + " (lambda, gamma) cells");
    const auto rows = sweep(ds, cfg);
    const fs::path out = a.out;
    prepare_out(out);
    write_file_atomic(out / "sweep.csv", sweep_to_csv(rows));
    write_config_echo(out, "sweep", config_to_json(cfg));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-channel feature selection with missing-channel indicators"};
    app.set_version_flag("--version", IDFS_VERSION);
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "quiet, info or debug")
        ->check(CLI::IsMember({"quiet", "info", "debug"}));

    GenerateArgs gen;
    auto* gen_cmd = app.add_subcommand("generate", "synthesize a multi-channel dataset with planted features");
    gen_cmd->add_option("--config", gen.config, "generator spec JSON (requires n, ch, c, seed)");
    gen_cmd->add_option("--out", gen.out, "output dataset directory")->required();
    gen_cmd->add_option("--n", gen.n, "samples");
    gen_cmd->add_option("--ch", gen.ch, "channels");
    gen_cmd->add_option("--c", gen.c, "classes");
    gen_cmd->add_option("--seed", gen.seed);
    gen_cmd->add_option("--effect", gen.effect, "relative amplitude change per class step");
    gen_cmd->add_option("--sample-rate", gen.sample_rate_hz);
    gen_cmd->add_option("--duration", gen.duration_s, "epoch length in seconds");
    gen_cmd->add_option("--missing-ratio", gen.missing_ratio);
    gen_cmd->add_option("--missing-seed", gen.missing_seed);
    gen_cmd->add_option("--plant", gen.plant, "CHANNEL:FEATURE, repeatable");

    ExtractArgs ext;
    auto* ext_cmd = app.add_subcommand("extract", "compute features from raw recording CSVs");
    ext_cmd->add_option("--input", ext.input, "directory of recordings")->required();
    ext_cmd->add_option("--out", ext.out, "output dataset directory")->required();
    ext_cmd->add_option("--classes", ext.classes, "class count (default: max label + 1)");

    SelectArgs sel;
    auto* sel_cmd = app.add_subcommand("select", "fit the model and rank features");
    sel_cmd->add_option("--config", sel.config, "JSON with hyperparams, score, standardize");
    sel_cmd->add_option("--data", sel.data, "dataset directory")->required();
    sel_cmd->add_option("--out", sel.out, "output directory")->required();
    sel_cmd->add_option("--trace", sel.trace, "write per-sweep diagnostics as JSON lines");
    sel_cmd->add_option("--score", sel.score, "product or product-gamma");
    sel_cmd->add_option("--seed", sel.seed, "solver seed");
    sel_cmd->add_option("--standardize", sel.standardize, "z-score features before fitting");
    add_hyper_flags(sel_cmd, sel.hyper);

    EvalArgs ev;
    auto* ev_cmd = app.add_subcommand("evaluate", "cross-validated comparison of selectors");
    add_eval_flags(ev_cmd, ev);
    EvalArgs sw;
    auto* sw_cmd = app.add_subcommand("sweep", "mean accuracy over the lambda x gamma grid");
    add_eval_flags(sw_cmd, sw);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error("InvalidArgument", e.what(), "command line");
        return 2;
    }
    g_log = log_level == "quiet" ? LogLevel::Quiet : log_level == "debug" ? LogLevel::Debug : LogLevel::Info;

    try {
        if (gen_cmd->parsed()) return run_generate(gen_cmd, gen);
        if (ext_cmd->parsed()) return run_extract(ext);
        if (sel_cmd->parsed()) return run_select(sel_cmd, sel);
        if (ev_cmd->parsed()) return run_evaluate(ev_cmd, ev);
        if (sw_cmd->parsed()) return run_sweep(sw_cmd, sw);
    } catch (const Error& e) {
        emit_error(to_string(e.code()), e.what(), e.context());
        return 1;
    } catch (const std::exception& e) {
        emit_error("InternalError", e.what(), "");
        return 1;
    }
    return 0;
}
