#include "geohall/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "geohall/corpus.hpp"
#include "geohall/error.hpp"
#include "geohall/evalkit.hpp"
#include "geohall/json_io.hpp"
#include "geohall/pipeline.hpp"
#include "geohall/profile_csv.hpp"

namespace geohall::cli {

namespace fs = std::filesystem;

namespace {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

class Logger {
public:
    void set_level(std::string_view s) {
        if (s == "error") level_ = Level::error;
        else if (s == "warn") level_ = Level::warn;
        else if (s == "info") level_ = Level::info;
        else if (s == "debug") level_ = Level::debug;
        else throw UsageError("unknown log level '" + std::string(s) + "'");
    }
    void set_command(std::string cmd) { cmd_ = std::move(cmd); }

    void log(Level lvl, const std::string& msg) const {
        static constexpr std::array<std::string_view, 4> names{"error", "warn", "info", "debug"};
        if (lvl > level_) return;
        std::cerr << "geohall level=" << names[static_cast<std::size_t>(lvl)] << " cmd=" << cmd_ << " msg=\"" << msg
                  << "\"\n";
    }
    void info(const std::string& msg) const { log(Level::info, msg); }
    void warn(const std::string& msg) const { log(Level::warn, msg); }
    void error(const std::string& msg) const { log(Level::error, msg); }

private:
    Level level_ = Level::info;
    std::string cmd_ = "-";
};

void apply_config_file(RunConfig& cfg, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path.string());
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw UsageError("config file " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw UsageError("config file " + path.string() + " must hold a JSON object");
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "subcommand") cfg.subcommand = value.get<std::string>();
            else if (key == "domains") cfg.domains = value.get<std::vector<std::string>>();
            else if (key == "types") cfg.types = value.get<std::vector<std::string>>();
            else if (key == "levels") cfg.levels = value.get<std::vector<int>>();
            else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else if (key == "perturb") cfg.perturb = value.get<bool>();
            else if (key == "offsets") cfg.offsets = value.get<std::vector<std::int64_t>>();
            else if (key == "history_table") cfg.history_table = value.get<std::string>();
            else if (key == "manifest") cfg.manifest = value.get<std::string>();
            else if (key == "traces") cfg.traces = value.get<std::string>();
            else if (key == "stats") cfg.stats = value.get<std::string>();
            else if (key == "out") cfg.out = value.get<std::string>();
            else if (key == "in") cfg.in = value.get<std::string>();
            else if (key == "layers") cfg.layers = value.get<int>();
            else if (key == "dim") cfg.dim = value.get<int>();
            else if (key == "heads") cfg.heads = value.get<int>();
            else if (key == "effects") cfg.effects = value.get<std::vector<std::string>>();
            else if (key == "domain_scales") cfg.domain_scales = value.get<std::vector<std::string>>();
            else if (key == "answer_gain") cfg.answer_gain = value.get<double>();
            else if (key == "payload") cfg.payload = value.get<std::string>();
            else if (key == "dtype") cfg.dtype = value.get<std::string>();
            else if (key == "statistics") cfg.statistics = value.get<std::vector<std::string>>();
            else if (key == "span") cfg.span = value.get<std::string>();
            else if (key == "normalized") cfg.normalized = value.get<bool>();
            else if (key == "baseline_relative") cfg.baseline_relative = value.get<bool>();
            else if (key == "format") cfg.format = value.get<std::string>();
            else if (key == "log_level") cfg.log_level = value.get<std::string>();
            else throw UsageError("config file " + path.string() + ": unknown key '" + key + "'");
        }
    } catch (const Json::type_error& e) {
        throw UsageError("config file " + path.string() + ": " + e.what());
    }
}

void require_set(const std::string& value, std::string_view flag) {
    if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

void require_file(const std::string& path, std::string_view flag) {
    require_set(path, flag);
    if (!fs::is_regular_file(path)) throw UsageError(std::string(flag) + " " + path + " does not exist");
}

void require_dir(const std::string& path, std::string_view flag) {
    require_set(path, flag);
    if (!fs::is_directory(path)) throw UsageError(std::string(flag) + " " + path + " is not a directory");
}

void require_parent(const std::string& path, std::string_view flag) {
    require_set(path, flag);
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty() && !fs::is_directory(parent))
        throw UsageError(std::string(flag) + ": directory " + parent.string() + " does not exist");
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

std::vector<geostats::Statistic> selected_statistics(const RunConfig& cfg) {
    std::vector<geostats::Statistic> out;
    for (const auto& s : cfg.statistics) out.push_back(geostats::parse_statistic(s));
    if (out.empty()) throw UsageError("--statistics selects nothing");
    return out;
}

corpus::DatasetSpec dataset_spec(const RunConfig& cfg) {
    corpus::DatasetSpec spec;
    for (const auto& d : cfg.domains)
        if (!d.empty()) spec.domains.push_back(corpus::parse_domain(d));
    for (const auto& t : cfg.types)
        if (!t.empty()) spec.types.push_back(corpus::parse_hall_type(t));
    spec.levels = cfg.levels;
    spec.seed = cfg.seed;
    spec.include_perturbations = cfg.perturb;
    spec.perturbation_offsets = cfg.offsets;
    spec.validate();
    return spec;
}

mocklm::MockConfig mock_config(const RunConfig& cfg) {
    mocklm::MockConfig mc;
    mc.num_layers = cfg.layers;
    mc.hidden_dim = cfg.dim;
    mc.num_heads = cfg.heads;
    mc.seed = cfg.seed;
    mc.answer_gain = cfg.answer_gain;
    for (const auto& e : cfg.effects) mc.effects.push_back(mocklm::parse_effect(e));
    for (const auto& s : cfg.domain_scales) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw UsageError("--domain-scale expects domain=scale, got '" + s + "'");
        char* end = nullptr;
        const std::string num = s.substr(eq + 1);
        const double v = std::strtod(num.c_str(), &end);
        if (num.empty() || *end != '\0') throw UsageError("--domain-scale: bad scale '" + num + "'");
        mc.domain_hidden_scale[corpus::parse_domain(s.substr(0, eq))] = v;
    }
    mc.validate();
    return mc;
}

void cmd_gen(const RunConfig& cfg, const Logger& log) {
    const auto spec = dataset_spec(cfg);
    require_parent(cfg.out, "--out");
    corpus::Dataset ds;
    if (cfg.history_table.empty()) {
        ds = corpus::build_dataset(spec);
    } else {
        require_file(cfg.history_table, "--history-table");
        const auto table = corpus::load_history_table(cfg.history_table);
        ds = corpus::build_dataset(spec, corpus::generate_corpora(spec.seed, table));
    }
    auto out = open_out(cfg.out);
    corpus::write_manifest(out, ds);
    std::size_t baselines = 0;
    for (const auto& r : ds.records) baselines += r.hall_type == corpus::HallType::baseline && !r.is_perturbation();
    log.info("wrote " + std::to_string(ds.records.size()) + " records (" + std::to_string(baselines) +
             " baseline) to " + cfg.out);
}

void cmd_mock_extract(const RunConfig& cfg, const Logger& log) {
    require_file(cfg.manifest, "--manifest");
    require_set(cfg.traces, "--traces");
    const auto mc = mock_config(cfg);
    pipeline::ExtractOptions opts;
    opts.dtype = trace::parse_dtype(cfg.dtype);
    opts.payload = trace::parse_payload_kind(cfg.payload);
    opts.workers = pipeline::worker_count();
    const auto ds = corpus::read_manifest(fs::path(cfg.manifest));
    const auto entries = pipeline::mock_extract_all(ds, mc, cfg.traces, opts);
    log.info("wrote " + std::to_string(entries.size()) + " traces to " + cfg.traces);
}

void cmd_stats(const RunConfig& cfg, const Logger& log) {
    require_dir(cfg.traces, "--traces");
    require_parent(cfg.out, "--out");
    const auto stats = selected_statistics(cfg);
    const auto mode = pipeline::parse_span_mode(cfg.span);
    const auto entries = trace::read_trace_manifest(cfg.traces);
    const auto profiles = pipeline::compute_stats(entries, cfg.traces, stats, mode, pipeline::worker_count());
    if (mode == pipeline::SpanMode::answer) {
        const auto skipped = entries.size() - profiles.size() / stats.size();
        if (skipped > 0) log.warn(std::to_string(skipped) + " records without an answer span were skipped");
    }
    write_profiles(fs::path(cfg.out), profiles);
    log.info("wrote " + std::to_string(profiles.size()) + " profiles to " + cfg.out);
}

void cmd_normalize(const RunConfig& cfg, const Logger& log) {
    require_dir(cfg.traces, "--traces");
    require_file(cfg.stats, "--stats");
    require_parent(cfg.out, "--out");
    const auto entries = trace::read_trace_manifest(cfg.traces);
    const auto profiles = read_profiles(fs::path(cfg.stats));
    const auto normalized = pipeline::normalize_all(entries, profiles);
    write_profiles(fs::path(cfg.out), normalized);
    log.info("wrote " + std::to_string(normalized.size()) + " normalized profiles to " + cfg.out);
}

void cmd_eval(const RunConfig& cfg, const Logger& log) {
    require_dir(cfg.traces, "--traces");
    require_file(cfg.stats, "--stats");
    require_set(cfg.out, "--out");
    const auto stats = selected_statistics(cfg);
    const auto entries = trace::read_trace_manifest(cfg.traces);
    const auto profiles = read_profiles(fs::path(cfg.stats));
    const auto labeled = pipeline::label_profiles(entries, profiles);

    const auto report = evalkit::detection_table(labeled, stats, cfg.normalized);
    const auto summaries = evalkit::distribution_summary(labeled, evalkit::GroupBy{}, cfg.baseline_relative);

    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) throw IoError("cannot create " + cfg.out + ": " + ec.message());
    const fs::path dir(cfg.out);
    open_out(dir / "report.json") << evalkit::report_to_json(report);
    open_out(dir / "report.txt") << evalkit::render_text(report);
    auto csv = open_out(dir / "distribution.csv");
    evalkit::write_distribution_csv(csv, summaries);
    log.info("evaluated " + std::to_string(report.cells.size()) + " cells (" + std::to_string(report.missing.size()) +
             " missing) into " + cfg.out);
}

void cmd_report(const RunConfig& cfg, const Logger& log) {
    require_file(cfg.in, "--in");
    require_parent(cfg.out, "--out");
    std::ifstream in(cfg.in);
    std::ostringstream ss;
    ss << in.rdbuf();
    const auto report = evalkit::report_from_json(ss.str());
    auto out = open_out(cfg.out);
    if (cfg.format == "text") {
        out << evalkit::render_text(report);
    } else if (cfg.format == "json") {
        out << evalkit::report_to_json(report);
    } else if (cfg.format == "csv") {
        out << "statistic,domain,hall_type,level,layer,auroc\n";
        char buf[32];
        for (const auto& c : report.cells)
            for (std::size_t l = 0; l < c.auroc_per_layer.size(); ++l) {
                std::snprintf(buf, sizeof buf, "%.17g", c.auroc_per_layer[l]);
                out << c.statistic << ',' << corpus::to_string(c.domain) << ',' << corpus::to_string(c.hall_type) << ','
                    << c.level << ',' << l << ',' << buf << '\n';
            }
    } else {
        throw UsageError("unknown report format '" + cfg.format + "' (expected text, json or csv)");
    }
    log.info("rendered " + cfg.format + " report to " + cfg.out);
}

}  // namespace

int run(const std::vector<std::string>& args) {
    RunConfig cfg;
    Logger log;

    // Config file values land in cfg before flag parsing so flags win.
    std::vector<std::string> argv_rest(args.begin() + (args.empty() ? 0 : 1), args.end());
    try {
        for (std::size_t i = 0; i < argv_rest.size(); ++i) {
            const auto& a = argv_rest[i];
            if (a == "--config" && i + 1 < argv_rest.size()) apply_config_file(cfg, argv_rest[i + 1]);
            else if (a.rfind("--config=", 0) == 0) apply_config_file(cfg, a.substr(9));
        }
    } catch (const UsageError& e) {
        log.error(e.what());
        return kExitUsage;
    }

    CLI::App app{"geohall: synthetic hallucination corpora, geometric statistics and detection evaluation"};
    app.require_subcommand(0, 1);
    app.fallthrough();
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (keys are RunConfig field names)");
    app.add_option("--log-level", cfg.log_level, "error, warn, info or debug");

    auto* gen = app.add_subcommand("gen", "Generate a dataset manifest (JSON lines)");
    gen->add_option("--domains", cfg.domains, "math, history, counting, all")->delimiter(',');
    gen->add_option("--types", cfg.types, "hallucination types")->delimiter(',');
    gen->add_option("--levels", cfg.levels, "severity levels")->delimiter(',');
    gen->add_option("--seed", cfg.seed, "dataset seed");
    gen->add_flag("--perturb", cfg.perturb, "emit perturbation siblings for baseline and incorrectness records");
    gen->add_option("--offsets", cfg.offsets, "perturbation offsets, e.g. --offsets=-5,-2,-1,1,2,5")->delimiter(',');
    gen->add_option("--history-table", cfg.history_table, "override the bundled history CSV");
    gen->add_option("--out", cfg.out, "output manifest path");

    auto* mock = app.add_subcommand("mock-extract", "Write mock activation traces for a dataset manifest");
    mock->add_option("--manifest", cfg.manifest, "dataset manifest");
    mock->add_option("--traces", cfg.traces, "output trace directory");
    mock->add_option("--layers", cfg.layers, "number of layers");
    mock->add_option("--dim", cfg.dim, "hidden dimension");
    mock->add_option("--heads", cfg.heads, "attention heads");
    mock->add_option("--seed", cfg.seed, "mock seed");
    mock->add_option("--effect", cfg.effects, "type:level:layer:scale:shift (repeatable)");
    mock->add_option("--domain-scale", cfg.domain_scales, "domain=scale hidden-state scale (repeatable)");
    mock->add_option("--answer-gain", cfg.answer_gain, "answer-span gain per unit of perturbation offset");
    mock->add_option("--payload", cfg.payload, "hidden or gram");
    mock->add_option("--dtype", cfg.dtype, "f32 or f16");

    auto* stats = app.add_subcommand("stats", "Compute per-layer statistics from traces");
    stats->add_option("--traces", cfg.traces, "trace directory");
    stats->add_option("--statistics", cfg.statistics, "HS, ME, AS")->delimiter(',');
    stats->add_option("--span", cfg.span, "full or answer");
    stats->add_option("--out", cfg.out, "output statistics CSV");

    auto* norm = app.add_subcommand("normalize", "Perturbation-normalize statistics");
    norm->add_option("--traces", cfg.traces, "trace directory (for sibling labels)");
    norm->add_option("--stats", cfg.stats, "statistics CSV");
    norm->add_option("--out", cfg.out, "output normalized statistics CSV");

    auto* eval = app.add_subcommand("eval", "Detection table and distribution summaries");
    eval->add_option("--traces", cfg.traces, "trace directory (for labels)");
    eval->add_option("--stats", cfg.stats, "statistics CSV (raw or normalized)");
    eval->add_option("--statistics", cfg.statistics, "HS, ME, AS")->delimiter(',');
    eval->add_flag("--normalized", cfg.normalized, "evaluate the -Norm statistics");
    eval->add_flag("--baseline-relative", cfg.baseline_relative, "subtract baseline means in distribution summaries");
    eval->add_option("--out", cfg.out, "output directory");

    auto* report = app.add_subcommand("report", "Render a report.json as text, json or csv");
    report->add_option("--in", cfg.in, "report.json");
    report->add_option("--format", cfg.format, "text, json or csv");
    report->add_option("--out", cfg.out, "output file");

    std::vector<std::string> reversed(argv_rest.rbegin(), argv_rest.rend());
    if (!cfg.subcommand.empty()) {
        const bool named = std::any_of(argv_rest.begin(), argv_rest.end(), [&](const std::string& a) {
            return a == "gen" || a == "mock-extract" || a == "stats" || a == "normalize" || a == "eval" || a == "report";
        });
        if (!named) reversed.push_back(cfg.subcommand);
    }
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        log.error(e.what());
        std::cerr << app.help();
        return kExitUsage;
    }

    const auto started = std::chrono::steady_clock::now();
    try {
        log.set_level(cfg.log_level);
        if (gen->parsed()) log.set_command("gen"), cmd_gen(cfg, log);
        else if (mock->parsed()) log.set_command("mock-extract"), cmd_mock_extract(cfg, log);
        else if (stats->parsed()) log.set_command("stats"), cmd_stats(cfg, log);
        else if (norm->parsed()) log.set_command("normalize"), cmd_normalize(cfg, log);
        else if (eval->parsed()) log.set_command("eval"), cmd_eval(cfg, log);
        else if (report->parsed()) log.set_command("report"), cmd_report(cfg, log);
        else {
            log.error("no subcommand given");
            std::cerr << app.help();
            return kExitUsage;
        }
    } catch (const UsageError& e) {
        log.error(e.what());
        return kExitUsage;
    } catch (const NumericalError& e) {
        log.error(e.what());
        return kExitNumerical;
    } catch (const DataError& e) {
        log.error(e.what());
        return kExitData;
    }
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
    log.log(Level::debug, "finished in " + std::to_string(ms.count()) + " ms");
    return kExitOk;
}

int run(int argc, const char* const* argv) { return run(std::vector<std::string>(argv, argv + argc)); }

}  // namespace geohall::cli
