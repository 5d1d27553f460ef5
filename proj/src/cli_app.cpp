#include "ranklab/cli_app.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ranklab/portfolio.hpp"
#include "ranklab/rank_transform.hpp"
#include "ranklab/stoch_calc.hpp"
#include "ranklab/verification.hpp"

#ifndef RANKLAB_VERSION
#define RANKLAB_VERSION "0.0.0"
#endif

namespace ranklab {

using nlohmann::json;

const char* version_string() { return RANKLAB_VERSION; }

RankBasedParams ModelConfig::as_rank_based() const {
    return type == "atlas" ? RankBasedParams::from_atlas(atlas) : rank_based;
}

std::size_t ModelConfig::n() const { return type == "atlas" ? atlas.n : rank_based.n(); }

namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
    return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> diagnostics)
    : ValidationError("invalid config:\n  " + join(diagnostics, "\n  ")),
      diagnostics_(std::move(diagnostics)) {}

std::vector<std::size_t> RunConfig::resolved_levels() const {
    if (!convergence_levels.empty()) return convergence_levels;
    if (steps % 16 != 0) return {};
    return {steps / 16, steps / 4, steps};
}

json RunConfig::echo() const {
    json model_json;
    model_json["type"] = model.type;
    if (model.type == "atlas") {
        model_json["n"] = model.atlas.n;
        model_json["g"] = model.atlas.g;
        model_json["sigma"] = model.atlas.sigma;
        const Eigen::VectorXd init = model.atlas.initial_log.size() == 0
                                         ? Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.atlas.n))
                                         : model.atlas.initial_log;
        model_json["initial_log"] = std::vector<double>(init.begin(), init.end());
    } else {
        const auto& rb = model.rank_based;
        model_json["drifts"] = std::vector<double>(rb.drifts.begin(), rb.drifts.end());
        model_json["volatilities"] = std::vector<double>(rb.volatilities.begin(), rb.volatilities.end());
        const Eigen::VectorXd init = rb.initial_log.size() == 0
                                         ? Eigen::VectorXd::Zero(rb.drifts.size())
                                         : rb.initial_log;
        model_json["initial_log"] = std::vector<double>(init.begin(), init.end());
    }
    json out;
    out["model"] = model_json;
    out["grid"] = {{"T", horizon}, {"M", steps}};
    out["monte_carlo"] = {{"paths", paths}, {"master_seed", master_seed}};
    out["experiments"] = experiments;
    out["portfolio"] = {{"generating_function", generating_function},
                        {"parameters", generating_parameters}};
    out["convergence"] = {{"claim", convergence_claim}, {"levels", resolved_levels()}};
    if (coincidence_delta) out["coincidence"] = {{"delta", *coincidence_delta}};
    return out;
}

namespace {

class ConfigReader {
public:
    explicit ConfigReader(const std::string& text) : text_(text) {}

    void fail(const std::vector<std::string>& key_path, const std::string& message) {
        const std::string where = join(key_path, ".");
        const auto line = locate(key_path);
        std::string d = line ? "line " + std::to_string(*line) + ": " : std::string();
        d += where.empty() ? message : where + ": " + message;
        diagnostics_.push_back(d);
    }

    bool ok() const { return diagnostics_.empty(); }
    std::vector<std::string> take() { return std::move(diagnostics_); }

    std::size_t line_at(std::size_t offset) const {
        offset = std::min(offset, text_.size());
        return 1 + static_cast<std::size_t>(std::count(text_.begin(), text_.begin() + offset, '\n'));
    }

    const json* child(const json& parent, const std::vector<std::string>& key_path, bool required) {
        const auto& key = key_path.back();
        if (!parent.contains(key)) {
            if (required) fail(key_path, "missing required key");
            return nullptr;
        }
        return &parent.at(key);
    }

    void only_keys(const json& object, const std::vector<std::string>& prefix,
                   const std::vector<std::string>& allowed) {
        for (const auto& [key, value] : object.items()) {
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                auto p = prefix;
                p.push_back(key);
                fail(p, "unknown key (expected one of: " + join(allowed, ", ") + ")");
            }
        }
    }

    std::optional<double> number(const json& parent, const std::vector<std::string>& key_path,
                                 bool required) {
        const json* v = child(parent, key_path, required);
        if (!v) return std::nullopt;
        if (!v->is_number()) {
            fail(key_path, "expected a number");
            return std::nullopt;
        }
        return v->get<double>();
    }

    std::optional<std::uint64_t> count(const json& parent, const std::vector<std::string>& key_path,
                                       bool required) {
        const json* v = child(parent, key_path, required);
        if (!v) return std::nullopt;
        if (!v->is_number_unsigned()) {
            fail(key_path, "expected a non-negative integer");
            return std::nullopt;
        }
        return v->get<std::uint64_t>();
    }

    std::optional<std::string> string(const json& parent, const std::vector<std::string>& key_path,
                                      bool required) {
        const json* v = child(parent, key_path, required);
        if (!v) return std::nullopt;
        if (!v->is_string()) {
            fail(key_path, "expected a string");
            return std::nullopt;
        }
        return v->get<std::string>();
    }

    std::optional<Eigen::VectorXd> vector(const json& parent, const std::vector<std::string>& key_path,
                                          bool required) {
        const json* v = child(parent, key_path, required);
        if (!v) return std::nullopt;
        if (!v->is_array() || !std::all_of(v->begin(), v->end(), [](const json& e) { return e.is_number(); })) {
            fail(key_path, "expected an array of numbers");
            return std::nullopt;
        }
        Eigen::VectorXd out(static_cast<Eigen::Index>(v->size()));
        for (std::size_t i = 0; i < v->size(); ++i) out[static_cast<Eigen::Index>(i)] = (*v)[i].get<double>();
        return out;
    }

    const json* object(const json& parent, const std::vector<std::string>& key_path, bool required) {
        const json* v = child(parent, key_path, required);
        if (v && !v->is_object()) {
            fail(key_path, "expected an object");
            return nullptr;
        }
        return v;
    }

private:
    std::optional<std::size_t> locate(const std::vector<std::string>& key_path) const {
        std::size_t pos = 0;
        std::optional<std::size_t> found;
        for (const auto& key : key_path) {
            const auto at = text_.find("\"" + key + "\"", pos);
            if (at == std::string::npos) break;
            found = at;
            pos = at + 1;
        }
        if (!found) return std::nullopt;
        return line_at(*found);
    }

    const std::string& text_;
    std::vector<std::string> diagnostics_;
};

template <typename Fn>
void check(ConfigReader& reader, const std::vector<std::string>& key_path, Fn&& fn) {
    try {
        fn();
    } catch (const ValidationError& e) {
        reader.fail(key_path, e.what());
    }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    ConfigReader reader(text);
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({"line " + std::to_string(reader.line_at(e.byte == 0 ? 0 : e.byte - 1)) +
                           ": malformed JSON (" + e.what() + ")"});
    }
    if (!root.is_object()) throw ConfigError({"line 1: config must be a JSON object"});

    RunConfig cfg;
    reader.only_keys(root, {}, {"model", "grid", "monte_carlo", "experiments", "portfolio",
                                "convergence", "coincidence", "output_dir"});

    if (const json* model = reader.object(root, {"model"}, true)) {
        if (auto type = reader.string(*model, {"model", "type"}, false)) cfg.model.type = *type;
        if (cfg.model.type == "atlas") {
            reader.only_keys(*model, {"model"}, {"type", "n", "g", "sigma", "initial_log"});
            if (auto n = reader.count(*model, {"model", "n"}, true)) cfg.model.atlas.n = *n;
            if (auto g = reader.number(*model, {"model", "g"}, true)) cfg.model.atlas.g = *g;
            if (auto s = reader.number(*model, {"model", "sigma"}, true)) cfg.model.atlas.sigma = *s;
            if (auto init = reader.vector(*model, {"model", "initial_log"}, false)) {
                cfg.model.atlas.initial_log = *init;
            }
            check(reader, {"model"}, [&] { cfg.model.atlas.validate(); });
        } else if (cfg.model.type == "rank_based") {
            reader.only_keys(*model, {"model"}, {"type", "drifts", "volatilities", "initial_log"});
            auto& rb = cfg.model.rank_based;
            if (auto d = reader.vector(*model, {"model", "drifts"}, true)) rb.drifts = *d;
            if (auto v = reader.vector(*model, {"model", "volatilities"}, true)) rb.volatilities = *v;
            if (auto init = reader.vector(*model, {"model", "initial_log"}, false)) rb.initial_log = *init;
            check(reader, {"model"}, [&] { rb.validate(); });
        } else {
            reader.fail({"model", "type"}, "unknown model type '" + cfg.model.type +
                                               "' (expected atlas or rank_based)");
        }
    }

    if (const json* grid = reader.object(root, {"grid"}, true)) {
        reader.only_keys(*grid, {"grid"}, {"T", "M"});
        const auto T = reader.number(*grid, {"grid", "T"}, true);
        const auto M = reader.count(*grid, {"grid", "M"}, true);
        if (T && M) {
            cfg.horizon = *T;
            cfg.steps = *M;
            check(reader, {"grid"}, [&] { build_grid(*T, *M); });
        }
    }

    if (const json* mc = reader.object(root, {"monte_carlo"}, true)) {
        reader.only_keys(*mc, {"monte_carlo"}, {"paths", "master_seed"});
        if (auto p = reader.count(*mc, {"monte_carlo", "paths"}, true)) {
            cfg.paths = *p;
            if (*p == 0) reader.fail({"monte_carlo", "paths"}, "must be at least 1");
        }
        if (auto seed = reader.count(*mc, {"monte_carlo", "master_seed"}, false)) cfg.master_seed = *seed;
    }

    if (const json* ex = reader.child(root, {"experiments"}, true)) {
        if (!ex->is_array() || ex->empty()) {
            reader.fail({"experiments"}, "expected a non-empty array of experiment names");
        } else {
            for (const auto& e : *ex) {
                if (!e.is_string()) {
                    reader.fail({"experiments"}, "experiment names must be strings");
                    continue;
                }
                const auto name = e.get<std::string>();
                const auto& known = known_experiments();
                if (std::find(known.begin(), known.end(), name) == known.end()) {
                    reader.fail({"experiments"}, "unknown experiment '" + name + "' (expected one of: " +
                                                     join(known, ", ") + ")");
                } else {
                    cfg.experiments.push_back(name);
                }
            }
        }
    }

    if (const json* pf = reader.object(root, {"portfolio"}, false)) {
        reader.only_keys(*pf, {"portfolio"}, {"generating_function", "parameters"});
        if (auto name = reader.string(*pf, {"portfolio", "generating_function"}, false)) {
            cfg.generating_function = *name;
        }
        if (const json* params = reader.object(*pf, {"portfolio", "parameters"}, false)) {
            for (const auto& [key, value] : params->items()) {
                if (!value.is_number()) {
                    reader.fail({"portfolio", "parameters", key}, "expected a number");
                } else {
                    cfg.generating_parameters[key] = value.get<double>();
                }
            }
        }
    }
    check(reader, {"portfolio"},
          [&] { GeneratingFunction::by_name(cfg.generating_function, cfg.generating_parameters); });

    if (const json* conv = reader.object(root, {"convergence"}, false)) {
        reader.only_keys(*conv, {"convergence"}, {"claim", "levels"});
        if (auto claim = reader.string(*conv, {"convergence", "claim"}, false)) {
            cfg.convergence_claim = *claim;
        }
        if (const json* levels = reader.child(*conv, {"convergence", "levels"}, false)) {
            if (!levels->is_array() ||
                !std::all_of(levels->begin(), levels->end(), [](const json& e) { return e.is_number_unsigned(); })) {
                reader.fail({"convergence", "levels"}, "expected an array of step counts");
            } else {
                for (const auto& e : *levels) cfg.convergence_levels.push_back(e.get<std::size_t>());
            }
        }
    }
    if (!parse_claim(cfg.convergence_claim)) {
        reader.fail({"convergence", "claim"}, "unknown claim '" + cfg.convergence_claim + "'");
    }
    const bool wants_levels =
        std::find(cfg.experiments.begin(), cfg.experiments.end(), "convergence") != cfg.experiments.end() ||
        std::find(cfg.experiments.begin(), cfg.experiments.end(), "coincidence") != cfg.experiments.end();
    if (wants_levels) {
        const auto levels = cfg.resolved_levels();
        if (levels.empty()) {
            reader.fail({"convergence", "levels"},
                        "no levels given and grid.M is not divisible by 16 for the default M/16, M/4, M");
        } else {
            std::vector<std::string> problems;
            if (levels.size() < 3) problems.push_back("at least 3 levels are required");
            for (std::size_t l = 0; l < levels.size(); ++l) {
                if (levels[l] < 2) problems.push_back("every level needs at least 2 steps");
                if (l > 0 && levels[l] <= levels[l - 1]) problems.push_back("levels must be strictly increasing");
                if (levels.back() % std::max<std::size_t>(levels[l], 1) != 0) {
                    problems.push_back("level " + std::to_string(levels[l]) + " does not divide the finest level");
                }
            }
            for (const auto& p : problems) reader.fail({"convergence", "levels"}, p);
        }
    }

    if (const json* co = reader.object(root, {"coincidence"}, false)) {
        reader.only_keys(*co, {"coincidence"}, {"delta"});
        if (auto delta = reader.number(*co, {"coincidence", "delta"}, false)) {
            if (!(*delta > 0.0)) reader.fail({"coincidence", "delta"}, "must be positive");
            cfg.coincidence_delta = *delta;
        }
    }

    if (auto dir = reader.string(root, {"output_dir"}, false)) cfg.output_dir = *dir;

    if (!reader.ok()) throw ConfigError(reader.take());
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config", path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void emit_csv(const CsvTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open CSV for writing", path);
    out << join(table.header, ",") << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            std::visit(
                [&](const auto& cell) {
                    using T = std::decay_t<decltype(cell)>;
                    if constexpr (std::is_same_v<T, double>) {
                        out << format_double(cell);
                    } else {
                        out << cell;
                    }
                },
                row[c]);
        }
        out << '\n';
    }
    if (!out.flush()) throw IoError("failed writing CSV", path);
}

void emit_summary(const json& summary, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open summary for writing", path);
    out << summary.dump(2) << '\n';
    if (!out.flush()) throw IoError("failed writing summary", path);
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read CSV", path);
    std::vector<std::vector<std::string>> out;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        out.push_back(std::move(cells));
    }
    return out;
}

namespace {

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct Stats {
    double mean = 0.0;
    double max = 0.0;
    double stderr_mean = 0.0;
    double mean_endpoint = 0.0;
};

Stats stats_of(const ResidualSeries& rs) {
    const Eigen::Map<const Eigen::VectorXd> sup(rs.sup.data(), static_cast<Eigen::Index>(rs.sup.size()));
    const Eigen::Map<const Eigen::VectorXd> end(rs.endpoint.data(),
                                               static_cast<Eigen::Index>(rs.endpoint.size()));
    const auto ms = mean_and_stderr(sup);
    return {ms.mean, sup.maxCoeff(), ms.stderr_mean, end.mean()};
}

class Runner {
public:
    Runner(const RunConfig& config, std::string dir, std::ostream& log)
        : cfg_(config),
          dir_(std::move(dir)),
          log_(log),
          grid_(config.horizon, config.steps),
          rng_{config.master_seed} {}

    void execute(const std::string& name) {
        log_ << "running " << name << '\n';
        try {
            if (name == "simulate") simulate();
            else if (name == "verify_lemma2") verify("lemma2", {Claim::lemma2});
            else if (name == "verify_lemma3") verify("lemma3", {Claim::lemma3});
            else if (name == "verify_lemma4") verify("lemma4", {Claim::lemma4_max, Claim::lemma4_min});
            else if (name == "verify_prop1") verify("prop1", {Claim::prop1});
            else if (name == "verify_prop3") prop3();
            else if (name == "convergence") convergence();
            else if (name == "coincidence") coincidence();
            else if (name == "remark_probe") remark();
            else throw ValidationError("unknown experiment " + name);
        } catch (const NumericError& e) {
            throw NumericError("experiment " + name + ": " + e.what());
        }
    }

    const std::vector<std::string>& written() const { return written_; }

private:
    const PathEnsemble& ensemble() {
        if (!ensemble_) {
            ensemble_.emplace(simulate_rank_based(cfg_.model.as_rank_based(), grid_, rng_, cfg_.paths));
        }
        return *ensemble_;
    }

    std::string file(const std::string& name) {
        const auto path = (std::filesystem::path(dir_) / name).string();
        written_.push_back(path);
        return path;
    }

    json base(const std::string& experiment) const {
        return {{"experiment", experiment}, {"config", cfg_.echo()}};
    }

    void simulate() {
        const auto& ens = ensemble();
        CsvTable table;
        table.header = {"path_id", "t"};
        for (std::size_t i = 0; i < ens.num_assets(); ++i) table.header.push_back("log_x" + std::to_string(i + 1));
        const Series t = grid_.points();
        for (std::size_t p = 0; p < ens.num_paths(); ++p) {
            const auto& values = ens.path(p);
            for (Eigen::Index m = 0; m < values.cols(); ++m) {
                std::vector<CsvCell> row{static_cast<std::int64_t>(p), t[m]};
                for (Eigen::Index i = 0; i < values.rows(); ++i) row.emplace_back(values(i, m));
                table.rows.push_back(std::move(row));
            }
        }
        emit_csv(table, file("simulate_paths.csv"));

        Eigen::VectorXd total_change(static_cast<Eigen::Index>(ens.num_paths()));
        for (std::size_t p = 0; p < ens.num_paths(); ++p) {
            const auto& v = ens.path(p);
            total_change[static_cast<Eigen::Index>(p)] = v.col(v.cols() - 1).sum() - v.col(0).sum();
        }
        const auto ms = mean_and_stderr(total_change);
        const double var = ens.num_paths() > 1
                               ? (total_change.array() - ms.mean).square().sum() /
                                     static_cast<double>(ens.num_paths() - 1)
                               : 0.0;
        auto summary = base("simulate");
        summary["paths"] = ens.num_paths();
        summary["steps"] = grid_.steps();
        summary["total_log_change_mean"] = ms.mean;
        summary["total_log_change_stderr"] = ms.stderr_mean;
        summary["total_log_change_variance"] = var;
        summary["is_atlas"] = cfg_.model.as_rank_based().is_atlas();
        emit_summary(summary, file("simulate_summary.json"));
    }

    void write_residuals(const std::string& stem, const std::vector<ResidualSeries>& series, json summary) {
        CsvTable table;
        table.header = {"path_id", "claim", "sup_residual", "endpoint_residual"};
        json results = json::array();
        Stats top;
        for (const auto& rs : series) {
            for (std::size_t p = 0; p < rs.sup.size(); ++p) {
                table.rows.push_back({static_cast<std::int64_t>(p), rs.label, rs.sup[p], rs.endpoint[p]});
            }
            const auto s = stats_of(rs);
            results.push_back({{"label", rs.label},
                               {"mean_residual", s.mean},
                               {"max_residual", s.max},
                               {"stderr_residual", s.stderr_mean},
                               {"mean_endpoint_residual", s.mean_endpoint}});
            if (s.mean >= top.mean) {
                top.mean = s.mean;
                top.stderr_mean = s.stderr_mean;
            }
            top.max = std::max(top.max, s.max);
            top.mean_endpoint = std::max(top.mean_endpoint, s.mean_endpoint);
        }
        emit_csv(table, file(stem + "_residuals.csv"));
        summary["claim"] = stem;
        summary["levels"] = {grid_.steps()};
        summary["step"] = {grid_.step()};
        summary["mean_residual"] = {top.mean};
        summary["max_residual"] = {top.max};
        summary["stderr_residual"] = {top.stderr_mean};
        summary["mean_endpoint_residual"] = {top.mean_endpoint};
        summary["fitted_rate"] = nullptr;
        summary["results"] = results;
        emit_summary(summary, file(stem + "_summary.json"));
    }

    void verify(const std::string& stem, const std::vector<Claim>& claims) {
        std::vector<ResidualSeries> all;
        for (Claim c : claims) {
            for (auto& rs : verify_ensemble(c, ensemble())) all.push_back(std::move(rs));
        }
        write_residuals(stem, all, base("verify_" + stem));
    }

    void prop3() {
        const auto S = GeneratingFunction::by_name(cfg_.generating_function, cfg_.generating_parameters);
        const auto& ens = ensemble();
        const auto ranked = ranked_ensemble(ens);
        const auto market = market_weights(ens);
        const auto weights = generated_weights(market, ranked.frames, S);
        const auto report = decompose(weights, market, ranked.frames, S, ens);

        ResidualSeries rs{Claim::prop3, "prop3", {}, {}};
        CsvTable series;
        series.header = {"path_id", "t", "relative_log_return", "generating_log_change", "structural",
                         "trading", "theta_hat"};
        const Series t = grid_.points();
        Eigen::VectorXd theta_qv(static_cast<Eigen::Index>(ens.num_paths()));
        Eigen::VectorXd relative_qv(theta_qv.size());
        Eigen::VectorXd theta_final(theta_qv.size());
        for (std::size_t p = 0; p < report.paths.size(); ++p) {
            const auto& d = report.paths[p];
            const auto check_result = check_decomposition(d);
            rs.sup.push_back(check_result.generating_match.sup);
            rs.endpoint.push_back(check_result.generating_match.endpoint);
            theta_qv[static_cast<Eigen::Index>(p)] = check_result.theta_qv;
            relative_qv[static_cast<Eigen::Index>(p)] = check_result.relative_qv;
            theta_final[static_cast<Eigen::Index>(p)] = check_result.theta_final;
            for (Eigen::Index m = 0; m < t.size(); ++m) {
                series.rows.push_back({static_cast<std::int64_t>(p), t[m], d.relative_log_return[m],
                                       d.generating_log_change[m], d.structural[m], d.trading[m],
                                       d.theta_hat[m]});
            }
        }
        emit_csv(series, file("prop3_series.csv"));
        auto summary = base("verify_prop3");
        summary["generating_function"] = S.name();
        summary["mean_theta_qv"] = theta_qv.mean();
        summary["mean_relative_qv"] = relative_qv.mean();
        summary["mean_theta_final"] = theta_final.mean();
        summary["max_weight_normalization_error"] = weights.max_normalization_error();
        write_residuals("prop3", {rs}, summary);
    }

    void convergence() {
        StudyConfig study;
        study.claim = *parse_claim(cfg_.convergence_claim);
        study.model = cfg_.model.as_rank_based();
        study.horizon = cfg_.horizon;
        study.levels = cfg_.resolved_levels();
        study.paths = cfg_.paths;
        study.rng = rng_;
        if (study.claim == Claim::prop3) {
            study.generating_function =
                GeneratingFunction::by_name(cfg_.generating_function, cfg_.generating_parameters);
        }
        const auto report = convergence_study(study);

        CsvTable table;
        table.header = {"claim", "steps", "h", "mean_residual", "max_residual", "stderr_residual",
                        "mean_endpoint_residual"};
        json steps = json::array(), h = json::array(), mean = json::array(), max = json::array(),
             se = json::array(), endpoint = json::array();
        json theta_qv = json::array(), relative_qv = json::array(), theta_final = json::array();
        for (const auto& l : report.levels) {
            table.rows.push_back({std::string(claim_name(report.claim)), static_cast<std::int64_t>(l.steps),
                                  l.step, l.mean_residual, l.max_residual, l.stderr_residual, l.mean_endpoint});
            steps.push_back(l.steps);
            h.push_back(l.step);
            mean.push_back(l.mean_residual);
            max.push_back(l.max_residual);
            se.push_back(l.stderr_residual);
            endpoint.push_back(l.mean_endpoint);
            theta_qv.push_back(l.mean_theta_qv);
            relative_qv.push_back(l.mean_relative_qv);
            theta_final.push_back(l.mean_theta_final);
        }
        emit_csv(table, file("convergence_levels.csv"));
        auto summary = base("convergence");
        summary["claim"] = claim_name(report.claim);
        summary["levels"] = steps;
        summary["step"] = h;
        summary["mean_residual"] = mean;
        summary["max_residual"] = max;
        summary["stderr_residual"] = se;
        summary["mean_endpoint_residual"] = endpoint;
        summary["fitted_rate"] = nullable(report.fitted_rate);
        if (report.claim == Claim::prop3) {
            summary["mean_theta_qv"] = theta_qv;
            summary["mean_relative_qv"] = relative_qv;
            summary["mean_theta_final"] = theta_final;
        }
        emit_summary(summary, file("convergence_summary.json"));
    }

    void coincidence() {
        const double delta = cfg_.coincidence_delta.value_or(std::sqrt(grid_.step()));
        const auto stats = coincidence_stats(ensemble(), delta);
        CsvTable table;
        table.header = {"asset_i", "asset_j", "exact_ties", "sign_changes", "band_points",
                        "occupation_fraction"};
        for (const auto& pc : stats.pairs) {
            table.rows.push_back({static_cast<std::int64_t>(pc.first + 1), static_cast<std::int64_t>(pc.second + 1),
                                  static_cast<std::int64_t>(pc.exact_ties),
                                  static_cast<std::int64_t>(pc.sign_changes),
                                  static_cast<std::int64_t>(pc.band_points), pc.occupation_fraction});
        }
        emit_csv(table, file("coincidence_pairs.csv"));

        const auto band = crossing_band_study(cfg_.model.as_rank_based(), cfg_.horizon,
                                              cfg_.resolved_levels(), cfg_.paths, rng_);
        json band_json = json::array();
        for (const auto& b : band) {
            band_json.push_back({{"steps", b.steps},
                                 {"h", b.step},
                                 {"mean_occupation", b.mean_occupation},
                                 {"stderr_occupation", b.stderr_occupation}});
        }
        auto summary = base("coincidence");
        summary["delta"] = delta;
        summary["triple_points"] = stats.triple_points;
        summary["named_tie_points"] = stats.named_tie_points;
        summary["ranked_tie_points"] = stats.ranked_tie_points;
        summary["points"] = stats.num_paths * stats.points_per_path;
        summary["band_study"] = band_json;
        emit_summary(summary, file("coincidence_summary.json"));
    }

    void remark() {
        const auto probe = remark_probe(cfg_.model.as_rank_based(), grid_, rng_, cfg_.paths);
        CsvTable table;
        table.header = {"rank", "mean_sup_residual", "max_sup_residual"};
        for (std::size_t k = 0; k < probe.mean_rank_residual.size(); ++k) {
            table.rows.push_back({static_cast<std::int64_t>(k + 1), probe.mean_rank_residual[k],
                                  probe.max_rank_residual[k]});
        }
        emit_csv(table, file("remark_probe_ranks.csv"));
        auto summary = base("remark_probe");
        summary["is_atlas"] = probe.is_atlas;
        summary["mean_rank_residual"] = probe.mean_rank_residual;
        summary["max_rank_residual"] = probe.max_rank_residual;
        summary["delta"] = probe.coincidence.delta;
        summary["triple_points"] = probe.coincidence.triple_points;
        summary["points"] = probe.coincidence.num_paths * probe.coincidence.points_per_path;
        emit_summary(summary, file("remark_probe_summary.json"));
    }

    const RunConfig& cfg_;
    std::string dir_;
    std::ostream& log_;
    TimeGrid grid_;
    RngSpec rng_;
    std::optional<PathEnsemble> ensemble_;
    std::vector<std::string> written_;
};

}  // namespace

std::vector<std::string> run(const RunConfig& config, const RunOptions& options, std::ostream& log) {
    set_parallelism(options.threads);
    const std::string dir = options.output_dir.value_or(config.output_dir);
    try {
        std::filesystem::create_directories(dir);
    } catch (const std::filesystem::filesystem_error& e) {
        throw IoError(std::string("cannot create output directory (") + e.what() + ")", dir);
    }
    Runner runner(config, dir, log);
    for (const auto& name : config.experiments) runner.execute(name);
    return runner.written();
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Rank-process Stratonovich verification laboratory"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir;
    int threads = 1;

    auto* run_cmd = app.add_subcommand("run", "Run the experiments listed in a config file");
    run_cmd->add_option("config", config_path, "JSON run config")->required();
    run_cmd->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    run_cmd->add_option("--threads", threads, "Worker threads; results do not depend on it")
        ->check(CLI::PositiveNumber);

    auto* validate_cmd = app.add_subcommand("validate", "Check a config file without running it");
    validate_cmd->add_option("config", config_path, "JSON run config")->required();

    app.add_subcommand("version", "Print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n' << app.help();
        return kExitUsage;
    }

    try {
        if (app.got_subcommand("version")) {
            out << "ranklab " << version_string() << '\n';
            return kExitOk;
        }
        const RunConfig config = load_config(config_path);
        if (app.got_subcommand("validate")) {
            out << "config ok: " << config.experiments.size() << " experiment(s)\n";
            return kExitOk;
        }
        RunOptions options;
        options.threads = threads;
        if (!out_dir.empty()) options.output_dir = out_dir;
        const auto files = run(config, options, err);
        for (const auto& f : files) out << f << '\n';
        return kExitOk;
    } catch (const ConfigError& e) {
        for (const auto& d : e.diagnostics()) err << "config error: " << d << '\n';
        return kExitConfig;
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kExitIo;
    }
}

}  // namespace ranklab
