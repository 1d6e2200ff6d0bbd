// papilla: command-line front end for the segment/feature/classifier pipeline.

#include "papilla/config.hpp"
#include "papilla/error.hpp"
#include "papilla/evaluation.hpp"
#include "papilla/mesh_io.hpp"
#include "papilla/parallel.hpp"
#include "papilla/pipeline.hpp"
#include "papilla/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace papilla;

namespace {

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '"', '\'');
    return s;
}

int fail(int code, const char* kind, const std::string& message) {
    std::cerr << "error code=" << code << " kind=" << kind << " message=\"" << one_line(message) << "\"\n";
    return code;
}

void log_line(const std::string& text) {
    // One write per line keeps concurrent output line-atomic.
    std::cout << (text + "\n") << std::flush;
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) { open_out(path) << j.dump(1) << '\n'; }

FeatureTable prepare_table(const PipelineConfig& cfg, const fs::path& features, std::vector<std::string>* dropped) {
    auto table = load_feature_csv(features);
    std::vector<std::string> wanted;
    for (const auto& c : cfg.feature_columns())
        if (std::find(table.feature_names.begin(), table.feature_names.end(), c) != table.feature_names.end())
            wanted.push_back(c);
    if (wanted.empty()) throw DataError("the feature table holds none of the selected groups");
    table = table.select_features(wanted);
    if (cfg.correlation_threshold < 1.0) {
        auto filtered = correlation_filter(table, cfg.correlation_threshold);
        for (const auto& w : filtered.warnings) log_line("warning " + w);
        if (dropped) *dropped = filtered.dropped;
        table = std::move(filtered.table);
    }
    return table;
}

EvalReport run_protocol(const PipelineConfig& cfg, const FeatureTable& table) {
    if (cfg.protocol == "logo") return logo_eval(table, cfg.label, cfg.group_column, cfg.model, cfg.seed);
    SplitEvalConfig sc;
    sc.test_frac = cfg.test_frac;
    sc.repeats = cfg.repeats;
    sc.seed = cfg.seed;
    sc.model = cfg.model;
    return random_split_eval(table, cfg.label, sc);
}

std::string summary(const EvalReport& r) {
    std::ostringstream s;
    s.precision(4);
    s << "protocol=" << r.protocol << " label=" << r.label << " balanced_accuracy=" << r.mean << " stdev=" << r.stdev
      << " folds=" << r.scores.size();
    return s.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Papillae surface analysis: segments, features, classifiers"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::uint64_t> seed;
    std::string config_path;
    std::size_t threads = 0;
    std::string out;
    std::vector<std::string> overrides;
    app.add_option("--seed", seed, "Top-level random seed");
    app.add_option("--config", config_path, "Sectioned key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--threads", threads, "Worker threads (0 = all cores)");
    app.add_option("--out", out, "Output file or directory (see the command help)");
    app.add_option("--set", overrides, "Override one config value, e.g. --set extraction.radius=400");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a labelled corpus, a sheet or a single surface");
    std::string synth_kind = "corpus";
    std::optional<std::size_t> n_per_class, participants;
    synth->add_option("--kind", synth_kind, "corpus | sheet | fungiform | filiform | none")
        ->check(CLI::IsMember({"corpus", "sheet", "fungiform", "filiform", "none"}));
    synth->add_option("--n-per-class", n_per_class, "Segments per class (corpus)");
    synth->add_option("--participants", participants, "Synthetic participants (corpus)");

    // extract
    auto* extract = app.add_subcommand("extract", "Scan a surface for candidate segments");
    std::string surface_path;
    std::optional<std::size_t> max_segments;
    extract->add_option("--surface", surface_path, "PLY or OBJ surface")->required()->check(CLI::ExistingFile);
    extract->add_option("--max-segments", max_segments, "Stop after this many segments");

    // featurize
    auto* featurize_cmd = app.add_subcommand("featurize", "Compute the feature table of a segment directory");
    std::string segment_dir, groups_text;
    featurize_cmd->add_option("--segments", segment_dir, "Directory of <id>.ply + <id>.json")
        ->required()
        ->check(CLI::ExistingDirectory);
    featurize_cmd->add_option("--groups", groups_text, "Comma list of baseline, curvature, topological");

    // train / evaluate
    std::string features_path, label, classifier, protocol;
    std::optional<double> corr;
    auto add_learning_options = [&](CLI::App* cmd) {
        cmd->add_option("--features", features_path, "Feature table CSV")->required()->check(CLI::ExistingFile);
        cmd->add_option("--label", label, "type | gender | age_group | participant");
        cmd->add_option("--classifier", classifier, "rbf | logistic");
        cmd->add_option("--protocol", protocol, "random-split | logo");
        cmd->add_option("--groups", groups_text, "Feature groups to use");
        cmd->add_option("--correlation-threshold", corr, "Drop columns correlated above this (1 keeps all)");
    };
    auto* train_cmd = app.add_subcommand("train", "Evaluate a classifier and fit it on the whole table");
    add_learning_options(train_cmd);
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate a classifier without saving a model");
    add_learning_options(evaluate_cmd);

    // importance
    auto* importance_cmd = app.add_subcommand("importance", "Permutation feature importance of a model");
    std::string model_path;
    std::optional<std::size_t> n_perm;
    importance_cmd->add_option("--model", model_path, "Model JSON")->required()->check(CLI::ExistingFile);
    importance_cmd->add_option("--features", features_path, "Held-out feature table CSV")
        ->required()
        ->check(CLI::ExistingFile);
    importance_cmd->add_option("--label", label, "Label column");
    importance_cmd->add_option("--n-perm", n_perm, "Permutations per feature");

    // map
    auto* map_cmd = app.add_subcommand("map", "Detect and classify papillae on a surface");
    std::string svg_path, truth_path;
    map_cmd->add_option("--surface", surface_path, "PLY or OBJ surface")->required()->check(CLI::ExistingFile);
    map_cmd->add_option("--model", model_path, "Model JSON")->required()->check(CLI::ExistingFile);
    map_cmd->add_option("--svg", svg_path, "Also write an overhead SVG plot");
    map_cmd->add_option("--truth", truth_path, "Placement CSV to score against and draw")->check(CLI::ExistingFile);

    // pca
    auto* pca_cmd = app.add_subcommand("pca", "Project a feature table onto its principal components");
    std::optional<std::size_t> dims;
    pca_cmd->add_option("--features", features_path, "Feature table CSV")->required()->check(CLI::ExistingFile);
    pca_cmd->add_option("--dims", dims, "Number of components");
    pca_cmd->add_option("--groups", groups_text, "Feature groups to use");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Error& e) {
        return fail(2, "usage", e.what());
    }

    try {
        PipelineConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        for (const auto& o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos) return fail(2, "usage", "--set expects section.key=value, got '" + o + "'");
            set_config_value(cfg, o.substr(0, eq), o.substr(eq + 1));
        }
        if (seed) cfg.seed = *seed;
        if (threads) cfg.threads = threads;
        if (!groups_text.empty()) cfg.groups = parse_groups(groups_text);
        if (!label.empty()) cfg.label = label;
        if (!classifier.empty()) cfg.model.kind = parse_model_kind(classifier);
        if (!protocol.empty()) set_config_value(cfg, "learn.protocol", protocol);
        if (corr) cfg.correlation_threshold = *corr;
        if (n_per_class) cfg.n_per_class = *n_per_class;
        if (participants) cfg.participants = *participants;
        if (max_segments) cfg.max_segments = *max_segments;
        if (n_perm) cfg.n_perm = *n_perm;
        if (dims) cfg.pca_dims = *dims;
        cfg.propagate_seed();
        set_thread_count(cfg.threads);

        if (*synth) {
            const fs::path dir = out.empty() ? fs::path("synth") : fs::path(out);
            fs::create_directories(dir);
            if (synth_kind == "corpus") {
                const auto corpus = gen_corpus(cfg.n_per_class, cfg.participants, cfg.synth, cfg.extraction);
                save_corpus(dir, corpus);
                log_line("wrote " + std::to_string(corpus.size()) + " segments to " + (dir / "segments").string());
            } else if (synth_kind == "sheet") {
                const auto sheet = gen_sheet(cfg.synth, cfg.sheet_width, cfg.sheet_height, cfg.seed);
                save_surface(dir / "sheet.ply", sheet.mesh);
                auto placements = open_out(dir / "placements.csv");
                write_placements(placements, sheet.placements);
                log_line("wrote sheet with " + std::to_string(sheet.placements.size()) + " papillae to " + dir.string());
            } else {
                const auto mesh = synth_kind == "fungiform" ? gen_fungiform(cfg.synth, cfg.seed)
                                  : synth_kind == "filiform" ? gen_filiform(cfg.synth, cfg.seed)
                                                             : gen_none(cfg.synth, cfg.seed);
                save_surface(dir / (synth_kind + ".ply"), mesh);
                log_line("wrote " + (dir / (synth_kind + ".ply")).string());
            }
        } else if (*extract) {
            const fs::path dir = out.empty() ? fs::path("segments") : fs::path(out);
            const auto surface = load_surface(surface_path);
            const auto segments = scan_segments(surface, cfg.extraction, cfg.max_segments);
            fs::create_directories(dir);
            for (const auto& s : segments) save_segment(dir, s);
            log_line("extracted " + std::to_string(segments.size()) + " segments to " + dir.string());
        } else if (*featurize_cmd) {
            const fs::path path = out.empty() ? fs::path("features.csv") : fs::path(out);
            const auto segments = load_segment_dir(segment_dir);
            if (segments.empty()) throw DataError("no segments found in " + segment_dir);
            FeaturizeConfig fc = cfg.featurize;
            fc.columns = cfg.feature_columns();
            const auto table = featurize(segments, fc);
            auto stream = open_out(path);
            write_feature_csv(stream, table);
            log_line("featurized " + std::to_string(table.rows()) + " segments into " + path.string());
        } else if (*train_cmd || *evaluate_cmd) {
            std::vector<std::string> dropped;
            const auto table = prepare_table(cfg, features_path, &dropped);
            const auto report = run_protocol(cfg, table);
            for (const auto& w : report.warnings) log_line("warning " + w);
            log_line(summary(report));
            auto j = to_json(report);
            j["features"] = table.feature_names;
            j["dropped_correlated"] = dropped;
            if (*evaluate_cmd) {
                write_json(out.empty() ? fs::path("report.json") : fs::path(out), j);
            } else {
                const fs::path dir = out.empty() ? fs::path("model") : fs::path(out);
                write_json(dir / "report.json", j);
                save_model(dir / "model.json", train(table, cfg.label, cfg.model));
                // The best split's model and held-out rows, for importance analysis.
                save_model(dir / "best_split_model.json",
                           train(table.select_rows(report.best_train_rows), cfg.label, cfg.model));
                save_feature_csv(dir / "best_split_test.csv", table.select_rows(report.best_test_rows));
                log_line("wrote model and report to " + dir.string());
            }
        } else if (*importance_cmd) {
            const auto model = load_model(model_path);
            auto table = load_feature_csv(features_path);
            table = table.select_features(model.feature_names);
            const auto ranking = permutation_importance(model, table, cfg.label, cfg.n_perm, cfg.seed);
            const fs::path path = out.empty() ? fs::path("importance.csv") : fs::path(out);
            auto stream = open_out(path);
            write_importance_csv(stream, ranking);
            log_line("wrote importance ranking of " + std::to_string(ranking.size()) + " features to " + path.string());
        } else if (*map_cmd) {
            const auto surface = load_surface(surface_path);
            const auto model = load_model(model_path);
            MapConfig mc;
            mc.extraction = cfg.extraction;
            mc.max_segments = cfg.max_segments;
            mc.featurize = cfg.featurize;
            mc.keep_none = cfg.keep_none;
            const auto detections = map_surface(surface, model, mc);
            const fs::path path = out.empty() ? fs::path("map.json") : fs::path(out);
            auto j = to_json(detections);
            std::vector<Placement> truth;
            if (!truth_path.empty()) {
                std::ifstream in(truth_path);
                truth = read_placements(in);
                const auto m = match_detections(truth, detections, cfg.match_tolerance);
                j["match"] = {{"total", m.total}, {"located", m.located}, {"correct", m.correct}, {"rate", m.rate()}};
                log_line("matched " + std::to_string(m.correct) + " of " + std::to_string(m.total) +
                         " papillae with the correct type");
            }
            write_json(path, j);
            if (!svg_path.empty()) {
                auto svg = open_out(svg_path);
                write_map_svg(svg, surface, detections, truth);
            }
            log_line("wrote " + std::to_string(detections.size()) + " detections to " + path.string());
        } else if (*pca_cmd) {
            auto table = load_feature_csv(features_path);
            std::vector<std::string> wanted;
            for (const auto& c : cfg.feature_columns())
                if (std::find(table.feature_names.begin(), table.feature_names.end(), c) != table.feature_names.end())
                    wanted.push_back(c);
            table = table.select_features(wanted);
            const auto pca = pca_project(table, cfg.pca_dims);
            const fs::path path = out.empty() ? fs::path("pca.csv") : fs::path(out);
            auto stream = open_out(path);
            stream.precision(17);
            stream << "id,participant,label_type,label_gender,label_age_group";
            for (std::size_t d = 0; d < cfg.pca_dims; ++d) stream << ",pc" << d + 1;
            stream << '\n';
            for (std::size_t r = 0; r < table.rows(); ++r) {
                stream << table.ids[r] << ',' << table.participants[r] << ',' << table.label_type[r] << ','
                       << table.label_gender[r] << ',' << table.label_age_group[r];
                for (Eigen::Index d = 0; d < pca.coordinates.cols(); ++d)
                    stream << ',' << pca.coordinates(static_cast<Eigen::Index>(r), d);
                stream << '\n';
            }
            nlohmann::ordered_json j;
            j["features"] = table.feature_names;
            j["explained_variance"] =
                std::vector<double>(pca.explained_variance.data(), pca.explained_variance.data() + pca.explained_variance.size());
            write_json(fs::path(path).replace_extension(".json"), j);
            log_line("wrote " + std::to_string(cfg.pca_dims) + "-component projection to " + path.string());
        }
    } catch (const NumericError& e) {
        return fail(4, "numeric", e.what());
    } catch (const DataError& e) {
        return fail(3, "data", e.what());
    } catch (const fs::filesystem_error& e) {
        return fail(3, "data", e.what());
    } catch (const std::exception& e) {
        return fail(3, "data", e.what());
    }
    return 0;
}
