// isound: impact-sounding analytics over position-tagged tap recordings.
// Subcommands cover the staged workflow (synth -> features -> pca -> cluster
// -> map) plus the all-in-one `run` and truth scoring.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "isound/isound.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw isound::data_error("cannot write '" + path.string() + "'");
    f << text;
}

void write_binary_file(const std::filesystem::path& path,
                       const std::vector<std::uint8_t>& bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw isound::data_error("cannot write '" + path.string() + "'");
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

isound::FeatureMatrix read_feature_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw isound::data_error("cannot open '" + path.string() + "'");
    return isound::read_feature_csv(f);
}

struct SynthArgs {
    std::string out_dir;
    double length_cm = 162.0, width_cm = 20.0, spacing_cm = 2.0;
    double rate_hz = 44100.0, duration_s = 0.05, noise_rms = 0.01;
    std::uint64_t seed = 1;
    bool no_defects = false;
};

int run_synth(const SynthArgs& args) {
    // The stock layout is tied to the stock geometry; other sizes get the
    // proportional layout.
    const bool stock = args.length_cm == 162.0 && args.width_cm == 20.0;
    isound::SlabSpec spec = stock ? isound::default_slab(args.seed)
                                  : isound::scaled_slab(args.length_cm, args.width_cm,
                                                        args.spacing_cm, args.seed);
    spec.spacing_cm = args.spacing_cm;
    spec.sample_rate_hz = args.rate_hz;
    spec.duration_s = args.duration_s;
    spec.noise_rms = args.noise_rms;
    if (args.no_defects) spec.defects.clear();
    isound::write_slab_files(spec, args.out_dir);
    const auto r = isound::generate(spec);
    std::cout << "wrote " << r.dataset.recordings.size() << " recordings to " << args.out_dir
              << "\n";
    return kExitOk;
}

struct FeatureArgs {
    std::string manifest, out;
    double band_min = -1.0, band_max = -1.0;
    bool include_dc = false;
    bool conventional = false;
    std::size_t peak_window = 0;
    int threads = 0;
    double spacing_hint = 0.0;
    std::string dump_id, dump_path;
};

int run_features(const FeatureArgs& args) {
    isound::ManifestOptions mopt;
    mopt.spacing_hint_cm = args.spacing_hint;
    const isound::Dataset ds = isound::load_manifest_file(args.manifest, mopt);
    for (const auto& w : ds.warnings) std::cerr << "warning: " << w << "\n";

    isound::SpectrumOptions sopt;
    sopt.include_dc = args.include_dc;
    if (args.band_min >= 0.0 && args.band_max > args.band_min)
        sopt.band_hz = {args.band_min, args.band_max};
    if (args.peak_window > 0) sopt.peak_window = args.peak_window;

    std::vector<isound::Spectrum> spectra(ds.recordings.size());
    isound::parallel_for(ds.recordings.size(), args.threads, [&](std::size_t i) {
        spectra[i] = isound::one_sided_spectrum(ds.recordings[i], sopt);
    });

    if (!args.dump_id.empty()) {
        for (std::size_t i = 0; i < ds.recordings.size(); ++i) {
            if (ds.recordings[i].id != args.dump_id) continue;
            std::ostringstream csv;
            isound::write_spectrum_csv(csv, spectra[i]);
            write_text_file(args.dump_path.empty() ? args.dump_id + "_spectrum.csv"
                                                   : args.dump_path,
                            csv.str());
        }
    }

    isound::MomentOptions fopt;
    fopt.conventional = args.conventional;
    const isound::FeatureMatrix fm = isound::build_feature_matrix(ds, spectra, fopt);
    std::ostringstream csv;
    isound::write_feature_csv(csv, fm);
    write_text_file(args.out, csv.str());
    std::cout << "wrote " << fm.values.rows << " feature rows to " << args.out << "\n";
    return kExitOk;
}

struct PcaArgs {
    std::string features, out_model, out_scores;
    int components = 3;
    bool raw_features = false;
};

int run_pca(const PcaArgs& args) {
    const isound::FeatureMatrix raw = read_feature_file(args.features);
    const isound::Matrix input =
        args.raw_features ? raw.values : isound::standardize(raw).matrix.values;
    const isound::PcaModel model =
        isound::fit_pca(input, static_cast<std::size_t>(args.components));
    write_text_file(args.out_model, isound::pca_model_to_json(model).dump(2) + "\n");
    if (!args.out_scores.empty()) {
        isound::FeatureMatrix table;
        table.ids = raw.ids;
        table.positions = raw.positions;
        table.values = isound::pca_transform(model, input);
        for (std::size_t c = 0; c < table.values.cols; ++c)
            table.column_names.push_back("C" + std::to_string(c + 1));
        std::ostringstream csv;
        isound::write_feature_csv(csv, table);
        write_text_file(args.out_scores, csv.str());
    }
    std::cout << "explained variance ratio:";
    for (double r : model.explained_variance_ratio) std::cout << ' ' << isound::format_double(r);
    std::cout << "\n";
    return kExitOk;
}

struct ClusterArgs {
    std::string features, input = "X", method = "kmeans", out, silhouette_out;
    int k = 2;
    std::uint64_t seed = 1;
    double sigma = 0.0;
};

int run_cluster(const ClusterArgs& args) {
    const isound::FeatureMatrix raw = read_feature_file(args.features);
    isound::ClusterRunConfig cfg;
    if (args.input == "X")
        cfg.input = isound::ClusterInput::features;
    else if (args.input == "PCA3" || args.input == "PCA(X,3)")
        cfg.input = isound::ClusterInput::pca3;
    else if (args.input == "Xenh" || args.input == "X_enh")
        cfg.input = isound::ClusterInput::enhanced;
    else
        throw CLI::ValidationError("--input must be one of X, PCA3, Xenh");
    if (args.method == "kmeans")
        cfg.method = isound::ClusterMethod::kmeans;
    else if (args.method == "spectral")
        cfg.method = isound::ClusterMethod::spectral;
    else
        throw CLI::ValidationError("--method must be kmeans or spectral");
    cfg.k = args.k;

    isound::SpectralOptions sopt;
    if (args.sigma > 0.0) sopt.sigma = args.sigma;
    const auto entries = isound::compare_clusterings(raw, {{cfg}}, args.seed, sopt);
    const auto& entry = entries.front();

    std::ostringstream csv;
    isound::write_labels_csv(csv, raw.ids, raw.positions, entry.model.labels);
    write_text_file(args.out, csv.str());
    if (!args.silhouette_out.empty())
        write_text_file(args.silhouette_out,
                        isound::comparison_to_json(entries).dump(2) + "\n");
    std::cout << "silhouette " << isound::format_double(entry.silhouette) << " (input "
              << entry.input << ", method " << entry.method << ", k " << entry.k << ")\n";
    return kExitOk;
}

struct MapArgs {
    std::string values, column, out;
    double gamma = 1.0;
    bool labels = false;
    double spacing_hint = 0.0;
};

int run_map(const MapArgs& args) {
    const isound::FeatureMatrix table = read_feature_file(args.values);
    std::size_t col = table.column_names.size();
    for (std::size_t j = 0; j < table.column_names.size(); ++j)
        if (table.column_names[j] == args.column) col = j;
    if (col == table.column_names.size())
        throw isound::data_error("map: no column named '" + args.column + "'");

    // Rebuild the lattice geometry from the positions alone.
    isound::Dataset ds;
    ds.recordings.resize(table.ids.size());
    for (std::size_t i = 0; i < table.ids.size(); ++i) {
        ds.recordings[i].id = table.ids[i];
        ds.recordings[i].position = table.positions[i];
        ds.recordings[i].samples = {0.0};
        ds.recordings[i].sample_rate_hz = 1.0;
    }
    ds.spacing_cm = args.spacing_hint > 0.0
                        ? args.spacing_hint
                        : isound::dataset_detail::infer_spacing(ds.recordings, 1.0);
    ds.origin = isound::dataset_min_corner(ds.recordings);

    const std::filesystem::path base(args.out);
    if (args.labels) {
        std::vector<int> labels(table.values.rows);
        for (std::size_t i = 0; i < table.values.rows; ++i)
            labels[i] = static_cast<int>(std::lround(table.values(i, col)));
        const auto map = isound::rasterize_labels(ds, labels);
        write_binary_file(base.string() + ".pgm", isound::write_pgm(map));
        std::ostringstream csv;
        isound::write_map_csv(csv, map);
        write_text_file(base.string() + ".csv", csv.str());
    } else {
        std::vector<double> column(table.values.rows);
        for (std::size_t i = 0; i < table.values.rows; ++i) column[i] = table.values(i, col);
        const auto map = isound::normalize_map(isound::rasterize(ds, column), args.gamma);
        write_binary_file(base.string() + ".pgm", isound::write_pgm(map));
        std::ostringstream csv;
        isound::write_map_csv(csv, map);
        write_text_file(base.string() + ".csv", csv.str());
    }
    std::cout << "wrote " << base.string() << ".pgm and .csv\n";
    return kExitOk;
}

struct ScoreArgs {
    std::string labels, truth, out;
};

// Expands `--config file` for the run subcommand: each key=value line becomes
// a --key=value argument unless that flag was given explicitly, so the
// command line always wins. Comma-separated values fan out into repeated
// flags for list options.
std::vector<std::string> splice_config(const CLI::App* run_cmd, std::vector<std::string> args) {
    if (args.empty() || args[0] != "run") return args;

    std::string path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;

    std::set<std::string> known;
    for (const CLI::Option* opt : run_cmd->get_options())
        for (const auto& name : opt->get_lnames()) known.insert(name);

    auto given = [&](const std::string& key) {
        for (std::size_t i = 1; i < args.size(); ++i)
            if (args[i] == "--" + key || args[i].rfind("--" + key + "=", 0) == 0) return true;
        return false;
    };

    std::ifstream f(path);
    if (!f) throw CLI::ValidationError("--config", "cannot open '" + path + "'");
    std::vector<std::string> extra;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--config", "line " + std::to_string(lineno) +
                                                       ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "config" || !known.count(key))
            throw CLI::ValidationError("--config", "line " + std::to_string(lineno) +
                                                       ": unknown key '" + key + "'");
        if (given(key)) continue;
        std::size_t start = 0;
        while (true) {
            const auto comma = value.find(',', start);
            extra.push_back("--" + key + "=" + value.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }
    args.insert(args.begin() + 1, extra.begin(), extra.end());
    return args;
}

int run_score(const ScoreArgs& args) {
    std::ifstream lf(args.labels);
    if (!lf) throw isound::data_error("cannot open '" + args.labels + "'");
    const isound::LabelTable table = isound::read_labels_csv(lf);
    std::ifstream tf(args.truth);
    if (!tf) throw isound::data_error("cannot open '" + args.truth + "'");
    const std::vector<int> truth = isound::read_truth_csv(tf);

    const isound::TruthScore score = isound::score_against_truth(table.labels, truth);
    nlohmann::json j{{"accuracy_best_permutation", score.accuracy_best_permutation},
                     {"ari", score.ari}};
    const std::string text = j.dump(2) + "\n";
    if (!args.out.empty()) write_text_file(args.out, text);
    std::cout << text;
    return kExitOk;
}

struct RunArgs {
    std::string manifest, out_dir;
    double band_min = -1.0, band_max = -1.0;
    bool include_dc = false, enhance = false, conventional = false;
    std::size_t peak_window = 0;
    int components = 3;
    std::vector<std::string> methods{"kmeans", "spectral"};
    std::vector<int> k_values{2, 3};
    std::uint64_t seed = 1;
    double gamma = 1.0;
    int threads = 0;
    double spacing_hint = 0.0;
};

int run_run(const RunArgs& args) {
    isound::PipelineConfig cfg;
    cfg.manifest_path = args.manifest;
    cfg.out_dir = args.out_dir;
    if (args.band_min >= 0.0 && args.band_max > args.band_min)
        cfg.band_hz = {args.band_min, args.band_max};
    cfg.include_dc = args.include_dc;
    cfg.enhance_maps = args.enhance;
    cfg.conventional_moments = args.conventional;
    if (args.peak_window > 0) cfg.peak_window = args.peak_window;
    cfg.pca_components = args.components;
    cfg.methods.clear();
    for (const auto& m : args.methods) {
        if (m == "kmeans")
            cfg.methods.push_back(isound::ClusterMethod::kmeans);
        else if (m == "spectral")
            cfg.methods.push_back(isound::ClusterMethod::spectral);
        else
            throw CLI::ValidationError("--method must be kmeans or spectral");
    }
    cfg.k_values = args.k_values;
    for (int k : cfg.k_values)
        if (k < 2) throw CLI::ValidationError("--k values must be at least 2");
    cfg.seed = args.seed;
    cfg.gamma = args.gamma;
    cfg.threads = args.threads;
    cfg.spacing_hint_cm = args.spacing_hint;

    const isound::RunReport report = isound::run_pipeline(cfg);
    std::cout << "wrote " << report.outputs.size() << " files to " << args.out_dir << "\n";
    for (const auto& e : report.comparisons)
        std::cout << "  silhouette " << isound::format_double(e.silhouette) << "  input "
                  << e.input << "  method " << e.method << "  k " << e.k << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Impact-sounding analytics: spectral features, unsupervised defect "
                 "clustering and slab defect maps"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(isound::kVersion));

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic slab dataset");
    synth->add_option("--out", synth_args.out_dir, "Output directory")->required();
    synth->add_option("--length", synth_args.length_cm, "Slab length in cm");
    synth->add_option("--width", synth_args.width_cm, "Slab width in cm");
    synth->add_option("--spacing", synth_args.spacing_cm, "Lattice pitch in cm");
    synth->add_option("--rate", synth_args.rate_hz, "Sample rate in Hz");
    synth->add_option("--duration", synth_args.duration_s, "Recording length in seconds");
    synth->add_option("--noise", synth_args.noise_rms, "Gaussian noise RMS");
    synth->add_option("--seed", synth_args.seed, "Noise seed");
    synth->add_flag("--no-defects", synth_args.no_defects, "Plant no defect regions");

    FeatureArgs feature_args;
    auto* features = app.add_subcommand("features", "Compute per-point spectral features");
    features->add_option("--manifest", feature_args.manifest, "Input manifest CSV")->required();
    features->add_option("--out", feature_args.out, "Output feature CSV")->required();
    features->add_option("--band-min", feature_args.band_min, "Band lower edge (Hz)");
    features->add_option("--band-max", feature_args.band_max, "Band upper edge (Hz)");
    features->add_flag("--include-dc", feature_args.include_dc, "Keep the DC bin");
    features->add_flag("--conventional-moments", feature_args.conventional,
                       "Textbook skewness/kurtosis normalization");
    features->add_option("--peak-window", feature_args.peak_window,
                         "Trim to this many samples around the impact peak");
    features->add_option("--threads", feature_args.threads, "Worker threads (0 = auto)");
    features->add_option("--spacing", feature_args.spacing_hint, "Lattice pitch override (cm)");
    features->add_option("--dump-id", feature_args.dump_id, "Dump one spectrum by id");
    features->add_option("--dump-path", feature_args.dump_path, "Spectrum dump path");

    PcaArgs pca_args;
    auto* pca = app.add_subcommand("pca", "Fit PCA on standardized features");
    pca->add_option("--features", pca_args.features, "Input feature CSV")->required();
    pca->add_option("--components", pca_args.components, "Components to keep")
        ->check(CLI::Range(1, 6));
    pca->add_flag("--raw", pca_args.raw_features, "Fit on raw features (no z-scoring)");
    pca->add_option("--out-model", pca_args.out_model, "Model JSON path")->required();
    pca->add_option("--out-scores", pca_args.out_scores, "Score CSV path");

    ClusterArgs cluster_args;
    auto* cluster = app.add_subcommand("cluster", "Cluster one input representation");
    cluster->add_option("--features", cluster_args.features, "Input feature CSV")->required();
    cluster->add_option("--input", cluster_args.input, "X, PCA3 or Xenh");
    cluster->add_option("--method", cluster_args.method, "kmeans or spectral");
    cluster->add_option("--k", cluster_args.k, "Cluster count")->check(CLI::Range(2, 16));
    cluster->add_option("--seed", cluster_args.seed, "Clustering seed");
    cluster->add_option("--sigma", cluster_args.sigma,
                        "Affinity scale override (spectral only)");
    cluster->add_option("--out", cluster_args.out, "Labels CSV path")->required();
    cluster->add_option("--silhouette-out", cluster_args.silhouette_out,
                        "Silhouette report JSON path");

    MapArgs map_args;
    auto* map = app.add_subcommand("map", "Rasterize a value column into PGM + CSV maps");
    map->add_option("--values", map_args.values, "Table CSV (id,x_cm,y_cm,...)")->required();
    map->add_option("--column", map_args.column, "Column to rasterize")->required();
    map->add_option("--out", map_args.out, "Output base path (.pgm/.csv appended)")->required();
    map->add_option("--gamma", map_args.gamma, "Contrast exponent after min-max");
    map->add_flag("--labels", map_args.labels, "Treat the column as integer labels");
    map->add_option("--spacing", map_args.spacing_hint, "Lattice pitch override (cm)");

    RunArgs run_args;
    std::string run_config_path;
    auto* run = app.add_subcommand("run", "Run the full pipeline");
    run->add_option("--config", run_config_path,
                    "Flat key=value config file; explicit flags override it");
    run->add_option("--manifest", run_args.manifest, "Input manifest CSV")->required();
    run->add_option("--out", run_args.out_dir, "Output directory")
        ->envname("ISOUND_OUT")
        ->required();
    run->add_option("--band-min", run_args.band_min, "Band lower edge (Hz)");
    run->add_option("--band-max", run_args.band_max, "Band upper edge (Hz)");
    run->add_flag("--include-dc", run_args.include_dc, "Keep the DC bin");
    run->add_flag("--enhance", run_args.enhance, "Render feature maps from enhanced features");
    run->add_flag("--conventional-moments", run_args.conventional,
                  "Textbook skewness/kurtosis normalization");
    run->add_option("--peak-window", run_args.peak_window,
                    "Trim to this many samples around the impact peak");
    run->add_option("--components", run_args.components, "PCA components")
        ->check(CLI::Range(1, 6));
    run->add_option("--method", run_args.methods, "Clustering methods to run");
    run->add_option("--k", run_args.k_values, "Cluster counts to run");
    run->add_option("--seed", run_args.seed, "Clustering seed");
    run->add_option("--gamma", run_args.gamma, "Map contrast exponent");
    run->add_option("--threads", run_args.threads, "Worker threads (0 = auto)");
    run->add_option("--spacing", run_args.spacing_hint, "Lattice pitch override (cm)");

    ScoreArgs score_args;
    auto* score = app.add_subcommand("score", "Score labels against a truth table");
    score->add_option("--labels", score_args.labels, "Labels CSV")->required();
    score->add_option("--truth", score_args.truth, "Truth CSV")->required();
    score->add_option("--out", score_args.out, "Report JSON path");

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = splice_config(run, std::move(args));
        std::reverse(args.begin(), args.end()); // the vector overload expects reversed args
        app.parse(std::move(args));
        if (synth->parsed()) return run_synth(synth_args);
        if (features->parsed()) return run_features(feature_args);
        if (pca->parsed()) return run_pca(pca_args);
        if (cluster->parsed()) return run_cluster(cluster_args);
        if (map->parsed()) return run_map(map_args);
        if (run->parsed()) return run_run(run_args);
        if (score->parsed()) return run_score(score_args);
        return kExitUsage;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    } catch (const isound::numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const isound::data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}
