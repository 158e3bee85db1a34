#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "isound/clustering.hpp"
#include "isound/csv.hpp"
#include "isound/dataset.hpp"
#include "isound/errors.hpp"
#include "isound/features.hpp"
#include "isound/gridmap.hpp"
#include "isound/parallel.hpp"
#include "isound/pca.hpp"
#include "isound/spectrum.hpp"
#include "isound/version.hpp"

namespace isound {

struct PipelineConfig {
    std::filesystem::path manifest_path;
    std::filesystem::path out_dir;
    std::optional<std::pair<double, double>> band_hz;
    bool include_dc = false;
    bool enhance_maps = false;        // render feature maps from enhanced features
    bool conventional_moments = false;
    std::optional<std::size_t> peak_window;
    int pca_components = 3;
    std::vector<ClusterMethod> methods{ClusterMethod::kmeans, ClusterMethod::spectral};
    std::vector<int> k_values{2, 3};
    std::uint64_t seed = 1;
    double gamma = 1.0;
    int threads = 0; // 0: use available parallelism
    double spacing_hint_cm = 0.0;
    double default_spacing_cm = 2.0;
};

struct RunReport {
    std::vector<std::filesystem::path> outputs;
    nlohmann::json manifest;
    std::vector<ComparisonEntry> comparisons;
    Dataset dataset;
    FeatureMatrix features;
};

inline std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string fnv1a64_hex(std::span<const std::uint8_t> bytes) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

namespace pipeline_detail {

// Canonical key=value rendering of a config; hashed into the run manifest so
// reruns can be matched to their settings.
inline std::string config_text(const PipelineConfig& cfg) {
    std::ostringstream out;
    out << "manifest=" << cfg.manifest_path.string() << '\n';
    out << "band=" << (cfg.band_hz ? format_double(cfg.band_hz->first) + ":" +
                                         format_double(cfg.band_hz->second)
                                   : std::string("full")) << '\n';
    out << "include_dc=" << cfg.include_dc << '\n';
    out << "enhance_maps=" << cfg.enhance_maps << '\n';
    out << "conventional_moments=" << cfg.conventional_moments << '\n';
    out << "peak_window=" << (cfg.peak_window ? std::to_string(*cfg.peak_window)
                                              : std::string("off")) << '\n';
    out << "pca_components=" << cfg.pca_components << '\n';
    out << "methods=";
    for (auto m : cfg.methods) out << to_string(m) << ';';
    out << '\n' << "k=";
    for (int k : cfg.k_values) out << k << ';';
    out << '\n';
    out << "seed=" << cfg.seed << '\n';
    out << "gamma=" << format_double(cfg.gamma) << '\n';
    out << "spacing_hint=" << format_double(cfg.spacing_hint_cm) << '\n';
    return out.str();
}

// Tracks files created by one run so a failure can leave the output directory
// as it was found.
class OutputTracker {
public:
    explicit OutputTracker(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    void write_bytes(const std::string& name, std::span<const std::uint8_t> bytes) {
        const auto path = dir_ / name;
        std::ofstream f(path, std::ios::binary);
        if (!f) throw data_error("pipeline: cannot write '" + path.string() + "'");
        f.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
        record(name, bytes);
    }

    void write_text(const std::string& name, const std::string& text) {
        write_bytes(name, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
    }

    void discard_all() {
        std::error_code ec;
        for (const auto& e : entries_) std::filesystem::remove(dir_ / e.name, ec);
        entries_.clear();
    }

    struct Entry {
        std::string name;
        std::size_t bytes = 0;
        std::string hash;
    };
    const std::vector<Entry>& entries() const { return entries_; }
    const std::filesystem::path& dir() const { return dir_; }

private:
    void record(const std::string& name, std::span<const std::uint8_t> bytes) {
        entries_.push_back({name, bytes.size(), fnv1a64_hex(bytes)});
    }

    std::filesystem::path dir_;
    std::vector<Entry> entries_;
};

inline std::string map_base_name(const std::string& tag) { return "map_" + tag; }

inline void write_scalar_map(OutputTracker& out, const std::string& tag, const Dataset& ds,
                             std::span<const double> values, double gamma) {
    const ScalarMap normalized = normalize_map(rasterize(ds, values), gamma);
    out.write_bytes(map_base_name(tag) + ".pgm", write_pgm(normalized));
    std::ostringstream csv;
    write_map_csv(csv, normalized);
    out.write_text(map_base_name(tag) + ".csv", csv.str());
}

inline void write_label_map(OutputTracker& out, const std::string& tag, const Dataset& ds,
                            std::span<const int> labels) {
    const LabelMap map = rasterize_labels(ds, labels);
    out.write_bytes(map_base_name(tag) + ".pgm", write_pgm(map));
    std::ostringstream csv;
    write_map_csv(csv, map);
    out.write_text(map_base_name(tag) + ".csv", csv.str());
}

inline std::string input_file_tag(const std::string& input) {
    if (input == "PCA(X,3)") return "PCAX3";
    return input; // "X" and "X_enh" are already path-safe
}

} // namespace pipeline_detail

// Runs ingest -> spectra -> features -> PCA -> clustering -> maps/reports and
// writes every artifact into cfg.out_dir. Any failure removes the files this
// run created and rethrows with the stage name prefixed.
inline RunReport run_pipeline(const PipelineConfig& cfg) {
    using namespace pipeline_detail;
    OutputTracker out(cfg.out_dir);
    std::string stage = "ingest";
    try {
        ManifestOptions mopt;
        mopt.spacing_hint_cm = cfg.spacing_hint_cm;
        mopt.default_spacing_cm = cfg.default_spacing_cm;
        Dataset ds = load_manifest_file(cfg.manifest_path, mopt);

        stage = "spectra";
        SpectrumOptions sopt;
        sopt.include_dc = cfg.include_dc;
        sopt.band_hz = cfg.band_hz;
        sopt.peak_window = cfg.peak_window;
        std::vector<Spectrum> spectra(ds.recordings.size());
        parallel_for(ds.recordings.size(), cfg.threads,
                     [&](std::size_t i) { spectra[i] = one_sided_spectrum(ds.recordings[i], sopt); });

        stage = "features";
        MomentOptions fopt;
        fopt.conventional = cfg.conventional_moments;
        FeatureMatrix features = build_feature_matrix(ds, spectra, fopt);
        {
            std::ostringstream csv;
            write_feature_csv(csv, features);
            out.write_text("features.csv", csv.str());
        }

        stage = "feature maps";
        const FeatureMatrix& for_maps_src = features;
        FeatureMatrix enhanced_maps;
        if (cfg.enhance_maps) enhanced_maps = enhance(features);
        const FeatureMatrix& for_maps = cfg.enhance_maps ? enhanced_maps : for_maps_src;
        for (std::size_t j = 0; j < for_maps.values.cols; ++j) {
            std::vector<double> column(for_maps.values.rows);
            for (std::size_t i = 0; i < for_maps.values.rows; ++i)
                column[i] = for_maps.values(i, j);
            write_scalar_map(out, "feature_" + for_maps.column_names[j], ds, column, cfg.gamma);
        }

        stage = "pca";
        const Standardization standardized = standardize(features);
        const PcaModel model =
            fit_pca(standardized.matrix.values, static_cast<std::size_t>(cfg.pca_components));
        out.write_text("pca_model.json", pca_model_to_json(model).dump(2) + "\n");
        const Matrix scores = pca_transform(model, standardized.matrix.values);
        {
            FeatureMatrix score_table;
            score_table.ids = features.ids;
            score_table.positions = features.positions;
            score_table.values = scores;
            for (std::size_t c = 0; c < scores.cols; ++c)
                score_table.column_names.push_back("C" + std::to_string(c + 1));
            std::ostringstream csv;
            write_feature_csv(csv, score_table);
            out.write_text("pca_scores.csv", csv.str());
        }
        for (std::size_t c = 0; c < scores.cols; ++c) {
            std::vector<double> column(scores.rows);
            for (std::size_t i = 0; i < scores.rows; ++i) column[i] = scores(i, c);
            write_scalar_map(out, "pca_c" + std::to_string(c + 1), ds, column, cfg.gamma);
        }
        if (scores.cols >= 3) {
            Matrix first3(scores.rows, 3);
            for (std::size_t i = 0; i < scores.rows; ++i)
                for (std::size_t c = 0; c < 3; ++c) first3(i, c) = scores(i, c);
            write_scalar_map(out, "pca_combined", ds, combine_components(first3), cfg.gamma);
        }

        stage = "clustering";
        std::vector<ClusterRunConfig> grid;
        for (int k : cfg.k_values)
            for (auto method : cfg.methods) {
                if (method == ClusterMethod::kmeans) {
                    grid.push_back({ClusterInput::features, ClusterMethod::kmeans, k});
                    grid.push_back({ClusterInput::pca3, ClusterMethod::kmeans, k});
                    grid.push_back({ClusterInput::enhanced, ClusterMethod::kmeans, k});
                } else {
                    grid.push_back({ClusterInput::features, ClusterMethod::spectral, k});
                }
            }
        std::vector<ComparisonEntry> entries = compare_clusterings(features, grid, cfg.seed);
        for (const auto& e : entries) {
            const std::string tag =
                input_file_tag(e.input) + "_" + e.method + "_k" + std::to_string(e.k);
            std::ostringstream csv;
            write_labels_csv(csv, features.ids, features.positions, e.model.labels);
            out.write_text("labels_" + tag + ".csv", csv.str());
            write_label_map(out, "labels_" + tag, ds, e.model.labels);
        }
        out.write_text("silhouette.json", comparison_to_json(entries).dump(2) + "\n");

        stage = "report";
        const std::string cfg_text = config_text(cfg);
        nlohmann::json manifest;
        manifest["version"] = std::string(kVersion);
        manifest["config"] = cfg_text;
        manifest["config_hash"] = fnv1a64_hex(
            {reinterpret_cast<const std::uint8_t*>(cfg_text.data()), cfg_text.size()});
        manifest["generated_at"] = static_cast<std::int64_t>(
            std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::system_clock::now().time_since_epoch())
                .count());
        if (!ds.warnings.empty()) manifest["warnings"] = ds.warnings;
        auto outputs = nlohmann::json::array();
        for (const auto& e : out.entries())
            outputs.push_back({{"path", e.name}, {"bytes", e.bytes}, {"fnv1a64", e.hash}});
        manifest["outputs"] = outputs;
        out.write_text("run_manifest.json", manifest.dump(2) + "\n");

        RunReport report;
        for (const auto& e : out.entries()) report.outputs.push_back(out.dir() / e.name);
        report.manifest = std::move(manifest);
        report.comparisons = std::move(entries);
        report.dataset = std::move(ds);
        report.features = std::move(features);
        return report;
    } catch (...) {
        out.discard_all();
        try {
            throw;
        } catch (const data_error& e) {
            throw data_error("stage " + stage + ": " + e.what());
        } catch (const numeric_error& e) {
            throw numeric_error("stage " + stage + ": " + e.what());
        }
    }
}

} // namespace isound
