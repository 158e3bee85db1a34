#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "isound/csv.hpp"
#include "isound/errors.hpp"
#include "isound/wav.hpp"

namespace isound {

struct Position {
    double x_cm = 0.0;
    double y_cm = 0.0;
};

// One impact: normalized time-domain samples plus the slab-frame position tag.
struct Recording {
    std::string id;
    std::vector<double> samples;
    double sample_rate_hz = 0.0;
    Position position;
};

// All recordings of one scan, on a regular lattice of pitch spacing_cm whose
// corner is at origin. Immutable after load.
struct Dataset {
    std::vector<Recording> recordings;
    double spacing_cm = 0.0;
    Position origin;
    std::vector<std::string> warnings;
};

// Maps a manifest wav_path to the file's bytes. Abstracted so tests can feed
// in-memory containers.
using WavResolver = std::function<std::vector<std::uint8_t>(const std::string& wav_path)>;

struct ManifestOptions {
    double spacing_hint_cm = 0.0;   // >0 forces the lattice pitch
    double default_spacing_cm = 2.0; // fallback when it cannot be inferred
};

// Positions must sit on the lattice within this fraction of the pitch.
inline constexpr double kLatticeTolerance = 0.25;

inline WavResolver file_resolver(const std::filesystem::path& base_dir) {
    return [base_dir](const std::string& wav_path) {
        const std::filesystem::path p =
            std::filesystem::path(wav_path).is_absolute() ? std::filesystem::path(wav_path)
                                                          : base_dir / wav_path;
        std::ifstream f(p, std::ios::binary);
        if (!f) throw data_error("manifest: missing file '" + p.string() + "'");
        return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(f),
                                         std::istreambuf_iterator<char>());
    };
}

namespace dataset_detail {

// Smallest positive gap between consecutive distinct coordinates on one axis.
inline double min_axis_gap(std::vector<double> coords) {
    std::sort(coords.begin(), coords.end());
    double best = 0.0;
    for (std::size_t i = 1; i < coords.size(); ++i) {
        const double d = coords[i] - coords[i - 1];
        if (d > 1e-9 && (best == 0.0 || d < best)) best = d;
    }
    return best;
}

inline double infer_spacing(const std::vector<Recording>& recs, double fallback) {
    std::vector<double> xs, ys;
    xs.reserve(recs.size());
    ys.reserve(recs.size());
    for (const auto& r : recs) {
        xs.push_back(r.position.x_cm);
        ys.push_back(r.position.y_cm);
    }
    const double gx = min_axis_gap(std::move(xs));
    const double gy = min_axis_gap(std::move(ys));
    if (gx > 0.0 && gy > 0.0) return std::min(gx, gy);
    if (gx > 0.0) return gx;
    if (gy > 0.0) return gy;
    return fallback;
}

} // namespace dataset_detail

inline Position dataset_min_corner(const std::vector<Recording>& recs) {
    Position o{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    for (const auto& r : recs) {
        o.x_cm = std::min(o.x_cm, r.position.x_cm);
        o.y_cm = std::min(o.y_cm, r.position.y_cm);
    }
    return o;
}

// Nearest lattice cell of a position; throws when the residual exceeds the
// tolerance. Shared by dataset validation and map rasterization.
inline std::pair<long, long> lattice_cell(const Position& p, const Position& origin,
                                          double spacing, const std::string& id) {
    const long i = std::lround((p.x_cm - origin.x_cm) / spacing);
    const long j = std::lround((p.y_cm - origin.y_cm) / spacing);
    const double rx = std::abs(p.x_cm - (origin.x_cm + spacing * static_cast<double>(i)));
    const double ry = std::abs(p.y_cm - (origin.y_cm + spacing * static_cast<double>(j)));
    if (i < 0 || j < 0 || rx > kLatticeTolerance * spacing || ry > kLatticeTolerance * spacing)
        throw data_error("lattice: off-lattice position for id '" + id + "' (" +
                         format_double(p.x_cm) + ", " + format_double(p.y_cm) + ") with spacing " +
                         format_double(spacing));
    return {i, j};
}

// Parses the `id,x_cm,y_cm,wav_path` manifest, loads each WAV through the
// resolver and validates the grid geometry. Row order is preserved.
inline Dataset load_manifest(std::istream& text, const WavResolver& resolver,
                             const ManifestOptions& opt = {}) {
    std::string line;
    if (!read_csv_line(text, line) || line != "id,x_cm,y_cm,wav_path")
        throw data_error("manifest: bad header (expected 'id,x_cm,y_cm,wav_path')");

    Dataset ds;
    std::unordered_set<std::string> seen;
    std::size_t row = 1;
    while (read_csv_line(text, line)) {
        ++row;
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        const std::string where = "manifest row " + std::to_string(row);
        if (fields.size() != 4) throw data_error(where + ": expected 4 fields");
        const std::string& id = fields[0];
        if (id.empty()) throw data_error(where + ": empty id");
        if (!seen.insert(id).second) throw data_error(where + ": duplicate id '" + id + "'");

        Recording rec;
        rec.id = id;
        rec.position.x_cm = parse_double(fields[1], where + " x_cm");
        rec.position.y_cm = parse_double(fields[2], where + " y_cm");
        WavData wav = parse_wav(resolver(fields[3]));
        rec.samples = std::move(wav.samples);
        rec.sample_rate_hz = wav.sample_rate_hz;
        for (const auto& w : wav.warnings) ds.warnings.push_back(id + ": " + w);
        if (!ds.recordings.empty() && rec.sample_rate_hz != ds.recordings.front().sample_rate_hz)
            throw data_error(where + ": mixed sample rates (id '" + id + "' has " +
                             format_double(rec.sample_rate_hz) + " Hz, expected " +
                             format_double(ds.recordings.front().sample_rate_hz) + " Hz)");
        ds.recordings.push_back(std::move(rec));
    }
    if (ds.recordings.empty()) throw data_error("manifest: empty dataset");

    ds.spacing_cm = opt.spacing_hint_cm > 0.0
                        ? opt.spacing_hint_cm
                        : dataset_detail::infer_spacing(ds.recordings, opt.default_spacing_cm);
    if (ds.spacing_cm <= 0.0) throw data_error("manifest: non-positive grid spacing");
    ds.origin = dataset_min_corner(ds.recordings);
    for (const auto& r : ds.recordings)
        lattice_cell(r.position, ds.origin, ds.spacing_cm, r.id);
    return ds;
}

inline Dataset load_manifest_file(const std::filesystem::path& path,
                                  const ManifestOptions& opt = {}) {
    std::ifstream f(path);
    if (!f) throw data_error("manifest: cannot open '" + path.string() + "'");
    return load_manifest(f, file_resolver(path.parent_path()), opt);
}

// Lattice dimensions covering every recording; cells may be unsampled.
inline std::pair<int, int> grid_dims(const Dataset& ds) {
    if (ds.recordings.empty()) throw data_error("grid_dims: empty dataset");
    long max_i = 0, max_j = 0;
    for (const auto& r : ds.recordings) {
        const auto [i, j] = lattice_cell(r.position, ds.origin, ds.spacing_cm, r.id);
        max_i = std::max(max_i, i);
        max_j = std::max(max_j, j);
    }
    const int nx = static_cast<int>(max_i) + 1;
    const int ny = static_cast<int>(max_j) + 1;
    if (static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) < ds.recordings.size())
        throw data_error("grid_dims: lattice smaller than the dataset");
    return {nx, ny};
}

} // namespace isound
