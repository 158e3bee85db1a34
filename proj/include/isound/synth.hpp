#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "isound/csv.hpp"
#include "isound/dataset.hpp"
#include "isound/errors.hpp"
#include "isound/rng.hpp"
#include "isound/wav.hpp"

namespace isound {

enum class DefectKind { air_void, delamination };

// Truth labels used throughout: 0 solid, 1 void, 2 delamination.
inline constexpr int kLabelSolid = 0;
inline constexpr int kLabelVoid = 1;
inline constexpr int kLabelDelamination = 2;

struct DefectRegion {
    enum class Shape { rect, circle } shape = Shape::rect;
    DefectKind kind = DefectKind::air_void;
    // rect: corner (x, y) with extent (w, h); circle: center (x, y), radius r
    double x_cm = 0.0, y_cm = 0.0;
    double w_cm = 0.0, h_cm = 0.0;
    double r_cm = 0.0;

    bool contains(const Position& p) const {
        if (shape == Shape::rect)
            return p.x_cm >= x_cm && p.x_cm <= x_cm + w_cm && p.y_cm >= y_cm &&
                   p.y_cm <= y_cm + h_cm;
        const double dx = p.x_cm - x_cm, dy = p.y_cm - y_cm;
        return dx * dx + dy * dy <= r_cm * r_cm;
    }
};

struct Mode {
    double freq_hz = 0.0;
    double amp = 0.0;
    double damping_per_s = 0.0;
};

// Acoustic response templates per surface class. These are test-fixture
// constants shaped only by the qualitative contrast they must plant: defects
// return less energy than solid concrete, a void shifts the response down in
// frequency at much lower amplitude, and a delamination adds a strong
// low-frequency flexural mode.
struct ClassTemplates {
    std::vector<Mode> solid{{7800.0, 0.55, 260.0}, {12400.0, 0.18, 420.0}};
    std::vector<Mode> air_void{{5460.0, 0.22, 260.0}, {8680.0, 0.072, 420.0}};
    std::vector<Mode> delamination{{1500.0, 0.35, 140.0},
                                   {7800.0, 0.33, 260.0},
                                   {12400.0, 0.108, 420.0}};

    const std::vector<Mode>& for_label(int label) const {
        switch (label) {
            case kLabelVoid: return air_void;
            case kLabelDelamination: return delamination;
            default: return solid;
        }
    }
};

struct SlabSpec {
    double length_cm = 162.0; // x extent
    double width_cm = 20.0;   // y extent
    double spacing_cm = 2.0;
    std::vector<DefectRegion> defects;
    double sample_rate_hz = 44100.0;
    double duration_s = 0.05;
    double noise_rms = 0.01;
    std::uint64_t seed = 1;
    ClassTemplates templates;
};

// Default slab: one rectangular void and one circular delamination, both well
// inside the scanned area.
inline SlabSpec default_slab(std::uint64_t seed = 1) {
    SlabSpec spec;
    spec.seed = seed;
    spec.defects.push_back({DefectRegion::Shape::rect, DefectKind::air_void, 30.0, 0.0, 20.0,
                            20.0, 0.0});
    spec.defects.push_back({DefectRegion::Shape::circle, DefectKind::delamination, 110.0, 10.0,
                            0.0, 0.0, 6.0});
    return spec;
}

// Same two defects laid out proportionally, for slabs of any size.
inline SlabSpec scaled_slab(double length_cm, double width_cm, double spacing_cm,
                            std::uint64_t seed = 1) {
    SlabSpec spec;
    spec.length_cm = length_cm;
    spec.width_cm = width_cm;
    spec.spacing_cm = spacing_cm;
    spec.seed = seed;
    spec.defects.push_back({DefectRegion::Shape::rect, DefectKind::air_void, 0.2 * length_cm,
                            0.0, 0.13 * length_cm, width_cm, 0.0});
    const double r = 0.3 * std::min(width_cm, length_cm / 3.0);
    spec.defects.push_back({DefectRegion::Shape::circle, DefectKind::delamination,
                            0.7 * length_cm, 0.5 * width_cm, 0.0, 0.0, r});
    return spec;
}

struct SynthResult {
    Dataset dataset;
    std::vector<int> truth;
};

namespace synth_detail {

inline void validate(const SlabSpec& spec) {
    if (spec.length_cm <= 0 || spec.width_cm <= 0 || spec.spacing_cm <= 0)
        throw data_error("synth: slab dimensions and spacing must be positive");
    if (spec.sample_rate_hz <= 0 || spec.duration_s <= 0)
        throw data_error("synth: sample rate and duration must be positive");
    if (spec.noise_rms < 0) throw data_error("synth: negative noise_rms");
    for (const auto& d : spec.defects) {
        bool inside = true;
        if (d.shape == DefectRegion::Shape::rect)
            inside = d.x_cm >= 0 && d.y_cm >= 0 && d.w_cm > 0 && d.h_cm > 0 &&
                     d.x_cm + d.w_cm <= spec.length_cm && d.y_cm + d.h_cm <= spec.width_cm;
        else
            inside = d.r_cm > 0 && d.x_cm - d.r_cm >= 0 && d.x_cm + d.r_cm <= spec.length_cm &&
                     d.y_cm - d.r_cm >= 0 && d.y_cm + d.r_cm <= spec.width_cm;
        if (!inside) throw data_error("synth: defect region overlaps the slab boundary");
    }
}

inline int label_at(const SlabSpec& spec, const Position& p) {
    for (const auto& d : spec.defects)
        if (d.contains(p))
            return d.kind == DefectKind::air_void ? kLabelVoid : kLabelDelamination;
    return kLabelSolid;
}

// Damped sinusoids plus Gaussian noise; the noise stream is keyed by
// (seed, point index) so per-point generation can run in any order.
inline std::vector<double> render(const SlabSpec& spec, const std::vector<Mode>& modes,
                                  std::uint64_t point_index) {
    const std::size_t n =
        static_cast<std::size_t>(std::llround(spec.sample_rate_hz * spec.duration_s));
    std::vector<double> x(std::max<std::size_t>(n, 1), 0.0);
    const double dt = 1.0 / spec.sample_rate_hz;
    for (const auto& mode : modes) {
        const double w = 2.0 * std::numbers::pi * mode.freq_hz;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double t = static_cast<double>(i) * dt;
            x[i] += mode.amp * std::exp(-mode.damping_per_s * t) * std::sin(w * t);
        }
    }
    if (spec.noise_rms > 0.0) {
        Rng rng(mix_seed(spec.seed, point_index));
        for (double& v : x) v += spec.noise_rms * rng.normal();
    }
    for (double& v : x) v = std::clamp(v, -1.0, 1.0);
    return x;
}

inline std::string point_id(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%04zu", index);
    return buf;
}

} // namespace synth_detail

// Generates the lattice row-major (y outer, x inner) with planted per-point
// class labels. Identical specs produce bit-identical datasets.
inline SynthResult generate(const SlabSpec& spec) {
    synth_detail::validate(spec);
    const int nx = static_cast<int>(std::llround(spec.length_cm / spec.spacing_cm)) + 1;
    const int ny = static_cast<int>(std::llround(spec.width_cm / spec.spacing_cm)) + 1;

    SynthResult out;
    out.dataset.spacing_cm = spec.spacing_cm;
    out.dataset.origin = {0.0, 0.0};
    out.dataset.recordings.reserve(static_cast<std::size_t>(nx) * ny);
    out.truth.reserve(static_cast<std::size_t>(nx) * ny);
    std::size_t index = 0;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i, ++index) {
            Recording rec;
            rec.id = synth_detail::point_id(index);
            rec.position = {spec.spacing_cm * i, spec.spacing_cm * j};
            rec.sample_rate_hz = spec.sample_rate_hz;
            const int label = synth_detail::label_at(spec, rec.position);
            rec.samples = synth_detail::render(spec, spec.templates.for_label(label), index);
            out.dataset.recordings.push_back(std::move(rec));
            out.truth.push_back(label);
        }
    }
    return out;
}

// Writes the on-disk layout the ingest stage reads back: manifest.csv,
// wavs/<id>.wav and truth.csv.
inline void write_slab_files(const SlabSpec& spec, const std::filesystem::path& out_dir) {
    const SynthResult r = generate(spec);
    std::filesystem::create_directories(out_dir / "wavs");

    std::ofstream manifest(out_dir / "manifest.csv");
    if (!manifest) throw data_error("synth: cannot write manifest");
    manifest << "id,x_cm,y_cm,wav_path\n";
    std::ofstream truth(out_dir / "truth.csv");
    if (!truth) throw data_error("synth: cannot write truth table");
    truth << "id,truth_label\n";

    const auto rate = static_cast<std::uint32_t>(std::llround(spec.sample_rate_hz));
    for (std::size_t i = 0; i < r.dataset.recordings.size(); ++i) {
        const Recording& rec = r.dataset.recordings[i];
        const std::string rel = "wavs/" + rec.id + ".wav";
        const auto bytes = write_wav(rec.samples, rate);
        std::ofstream wav(out_dir / rel, std::ios::binary);
        if (!wav) throw data_error("synth: cannot write '" + rel + "'");
        wav.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        manifest << rec.id << ',' << format_double(rec.position.x_cm) << ','
                 << format_double(rec.position.y_cm) << ',' << rel << '\n';
        truth << rec.id << ',' << r.truth[i] << '\n';
    }
}

inline std::vector<int> read_truth_csv(std::istream& in) {
    std::string line;
    if (!read_csv_line(in, line) || line != "id,truth_label")
        throw data_error("truth csv: bad header (expected 'id,truth_label')");
    std::vector<int> truth;
    std::size_t row = 1;
    while (read_csv_line(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 2)
            throw data_error("truth csv row " + std::to_string(row) + ": expected 2 fields");
        truth.push_back(static_cast<int>(parse_long(fields[1], "truth label")));
    }
    return truth;
}

// ---------------------------------------------------------------------------
// Agreement between a clustering and the planted truth.

inline double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw data_error("ari: length mismatch");
    const std::size_t n = a.size();
    if (n == 0) throw data_error("ari: empty labelings");

    auto compact = [](std::span<const int> v, std::vector<int>& out) {
        std::vector<int> uniq(v.begin(), v.end());
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        out.resize(v.size());
        for (std::size_t i = 0; i < v.size(); ++i)
            out[i] = static_cast<int>(std::lower_bound(uniq.begin(), uniq.end(), v[i]) -
                                      uniq.begin());
        return uniq.size();
    };
    std::vector<int> ca, cb;
    const std::size_t ka = compact(a, ca), kb = compact(b, cb);

    std::vector<std::size_t> table(ka * kb, 0), ra(ka, 0), rb(kb, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++table[static_cast<std::size_t>(ca[i]) * kb + static_cast<std::size_t>(cb[i])];
        ++ra[static_cast<std::size_t>(ca[i])];
        ++rb[static_cast<std::size_t>(cb[i])];
    }
    auto choose2 = [](std::size_t m) { return 0.5 * static_cast<double>(m) * (m - 1); };
    double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (std::size_t v : table) sum_ij += choose2(v);
    for (std::size_t v : ra) sum_a += choose2(v);
    for (std::size_t v : rb) sum_b += choose2(v);
    const double pairs = choose2(n);
    const double expected = sum_a * sum_b / pairs;
    const double max_index = 0.5 * (sum_a + sum_b);
    if (max_index == expected) return 0.0; // both labelings trivial
    return (sum_ij - expected) / (max_index - expected);
}

struct TruthScore {
    double accuracy_best_permutation = 0.0;
    double ari = 0.0;
};

// Accuracy maximized over assignments of predicted labels to truth labels
// (cluster numbering is arbitrary); exact enumeration, intended for small
// label counts.
inline TruthScore score_against_truth(std::span<const int> labels, std::span<const int> truth) {
    if (labels.size() != truth.size()) throw data_error("score: length mismatch");
    const std::size_t n = labels.size();
    if (n == 0) throw data_error("score: empty labelings");

    std::vector<int> lu(labels.begin(), labels.end()), tu(truth.begin(), truth.end());
    std::sort(lu.begin(), lu.end());
    lu.erase(std::unique(lu.begin(), lu.end()), lu.end());
    std::sort(tu.begin(), tu.end());
    tu.erase(std::unique(tu.begin(), tu.end()), tu.end());
    if (lu.size() > 8 || tu.size() > 8)
        throw data_error("score: permutation search limited to 8 labels");

    // Pad to a common size so the permutation can leave labels unmatched.
    const std::size_t m = std::max(lu.size(), tu.size());
    std::vector<std::size_t> counts(m * m, 0);
    auto index_of = [](const std::vector<int>& uniq, int v) {
        return static_cast<std::size_t>(std::lower_bound(uniq.begin(), uniq.end(), v) -
                                        uniq.begin());
    };
    for (std::size_t i = 0; i < n; ++i)
        ++counts[index_of(lu, labels[i]) * m + index_of(tu, truth[i])];

    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::size_t best = 0;
    do {
        std::size_t hits = 0;
        for (std::size_t p = 0; p < m; ++p) hits += counts[p * m + perm[p]];
        best = std::max(best, hits);
    } while (std::next_permutation(perm.begin(), perm.end()));

    TruthScore score;
    score.accuracy_best_permutation = static_cast<double>(best) / static_cast<double>(n);
    score.ari = adjusted_rand_index(labels, truth);
    return score;
}

} // namespace isound
