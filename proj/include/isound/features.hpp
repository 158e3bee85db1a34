#pragma once

#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "isound/csv.hpp"
#include "isound/dataset.hpp"
#include "isound/errors.hpp"
#include "isound/matrix.hpp"
#include "isound/spectrum.hpp"

namespace isound {

inline constexpr std::array<const char*, 6> kFeatureNames{"E", "P", "M1", "M2", "M3", "M4"};

// Spectral mass below this is treated as "no signal" and rejected.
inline constexpr double kFlatSpectrumEps = 1e-12;

struct FeatureVector {
    double energy = 0.0; // time-domain sum of squares
    double power = 0.0;  // sum of spectral amplitudes
    double m1 = 0.0;     // amplitude-weighted mean frequency (Hz)
    double m2 = 0.0;     // amplitude-weighted variance about m1 (Hz^2)
    double m3 = 0.0;     // third central moment / (P * norm)
    double m4 = 0.0;     // fourth central moment / (P * norm)
};

// Per-point feature rows, id- and position-aligned with the source dataset.
// `values` is 6 columns when built from recordings; reduced variants (PCA
// scores, labels read back from disk) reuse the container with their own
// column names.
struct FeatureMatrix {
    std::vector<std::string> ids;
    std::vector<Position> positions;
    std::vector<std::string> column_names;
    Matrix values;
};

struct MomentOptions {
    // The shipped normalization divides the third and fourth central moments
    // by P*M2^3 and P*M2^4. Set `conventional` for the textbook skewness and
    // kurtosis denominators M2^(3/2) and M2^2 instead.
    bool conventional = false;
};

inline double energy(std::span<const double> samples) {
    double e = 0.0;
    for (double v : samples) e += v * v;
    return e;
}

inline double power(const Spectrum& s) {
    double p = 0.0;
    for (double a : s.amps) p += a;
    return p;
}

struct SpectralMoments {
    double m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
};

inline SpectralMoments spectral_moments(const Spectrum& s, const MomentOptions& opt = {}) {
    const double p = power(s);
    if (p <= kFlatSpectrumEps)
        throw data_error("features: flat spectrum (no spectral mass)");

    SpectralMoments m;
    for (std::size_t i = 0; i < s.size(); ++i) m.m1 += s.amps[i] * s.freqs_hz[i];
    m.m1 /= p;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double d = s.freqs_hz[i] - m.m1;
        m.m2 += s.amps[i] * d * d;
    }
    m.m2 /= p;

    // A line spectrum has no spread; the normalized moments are defined as 0
    // rather than 0/0.
    if (m.m2 <= kFlatSpectrumEps * m.m1 * m.m1) {
        m.m2 = std::max(m.m2, 0.0);
        return m;
    }

    double sum3 = 0.0, sum4 = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double d = s.freqs_hz[i] - m.m1;
        const double d3 = d * d * d;
        sum3 += s.amps[i] * d3;
        sum4 += s.amps[i] * d3 * d;
    }
    const double den3 = opt.conventional ? p * std::pow(m.m2, 1.5) : p * m.m2 * m.m2 * m.m2;
    const double den4 = opt.conventional ? p * m.m2 * m.m2 : p * m.m2 * m.m2 * m.m2 * m.m2;
    m.m3 = sum3 / den3;
    m.m4 = sum4 / den4;
    return m;
}

inline FeatureVector compute_features(const Recording& rec, const Spectrum& s,
                                      const MomentOptions& opt = {}) {
    FeatureVector f;
    f.energy = energy(rec.samples);
    f.power = power(s);
    try {
        const SpectralMoments m = spectral_moments(s, opt);
        f.m1 = m.m1;
        f.m2 = m.m2;
        f.m3 = m.m3;
        f.m4 = m.m4;
    } catch (const data_error&) {
        throw data_error("features: flat spectrum for recording '" + rec.id + "'");
    }
    return f;
}

// Row i holds (E, P, M1, M2, M3, M4) of recording i; dataset order is kept.
inline FeatureMatrix build_feature_matrix(const Dataset& ds, std::span<const Spectrum> spectra,
                                          const MomentOptions& opt = {}) {
    if (ds.recordings.empty()) throw data_error("features: empty dataset");
    if (spectra.size() != ds.recordings.size())
        throw data_error("features: spectra not row-aligned with the dataset");

    FeatureMatrix fm;
    fm.column_names.assign(kFeatureNames.begin(), kFeatureNames.end());
    fm.values = Matrix(ds.recordings.size(), 6);
    fm.ids.reserve(ds.recordings.size());
    fm.positions.reserve(ds.recordings.size());
    for (std::size_t i = 0; i < ds.recordings.size(); ++i) {
        const Recording& rec = ds.recordings[i];
        const FeatureVector f = compute_features(rec, spectra[i], opt);
        auto row = fm.values.row(i);
        row[0] = f.energy;
        row[1] = f.power;
        row[2] = f.m1;
        row[3] = f.m2;
        row[4] = f.m3;
        row[5] = f.m4;
        fm.ids.push_back(rec.id);
        fm.positions.push_back(rec.position);
    }
    return fm;
}

// Per-row [E, P^3, M1^2, M2^2, M3, M4]. Applied to raw features, before any
// standardization.
inline FeatureMatrix enhance(FeatureMatrix m) {
    if (m.values.cols != 6) throw data_error("enhance: expected 6 feature columns");
    for (std::size_t i = 0; i < m.values.rows; ++i) {
        auto row = m.values.row(i);
        row[1] = row[1] * row[1] * row[1];
        row[2] = row[2] * row[2];
        row[3] = row[3] * row[3];
    }
    return m;
}

struct Standardization {
    FeatureMatrix matrix;
    std::vector<double> means;
    std::vector<double> stds; // population std; 0 marks a constant column
};

// Z-scores each column (population std). Constant columns pass through as
// zeros with std recorded as 0.
inline Standardization standardize(const FeatureMatrix& m) {
    if (m.values.rows < 2) throw data_error("standardize: need at least 2 rows");
    Standardization out;
    out.matrix = m;
    const std::size_t n = m.values.rows, d = m.values.cols;
    out.means.assign(d, 0.0);
    out.stds.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += m.values(i, j);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dlt = m.values(i, j) - mean;
            var += dlt * dlt;
        }
        var /= static_cast<double>(n);
        const double sd = std::sqrt(var);
        out.means[j] = mean;
        out.stds[j] = sd;
        for (std::size_t i = 0; i < n; ++i)
            out.matrix.values(i, j) = sd > 0.0 ? (m.values(i, j) - mean) / sd : 0.0;
    }
    return out;
}

inline void write_feature_csv(std::ostream& out, const FeatureMatrix& m) {
    out << "id,x_cm,y_cm";
    for (const auto& name : m.column_names) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < m.values.rows; ++i) {
        out << m.ids[i] << ',' << format_double(m.positions[i].x_cm) << ','
            << format_double(m.positions[i].y_cm);
        for (std::size_t j = 0; j < m.values.cols; ++j)
            out << ',' << format_double(m.values(i, j));
        out << '\n';
    }
}

// Reads any `id,x_cm,y_cm,<value columns...>` table written by this library.
inline FeatureMatrix read_feature_csv(std::istream& in) {
    std::string line;
    if (!read_csv_line(in, line)) throw data_error("feature csv: missing header");
    const auto header = split_csv(line);
    if (header.size() < 4 || header[0] != "id" || header[1] != "x_cm" || header[2] != "y_cm")
        throw data_error("feature csv: bad header (expected 'id,x_cm,y_cm,...')");

    FeatureMatrix m;
    m.column_names.assign(header.begin() + 3, header.end());
    const std::size_t d = m.column_names.size();
    std::vector<double> values;
    std::size_t row = 1;
    while (read_csv_line(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        const std::string where = "feature csv row " + std::to_string(row);
        if (fields.size() != 3 + d) throw data_error(where + ": wrong field count");
        m.ids.push_back(fields[0]);
        m.positions.push_back({parse_double(fields[1], where + " x_cm"),
                               parse_double(fields[2], where + " y_cm")});
        for (std::size_t j = 0; j < d; ++j)
            values.push_back(parse_double(fields[3 + j], where + " " + m.column_names[j]));
    }
    if (m.ids.empty()) throw data_error("feature csv: no rows");
    m.values = Matrix(m.ids.size(), d);
    m.values.data = std::move(values);
    return m;
}

} // namespace isound
