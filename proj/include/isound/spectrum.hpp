#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "isound/csv.hpp"
#include "isound/dataset.hpp"
#include "isound/errors.hpp"
#include "isound/fft.hpp"

namespace isound {

// One-sided amplitude spectrum: ascending frequencies with raw magnitudes
// |S_k| (no 1/N scaling; downstream features either normalize by the total
// amplitude or are standardized before use).
struct Spectrum {
    std::vector<double> freqs_hz;
    std::vector<double> amps;

    std::size_t size() const { return freqs_hz.size(); }
};

struct SpectrumOptions {
    bool include_dc = false;
    std::optional<std::pair<double, double>> band_hz; // keep only f in [lo, hi]
    bool hann_window = false;                         // off: transform the raw samples
    std::optional<std::size_t> peak_window;           // trim to this many samples around |x| peak
};

namespace spectrum_detail {

inline std::vector<double> prepare_samples(const Recording& rec, const SpectrumOptions& opt) {
    std::vector<double> x(rec.samples.begin(), rec.samples.end());
    if (opt.peak_window && *opt.peak_window > 0 && *opt.peak_window < x.size()) {
        std::size_t peak = 0;
        for (std::size_t i = 1; i < x.size(); ++i)
            if (std::abs(x[i]) > std::abs(x[peak])) peak = i;
        const std::size_t w = *opt.peak_window;
        std::size_t lo = peak > w / 2 ? peak - w / 2 : 0;
        lo = std::min(lo, x.size() - w);
        x.assign(x.begin() + static_cast<std::ptrdiff_t>(lo),
                 x.begin() + static_cast<std::ptrdiff_t>(lo + w));
    }
    if (opt.hann_window && x.size() > 1) {
        const double denom = static_cast<double>(x.size() - 1);
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] *= 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / denom));
    }
    return x;
}

} // namespace spectrum_detail

// Frequencies are bin centers k * rate / N' of the zero-padded transform,
// k = (include_dc ? 0 : 1) .. N'/2. The DC bin is excluded by default
// (microphone bias, not impact response).
inline Spectrum one_sided_spectrum(const Recording& rec, const SpectrumOptions& opt = {}) {
    if (rec.samples.empty()) throw data_error("spectrum: recording '" + rec.id + "' is empty");
    if (rec.sample_rate_hz <= 0.0)
        throw data_error("spectrum: recording '" + rec.id + "' has non-positive sample rate");

    const std::vector<double> x = spectrum_detail::prepare_samples(rec, opt);
    const auto bins = fft(x);
    const std::size_t padded = bins.size();
    const double bin_hz = rec.sample_rate_hz / static_cast<double>(padded);

    Spectrum s;
    const std::size_t k0 = opt.include_dc ? 0 : 1;
    const std::size_t k1 = padded / 2;
    for (std::size_t k = k0; k <= k1; ++k) {
        const double f = static_cast<double>(k) * bin_hz;
        if (opt.band_hz && (f < opt.band_hz->first || f > opt.band_hz->second)) continue;
        s.freqs_hz.push_back(f);
        s.amps.push_back(std::abs(bins[k]));
    }
    if (s.freqs_hz.empty())
        throw data_error("spectrum: empty band for recording '" + rec.id + "'");
    return s;
}

// Debug dump, two columns.
inline void write_spectrum_csv(std::ostream& out, const Spectrum& s) {
    out << "freq_hz,amp\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        out << format_double(s.freqs_hz[i]) << ',' << format_double(s.amps[i]) << '\n';
}

} // namespace isound
