// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Tolerances are pinned in code next to each check.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "isound/isound.hpp"
#include "support/oracles.hpp"

using namespace isound;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int number;
    std::string name;
    std::function<bool(std::string&)> run;
};

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// --- 1: FFT vs direct DFT on random signals --------------------------------

bool check_fft(std::string& detail) {
    Rng rng(20240901);
    const double start = now_seconds();
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng.index(4095); // N in [2, 4096]
        std::vector<double> x(next_pow2(n), 0.0);
        for (std::size_t i = 0; i < n; ++i) x[i] = rng.uniform(-1.0, 1.0);
        const auto fast = fft(x);
        const auto naive = dft_naive(x);
        for (std::size_t k = 0; k < fast.size(); ++k)
            worst = std::max(worst, std::abs(fast[k] - naive[k]));
    }
    const double elapsed = now_seconds() - start;
    std::ostringstream ss;
    ss << "max |fft - dft| = " << worst << ", " << elapsed << " s";
    detail = ss.str();
    return worst < 1e-9 && elapsed < 5.0;
}

// --- 2: moment formula fidelity ---------------------------------------------

bool check_features(std::string& detail) {
    // two equal lines at 100 and 300 Hz, hand-evaluated
    Spectrum two;
    two.freqs_hz = {100.0, 300.0};
    two.amps = {5.0, 5.0};
    const auto m = spectral_moments(two);
    auto rel = [](double got, double want) {
        return std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want));
    };
    if (!rel(m.m1, 200.0) || !rel(m.m2, 10000.0) || std::abs(m.m3) > 1e-20 ||
        !rel(m.m4, 1e-8)) {
        detail = "two-line example mismatch";
        return false;
    }

    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        Spectrum s;
        double f = rng.uniform(20.0, 100.0);
        for (int i = 0; i < 48; ++i) {
            s.freqs_hz.push_back(f);
            f += rng.uniform(10.0, 200.0);
            s.amps.push_back(rng.uniform(0.0, 3.0));
        }
        s.amps[20] += 1.0;

        const auto base = spectral_moments(s);

        const double delta = rng.uniform(100.0, 4000.0);
        Spectrum shifted = s;
        for (double& fr : shifted.freqs_hz) fr += delta;
        const auto sh = spectral_moments(shifted);
        if (std::abs(sh.m1 - (base.m1 + delta)) > 1e-9 * std::max(1.0, base.m1 + delta) ||
            std::abs(sh.m2 - base.m2) > 1e-9 * std::max(1.0, base.m2) ||
            std::abs(sh.m3 - base.m3) > 1e-9 || std::abs(sh.m4 - base.m4) > 1e-9) {
            detail = "shift invariance violated";
            return false;
        }

        const double alpha = rng.uniform(0.2, 8.0);
        Spectrum scaled = s;
        for (double& a : scaled.amps) a *= alpha;
        const auto sc = spectral_moments(scaled);
        const double p_want = alpha * power(s);
        if (std::abs(power(scaled) - p_want) > 1e-9 * p_want ||
            std::abs(sc.m1 - base.m1) > 1e-9 * std::max(1.0, base.m1) ||
            std::abs(sc.m2 - base.m2) > 1e-9 * std::max(1.0, base.m2) ||
            std::abs(sc.m3 - base.m3) > 1e-9 || std::abs(sc.m4 - base.m4) > 1e-9) {
            detail = "scaling covariance violated";
            return false;
        }
    }
    detail = "two-line oracle + 100 random spectra";
    return true;
}

// --- 3: k-means reaches the enumerated optimum ------------------------------

bool check_kmeans_optimal(std::string& detail) {
    Rng rng(424242);
    for (int instance = 0; instance < 20; ++instance) {
        const std::size_t n = 5 + rng.index(6);
        const std::size_t d = 1 + rng.index(3);
        const int k = 2 + static_cast<int>(rng.index(2));
        Matrix x(n, d);
        for (auto& v : x.data) v = rng.uniform(-5.0, 5.0);

        const ClusterModel model = kmeans(x, k, static_cast<std::uint64_t>(instance));
        const auto oracle = oracles::best_partition(x, k);
        if (!oracles::same_partition(model.labels, oracle) ||
            model.inertia != labeling_inertia(x, oracle, k)) {
            detail = "instance " + std::to_string(instance) + " missed the optimum";
            return false;
        }
    }
    detail = "20 instances, n <= 10, exact partition match";
    return true;
}

// --- 4: silhouette oracle ----------------------------------------------------

bool check_silhouette(std::string& detail) {
    Matrix x(4, 1);
    x(0, 0) = 0.0;
    x(1, 0) = 1.0;
    x(2, 0) = 10.0;
    x(3, 0) = 11.0;
    const double s = silhouette(x, std::vector<int>{0, 0, 1, 1});
    if (std::abs(s - 0.899749) > 1e-6) {
        detail = "4-point example scored " + format_double(s);
        return false;
    }

    Rng rng(99);
    Matrix y(30, 2);
    for (auto& v : y.data) v = rng.normal();
    std::vector<int> labels(30);
    for (auto& l : labels) l = static_cast<int>(rng.index(3));
    labels[0] = 0;
    labels[1] = 1;
    labels[2] = 2;
    const double base = silhouette(y, labels);
    const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (int trial = 0; trial < 50; ++trial) {
        const auto& p = perms[rng.index(6)];
        std::vector<int> relabeled(30);
        for (std::size_t i = 0; i < 30; ++i) relabeled[i] = p[labels[i]];
        if (silhouette(y, relabeled) != base) {
            detail = "relabeling changed the score";
            return false;
        }
    }
    detail = "0.899749 +- 1e-6; 50 relabelings invariant";
    return true;
}

// --- 5: PCA properties -------------------------------------------------------

bool check_pca(std::string& detail) {
    Rng rng(1234);
    Matrix x(300, 6);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            x(i, j) = static_cast<double>(j + 1) * rng.normal();
    const PcaModel model = fit_pca(x, 6);

    std::vector<double> mean(6, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < 6; ++j) mean[j] += x(i, j);
    for (auto& m : mean) m /= static_cast<double>(x.rows);
    Matrix cov(6, 6);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t a = 0; a < 6; ++a)
            for (std::size_t b = 0; b < 6; ++b)
                cov(a, b) += (x(i, a) - mean[a]) * (x(i, b) - mean[b]);
    for (auto& v : cov.data) v /= static_cast<double>(x.rows - 1);
    for (std::size_t c = 0; c < 6; ++c) {
        double residual = 0.0;
        for (std::size_t a = 0; a < 6; ++a) {
            double cv = 0.0;
            for (std::size_t b = 0; b < 6; ++b) cv += cov(a, b) * model.components(c, b);
            const double r = cv - model.eigenvalues[c] * model.components(c, a);
            residual += r * r;
        }
        if (std::sqrt(residual) >= 1e-9) {
            detail = "eigenpair residual " + format_double(std::sqrt(residual));
            return false;
        }
    }
    double sum = 0.0;
    for (double r : model.explained_variance_ratio) sum += r;
    if (std::abs(sum - 1.0) > 1e-9) {
        detail = "ratios sum to " + format_double(sum);
        return false;
    }

    // rank-1 data
    Matrix line(40, 2);
    for (std::size_t i = 0; i < 40; ++i) {
        const double t = rng.uniform(-2.0, 2.0);
        line(i, 0) = t;
        line(i, 1) = -3.0 * t;
    }
    const PcaModel rank1 = fit_pca(line, 2);
    if (std::abs(rank1.explained_variance_ratio[0] - 1.0) > 1e-12) {
        detail = "rank-1 first ratio " + format_double(rank1.explained_variance_ratio[0]);
        return false;
    }

    // clustering is invariant under the full-dimensional rotation
    FeatureMatrix fm;
    fm.values = x;
    fm.ids.resize(x.rows);
    fm.positions.resize(x.rows);
    fm.column_names.assign(kFeatureNames.begin(), kFeatureNames.end());
    const FeatureMatrix scores = pca_filter(fm, 6);
    const ClusterModel direct = kmeans(x, 3, 7);
    const ClusterModel rotated = kmeans(scores.values, 3, 7);
    if (direct.labels != rotated.labels) {
        detail = "labels changed under full-rank PCA";
        return false;
    }
    detail = "residuals < 1e-9; ratios sum to 1; rank-1 ratio 1; rotation-invariant labels";
    return true;
}

// --- 6: spectral clustering sanity -------------------------------------------

bool check_spectral(std::string& detail) {
    const auto [blobs, blob_truth] = oracles::make_blobs(50, 20.0, 1.0, 7);
    const ClusterModel blob_model = spectral_cluster(blobs, 2, 11);
    const double blob_ari = adjusted_rand_index(blob_model.labels, blob_truth);
    if (blob_ari != 1.0) {
        detail = "blob ARI " + format_double(blob_ari);
        return false;
    }

    const auto [rings, ring_truth] = oracles::make_rings(220, 60, 1.0, 6.0, 0.03, 13);
    const ClusterModel ring_spectral = spectral_cluster(rings, 2, 17);
    const ClusterModel ring_kmeans = kmeans(rings, 2, 17);
    const double ari_spectral = adjusted_rand_index(ring_spectral.labels, ring_truth);
    const double ari_kmeans = adjusted_rand_index(ring_kmeans.labels, ring_truth);
    std::ostringstream ss;
    ss << "blob ARI 1.0; ring ARI spectral " << ari_spectral << " vs kmeans " << ari_kmeans;
    detail = ss.str();
    return ari_spectral >= 0.95 && ari_kmeans <= 0.5;
}

// --- 7: end-to-end defect recovery -------------------------------------------

bool check_end_to_end(std::string& detail) {
    const fs::path base = fs::temp_directory_path() / "isound_acceptance";
    fs::remove_all(base);
    write_slab_files(default_slab(1), base / "data");

    PipelineConfig cfg;
    cfg.manifest_path = base / "data" / "manifest.csv";
    cfg.out_dir = base / "out";
    cfg.seed = 1;
    cfg.threads = 1; // timed single-threaded

    const double start = now_seconds();
    const RunReport report = run_pipeline(cfg);
    const double elapsed = now_seconds() - start;

    std::ifstream truth_file(base / "data" / "truth.csv");
    const std::vector<int> truth = read_truth_csv(truth_file);

    double best2 = 0.0, best3 = 0.0;
    for (const auto& e : report.comparisons) {
        if (e.method != "kmeans") continue;
        const TruthScore s = score_against_truth(e.model.labels, truth);
        if (e.k == 2) best2 = std::max(best2, s.accuracy_best_permutation);
        if (e.k == 3) best3 = std::max(best3, s.ari);
    }
    fs::remove_all(base);

    std::ostringstream ss;
    ss << "k=2 accuracy " << best2 << "; k=3 ARI " << best3 << "; " << elapsed << " s";
    detail = ss.str();
    return best2 >= 0.90 && best3 >= 0.7 && elapsed < 60.0;
}

// --- 8: survey geometry -------------------------------------------------------

bool check_geometry(std::string& detail) {
    SlabSpec spec = default_slab(2);
    spec.duration_s = 0.002;
    const SynthResult r = generate(spec);
    const auto [nx, ny] = grid_dims(r.dataset);
    std::ostringstream ss;
    ss << nx << "x" << ny << " grid, " << r.dataset.recordings.size() << " points";
    detail = ss.str();
    return nx == 82 && ny == 11 && r.dataset.recordings.size() == 902 &&
           static_cast<std::size_t>(nx) * ny == 902;
}

// --- 9: rerun determinism ------------------------------------------------------

bool check_determinism(std::string& detail) {
    const fs::path base = fs::temp_directory_path() / "isound_acceptance_det";
    fs::remove_all(base);
    SlabSpec spec = scaled_slab(20.0, 8.0, 2.0, 4);
    spec.duration_s = 0.01;
    write_slab_files(spec, base / "data");

    auto run_once = [&](const fs::path& out, int threads) {
        PipelineConfig cfg;
        cfg.manifest_path = base / "data" / "manifest.csv";
        cfg.out_dir = out;
        cfg.seed = 9;
        cfg.threads = threads;
        return run_pipeline(cfg);
    };
    run_once(base / "out1", 1);
    run_once(base / "out2", 2);

    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(base / "out1")) {
        const std::string name = e.path().filename().string();
        if (name == "run_manifest.json") continue; // carries a timestamp
        if (read_file(e.path()) != read_file(base / "out2" / name)) {
            detail = name + " differs between runs";
            return false;
        }
        ++compared;
    }
    fs::remove_all(base);
    detail = std::to_string(compared) + " files byte-identical";
    return compared > 0;
}

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "fft matches the direct transform (50 signals, N in [2, 4096], < 1e-9, < 5 s)",
         check_fft},
        {2, "moment formulas: two-line oracle, shift and scaling properties", check_features},
        {3, "k-means best-of-10 equals the enumerated optimum on 20 small instances",
         check_kmeans_optimal},
        {4, "silhouette oracle value and relabeling invariance", check_silhouette},
        {5, "pca eigenpair residuals, ratio normalization, rank-1, rotation invariance",
         check_pca},
        {6, "spectral clustering: exact blobs, rings beyond k-means", check_spectral},
        {7, "end-to-end defect recovery on the synthetic survey slab (< 60 s)",
         check_end_to_end},
        {8, "survey geometry: 82 x 11 lattice holding 902 points", check_geometry},
        {9, "reruns are byte-identical outside the run manifest", check_determinism},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] %d: %s%s%s\n", ok ? "PASS" : "FAIL", c.number, c.name.c_str(),
                    detail.empty() ? "" : " -- ", detail.c_str());
        if (!ok) ++failed;
    }
    std::printf("acceptance: %zu/%zu criteria passed\n", criteria.size() - failed,
                criteria.size());
    return failed == 0 ? 0 : 1;
}
