#include "nfl/oracle.hpp"

#include <stdexcept>

#include "nfl/parallel.hpp"
#include "nfl/rng.hpp"

namespace nfl {

namespace {

Eigen::VectorXd sample_in(const HyperRectangle& region, SplitMix64& rng) {
    Eigen::VectorXd x(region.dim());
    for (int k = 0; k < region.dim(); ++k)
        x[k] = region.lo[k] + (region.hi[k] - region.lo[k]) * rng.uniform01();
    return x;
}

// First step t in 1..tau at which the rollout from x is inside the target
// (closed membership, no slack); 0 when x starts inside; -1 when it never
// enters within the horizon.
int first_hit_step(const LinearSystem& sys, const NeuralNetwork& nn, const HyperRectangle& target,
                   int tau, const Eigen::VectorXd& x0) {
    if (contains(target, x0, 0.0)) return 0;
    Eigen::VectorXd x = x0;
    for (int t = 1; t <= tau; ++t) {
        x = step(sys, x, forward(nn, x));
        if (contains(target, x, 0.0)) return t;
    }
    return -1;
}

}  // namespace

HyperRectangle default_sample_region(const LinearSystem& sys, const HyperRectangle& target, int tau) {
    HyperRectangle region = target;
    for (int t = 0; t < tau; ++t) {
        auto next = backreach_rect(sys, region);
        if (!next) break;
        region = *next;
    }
    return region;
}

TrueBpEstimate mc_true_bp(const LinearSystem& sys, const NeuralNetwork& nn,
                          const HyperRectangle& target, int tau, const HyperRectangle& sample_region,
                          long n_samples, uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("mc_true_bp: n_samples must be >= 1");
    if (tau < 0) throw std::invalid_argument("mc_true_bp: tau must be >= 0");

    TrueBpEstimate est;
    est.n_samples = n_samples;
    est.seed = seed;
    est.sample_region = sample_region;
    est.step_rects.assign(static_cast<size_t>(tau) + 1, std::nullopt);
    est.hits.assign(static_cast<size_t>(tau) + 1, 0);

    const int n_threads = resolve_thread_count(0);
    const int n_chunks = static_cast<int>(std::min<long>(n_samples, 4L * n_threads));
    struct Partial {
        std::vector<std::optional<HyperRectangle>> rects;
        std::vector<long> hits;
    };
    std::vector<Partial> partials(static_cast<size_t>(n_chunks));

    parallel_for(n_chunks, n_threads, [&](int chunk) {
        Partial& p = partials[static_cast<size_t>(chunk)];
        p.rects.assign(static_cast<size_t>(tau) + 1, std::nullopt);
        p.hits.assign(static_cast<size_t>(tau) + 1, 0);
        const long begin = n_samples * chunk / n_chunks;
        const long end = n_samples * (chunk + 1) / n_chunks;
        for (long i = begin; i < end; ++i) {
            SplitMix64 rng = sample_stream(seed, static_cast<uint64_t>(i));
            const Eigen::VectorXd x0 = sample_in(sample_region, rng);
            const int t = first_hit_step(sys, nn, target, tau, x0);
            if (t < 0) continue;
            ++p.hits[static_cast<size_t>(t)];
            auto& rect = p.rects[static_cast<size_t>(t)];
            if (!rect) {
                rect = HyperRectangle(x0, x0);
            } else {
                rect = HyperRectangle(rect->lo.cwiseMin(x0), rect->hi.cwiseMax(x0));
            }
        }
    });

    // Deterministic merge in chunk order.
    for (const Partial& p : partials) {
        for (int t = 0; t <= tau; ++t) {
            est.hits[static_cast<size_t>(t)] += p.hits[static_cast<size_t>(t)];
            const auto& rect = p.rects[static_cast<size_t>(t)];
            if (!rect) continue;
            auto& acc = est.step_rects[static_cast<size_t>(t)];
            if (!acc) {
                acc = rect;
            } else {
                acc = HyperRectangle(acc->lo.cwiseMin(rect->lo), acc->hi.cwiseMax(rect->hi));
            }
        }
    }
    return est;
}

double approx_error(double a_true, double a_bpe) {
    if (!(a_true > 0.0))
        throw std::invalid_argument("approx_error: undefined for non-positive true area");
    return (a_bpe - a_true) / a_true;
}

AuditReport soundness_audit(const BackreachResult& result, const LinearSystem& sys,
                            const NeuralNetwork& nn, const HyperRectangle& target, long n_samples,
                            uint64_t seed, const std::optional<HyperRectangle>& sample_region) {
    const int tau = static_cast<int>(result.bp_sets.size()) - 1;
    if (tau < 0) throw std::invalid_argument("soundness_audit: empty result");

    AuditReport report;
    report.n_samples = n_samples;
    report.seed = seed;
    report.sample_region = sample_region ? *sample_region : default_sample_region(sys, target, tau);

    constexpr size_t kMaxExamples = 16;
    const int n_threads = resolve_thread_count(0);
    const int n_chunks = static_cast<int>(std::min<long>(n_samples, 4L * n_threads));
    struct Partial {
        long checked = 0;
        long violations = 0;
        std::vector<Violation> examples;
    };
    std::vector<Partial> partials(static_cast<size_t>(n_chunks));

    parallel_for(n_chunks, n_threads, [&](int chunk) {
        Partial& p = partials[static_cast<size_t>(chunk)];
        const long begin = n_samples * chunk / n_chunks;
        const long end = n_samples * (chunk + 1) / n_chunks;
        for (long i = begin; i < end; ++i) {
            SplitMix64 rng = sample_stream(seed, static_cast<uint64_t>(i));
            const Eigen::VectorXd x0 = sample_in(report.sample_region, rng);
            const int t = first_hit_step(sys, nn, target, tau, x0);
            if (t <= 0) continue;  // t = 0 is the target set itself
            ++p.checked;
            if (!union_contains(result.bp_sets[static_cast<size_t>(t)], x0, kMembershipTol)) {
                ++p.violations;
                if (p.examples.size() < kMaxExamples) p.examples.push_back({t, x0});
            }
        }
    });

    for (const Partial& p : partials) {
        report.checked += p.checked;
        report.violations += p.violations;
        for (const auto& v : p.examples) {
            if (report.examples.size() < kMaxExamples) report.examples.push_back(v);
        }
    }
    return report;
}

}  // namespace nfl
