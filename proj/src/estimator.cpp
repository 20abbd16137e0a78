#include "gumbel/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "gumbel/errors.hpp"
#include "gumbel/roots.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gumbel {

namespace {

// Contribution terms of one record at (k, k_prime): exponents theta*m + ln w,
// via callback so evaluations can share a running-maximum shift.
template <typename Fn>
void record_terms(const SampleRecord& rec, int k, int k_prime, WeightMode mode,
                  Fn&& emit) {
    // Records that never reached epoch k carry no information about the pair.
    // Censored records that did reach k still contribute their lower term:
    // they are exactly the mass that reached k but not k_prime.
    if (rec.epochs_reached < k) return;
    if (rec.scores.size() < static_cast<std::size_t>(rec.epochs_reached) ||
        rec.weights.size() < static_cast<std::size_t>(rec.epochs_reached))
        throw compute_error("record is missing scores or weights for its epochs");
    bool has_kp = rec.epochs_reached >= k_prime;
    std::size_t ik = static_cast<std::size_t>(k - 1);
    std::size_t ikp = static_cast<std::size_t>(k_prime - 1);
    if (mode == WeightMode::kFinalEpoch) {
        // Diagnostic variant: one shared weight, taken at the deepest epoch
        // the record computed. Shared weights cancel between the two terms of
        // every record that reached k_prime, so this variant only has a root
        // when some records censored in between; it is biased by design.
        std::size_t last = static_cast<std::size_t>(
            std::min(rec.epochs_reached, k_prime) - 1);
        double w = rec.weights[last];
        if (has_kp) emit(+1, rec.scores[ikp], w);
        emit(-1, rec.scores[ik], w);
    } else {
        if (has_kp) emit(+1, rec.scores[ikp], rec.weights[ikp]);
        emit(-1, rec.scores[ik], rec.weights[ik]);
    }
}

void check_epoch_pair(int k, int k_prime) {
    if (k < 1) throw config_error("epoch k must be at least 1");
    if (k_prime <= k)
        throw config_error("epoch pair needs k_prime > k (got k=" + std::to_string(k) +
                           ", k_prime=" + std::to_string(k_prime) + ")");
}

// g(theta) = sum h and sum h' over records, shift-scaled: both sums are
// multiplied by exp(-shift) with shift = the largest term exponent, so the
// sign (and the root) is unchanged while overflow is impossible.
struct ShiftedSums {
    double sum_h = 0.0;
    double sum_dh = 0.0;
    double shift = 0.0;
    std::uint64_t terms = 0;
};

ShiftedSums shifted_sums(const std::vector<SampleRecord>& records, int k, int k_prime,
                         double theta, WeightMode mode) {
    ShiftedSums out;
    double shift = -1e308;
    for (const auto& rec : records)
        record_terms(rec, k, k_prime, mode, [&](int, double m, double w) {
            shift = std::max(shift, theta * m + std::log(w));
        });
    out.shift = shift;
    if (shift == -1e308) return out;  // no contributing terms
    for (const auto& rec : records)
        record_terms(rec, k, k_prime, mode, [&](int sign, double m, double w) {
            double e = std::exp(theta * m + std::log(w) - shift);
            out.sum_h += sign * e;
            out.sum_dh += sign * m * e;
            ++out.terms;
        });
    return out;
}

}  // namespace

HTerms h_eval(const SampleRecord& rec, int k, int k_prime, double theta,
              WeightMode mode) {
    check_epoch_pair(k, k_prime);
    HTerms out;
    record_terms(rec, k, k_prime, mode, [&](int sign, double m, double w) {
        double e = w * std::exp(theta * m);
        out.h += sign * e;
        out.dh += sign * m * e;
    });
    return out;
}

double solve_lambda(const std::vector<SampleRecord>& records, int k, int k_prime,
                    double anchor, WeightMode mode) {
    check_epoch_pair(k, k_prime);
    if (!(anchor > 0.0)) throw config_error("root-search anchor must be positive");
    std::uint64_t usable = 0;
    for (const auto& rec : records)
        if (!rec.censored) ++usable;
    if (usable < 2)
        throw compute_error("need at least 2 non-censored records to estimate");
    auto g = [&](double theta) {
        return shifted_sums(records, k, k_prime, theta, mode).sum_h;
    };
    const int points = 49;
    double lo_end = anchor / 64.0;
    double hi_end = 4.0 * anchor;
    for (int attempt = 0; attempt < 2; ++attempt) {
        double ratio = std::pow(hi_end / lo_end, 1.0 / (points - 1));
        double prev_theta = lo_end;
        double prev_g = g(prev_theta);
        for (int p = 1; p < points; ++p) {
            double theta = lo_end * std::pow(ratio, p);
            double cur_g = g(theta);
            if (prev_g == 0.0) return prev_theta;
            if ((prev_g < 0.0) != (cur_g < 0.0))
                return secant_bisect(g, prev_theta, theta, 1e-10);
            prev_theta = theta;
            prev_g = cur_g;
        }
        hi_end *= 2.0;  // one retry with a doubled upper end
    }
    throw compute_error("no sign change of the balance function in [" +
                        std::to_string(lo_end) + ", " + std::to_string(hi_end) +
                        "]; g at the ends: " + std::to_string(g(lo_end)) + ", " +
                        std::to_string(g(hi_end)));
}

VarianceEstimate estimate_variance(const std::vector<SampleRecord>& records, int k,
                                   int k_prime, double lambda_hat, WeightMode mode) {
    check_epoch_pair(k, k_prime);
    // Per-record h and h' at the root, shifted by the max exponent; the shift
    // scales numerator and squared denominator identically, so it cancels.
    double shift = -1e308;
    for (const auto& rec : records)
        record_terms(rec, k, k_prime, mode, [&](int, double m, double w) {
            shift = std::max(shift, lambda_hat * m + std::log(w));
        });
    std::uint64_t r = 0;
    double sum_h2 = 0.0;
    double sum_dh = 0.0;
    for (const auto& rec : records) {
        if (!rec.censored) ++r;
        double h = 0.0, dh = 0.0;
        record_terms(rec, k, k_prime, mode, [&](int sign, double m, double w) {
            double e = std::exp(lambda_hat * m + std::log(w) - shift);
            h += sign * e;
            dh += sign * m * e;
        });
        sum_h2 += h * h;
        sum_dh += dh;
    }
    if (r == 0) throw compute_error("no records to estimate dispersion from");
    double denom = (sum_dh / static_cast<double>(r));
    if (!(std::abs(denom) >= 1e-300))
        throw compute_error("degenerate derivative in the dispersion estimate");
    VarianceEstimate out;
    out.variance = (sum_h2 / static_cast<double>(r)) / (denom * denom);
    out.stderr_ = std::sqrt(out.variance / static_cast<double>(r));
    out.r = r;
    return out;
}

double gumbel_pvalue(double lambda, double big_k, double m, double n, double y) {
    if (!(lambda > 0.0) || !(big_k > 0.0))
        throw config_error("Gumbel parameters must be positive");
    if (!(m >= 1.0) || !(n >= 1.0))
        throw config_error("sequence lengths must be at least 1");
    return -std::expm1(-big_k * m * n * std::exp(-lambda * y));
}

namespace {

SampleRecord one_replicate(const ScoringScheme& scheme, const TrialModel& model,
                           int k_max, std::uint64_t seed, std::uint64_t index,
                           AlignmentFrontier& frontier, WeightFrontier& weights) {
    RngStream rng(seed, index);
    PathSample path = run_replicate(scheme, model, k_max, frontier, rng);
    SampleRecord rec;
    rec.replicate = index;
    rec.epochs_reached = path.ladder.count();
    rec.stop_n = path.stop_n;
    rec.censored = path.censored;
    // Censored records keep the scores and weights of the epochs they did
    // reach: those reaching k still supply lower terms to the balance.
    rec.scores = path.ladder.scores;
    rec.weights.reserve(rec.scores.size());
    weights.reset();
    std::size_t next_epoch = 0;
    for (int n = 1; n <= path.stop_n; ++n) {
        weights.extend_idx(path.ia[static_cast<std::size_t>(n - 1)],
                           path.ib[static_cast<std::size_t>(n - 1)]);
        while (next_epoch < path.ladder.epochs.size() &&
               path.ladder.epochs[next_epoch] == n) {
            rec.weights.push_back(
                epoch_weight(weights, static_cast<int>(next_epoch) + 1).w);
            ++next_epoch;
        }
    }
    if (rec.weights.size() != rec.scores.size())
        throw compute_error("weight replay out of step with the ladder");
    return rec;
}

}  // namespace

std::vector<SampleRecord> run_replicates(const ScoringScheme& scheme,
                                         const TrialModel& model, int k_max,
                                         int horizon, std::uint64_t seed,
                                         std::uint64_t first, std::uint64_t count,
                                         int threads) {
    std::vector<SampleRecord> out(count);
#ifdef _OPENMP
    int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel num_threads(nt)
    {
        AlignmentFrontier frontier(scheme, horizon);
        WeightFrontier weights(scheme, model, horizon);
#pragma omp for schedule(dynamic, 16)
        for (std::int64_t c = 0; c < static_cast<std::int64_t>(count); ++c)
            out[static_cast<std::size_t>(c)] =
                one_replicate(scheme, model, k_max, seed,
                              first + static_cast<std::uint64_t>(c), frontier, weights);
    }
#else
    (void)threads;
    AlignmentFrontier frontier(scheme, horizon);
    WeightFrontier weights(scheme, model, horizon);
    for (std::uint64_t c = 0; c < count; ++c)
        out[static_cast<std::size_t>(c)] =
            one_replicate(scheme, model, k_max, seed, first + c, frontier, weights);
#endif
    return out;
}

std::vector<SampleRecord> run_replicates_serial(const ScoringScheme& scheme,
                                                const TrialModel& model, int k_max,
                                                int horizon, std::uint64_t seed,
                                                std::uint64_t first,
                                                std::uint64_t count) {
    std::vector<SampleRecord> out(count);
    AlignmentFrontier frontier(scheme, horizon);
    WeightFrontier weights(scheme, model, horizon);
    for (std::uint64_t c = 0; c < count; ++c)
        out[static_cast<std::size_t>(c)] =
            one_replicate(scheme, model, k_max, seed, first + c, frontier, weights);
    return out;
}

CampaignResult run_campaign(const ScoringScheme& scheme, const TrialModel& model,
                            const UngappedAnalytics& ungapped,
                            const CampaignConfig& config) {
    check_epoch_pair(config.k, config.k_prime);
    if (config.budget.replicates.has_value() == config.budget.seconds.has_value())
        throw config_error("exactly one budget kind (replicates or seconds) required");
    if (config.horizon < 1) throw config_error("horizon must be at least 1");
    const int k_max = config.k_prime;
    CampaignResult result;
    auto t0 = std::chrono::steady_clock::now();
    if (config.budget.replicates.has_value()) {
        std::uint64_t n = *config.budget.replicates;
        if (n == 0) throw config_error("replicate budget must be positive");
        result.records = run_replicates(scheme, model, k_max, config.horizon,
                                        config.seed, config.first_replicate, n,
                                        config.threads);
    } else {
        double budget = *config.budget.seconds;
        if (!(budget > 0.0)) throw config_error("time budget must be positive");
        int nt = config.threads > 0 ? config.threads : 1;
#ifdef _OPENMP
        if (config.threads == 0) nt = omp_get_max_threads();
#endif
        std::uint64_t chunk = std::max<std::uint64_t>(
            256, static_cast<std::uint64_t>(nt) * 64);
        std::uint64_t next = 0;
        while (true) {
            double elapsed =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
            if (elapsed >= budget) break;
            auto batch = run_replicates(scheme, model, k_max, config.horizon,
                                        config.seed, config.first_replicate + next,
                                        chunk, config.threads);
            next += chunk;
            result.records.insert(result.records.end(),
                                  std::make_move_iterator(batch.begin()),
                                  std::make_move_iterator(batch.end()));
        }
    }
    result.replicates = result.records.size();
    if (result.replicates == 0) throw compute_error("campaign produced no records");
    double sum_n = 0.0;
    std::uint64_t usable = 0;
    for (const auto& rec : result.records) {
        if (rec.censored) {
            ++result.censored;
        } else {
            ++usable;
            sum_n += rec.stop_n;
        }
    }
    double censored_fraction =
        static_cast<double>(result.censored) / static_cast<double>(result.replicates);
    if (censored_fraction > config.max_censored_fraction)
        throw compute_error(
            "censored fraction " + std::to_string(censored_fraction) +
            " exceeds the allowed " + std::to_string(config.max_censored_fraction) +
            " at horizon " + std::to_string(config.horizon) +
            "; raise the horizon or rebalance the trial chain");
    result.mean_stop_length = usable > 0 ? sum_n / static_cast<double>(usable) : 0.0;
    result.anchor = ungapped.lambda_star;
    result.lambda_hat =
        solve_lambda(result.records, config.k, config.k_prime, result.anchor,
                     config.mode);
    auto dispersion = estimate_variance(result.records, config.k, config.k_prime,
                                        result.lambda_hat, config.mode);
    result.variance = dispersion.variance;
    result.stderr_ = dispersion.stderr_;
    result.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

}  // namespace gumbel
