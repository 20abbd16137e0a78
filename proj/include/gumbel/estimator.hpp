#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gumbel/trial.hpp"
#include "gumbel/weights.hpp"

namespace gumbel {

// One replicate's contribution to the estimator: the strictly ascending
// ladder scores, one importance weight per epoch (all 1 for direct Monte
// Carlo), and how far the ladder got. Censored replicates carry no scores.
struct SampleRecord {
    std::uint64_t replicate = 0;
    int epochs_reached = 0;
    int stop_n = 0;
    bool censored = false;
    std::vector<double> scores;   // ladder scores, epochs 1..epochs_reached
    std::vector<double> weights;  // matching per-epoch weights
};

// Which weight multiplies the lower-epoch term: its own epoch's weight (the
// default), or the higher epoch's weight for both terms.
enum class WeightMode { kPerEpoch, kFinalEpoch };

// Difference of weighted exponentials h(theta) = w_kp e^{theta m_kp} -
// w_k e^{theta m_k} for one record (terms drop out when the ladder never got
// that far), plus its theta-derivative.
struct HTerms {
    double h = 0.0;
    double dh = 0.0;
};

HTerms h_eval(const SampleRecord& rec, int k, int k_prime, double theta,
              WeightMode mode = WeightMode::kPerEpoch);

// Root of g(theta) = sum_records h(theta): the decay exponent that balances
// the weighted mass at epoch k_prime against epoch k. The bracket is scanned
// geometrically over [anchor/64, 4*anchor] (one retry doubles the upper end),
// then polished to 1e-10. Exponentials are shifted by the running maximum
// exponent, so large scores cannot overflow. Deterministic in record order.
double solve_lambda(const std::vector<SampleRecord>& records, int k, int k_prime,
                    double anchor, WeightMode mode = WeightMode::kPerEpoch);

// Delta-method dispersion of the estimate at the root: mean of h^2 over the
// squared mean of h', with the same exponent shifting (the shift cancels in
// the ratio). stderr_ = sqrt(variance / r), r = non-censored record count.
struct VarianceEstimate {
    double variance = 0.0;
    double stderr_ = 0.0;
    std::uint64_t r = 0;
};

VarianceEstimate estimate_variance(const std::vector<SampleRecord>& records, int k,
                                   int k_prime, double lambda_hat,
                                   WeightMode mode = WeightMode::kPerEpoch);

// Tail probability of the score distribution: 1 - exp(-K m n e^{-lambda y}),
// computed with expm1 so tiny tails keep full precision.
double gumbel_pvalue(double lambda, double big_k, double m, double n, double y);

// Budget: exactly one of replicate count or wall-clock seconds.
struct CampaignBudget {
    std::optional<std::uint64_t> replicates;
    std::optional<double> seconds;
};

struct CampaignConfig {
    int k = 3;
    int k_prime = 4;
    CampaignBudget budget;
    std::uint64_t seed = 1;
    std::uint64_t first_replicate = 0;  // stream offset, used by batching
    int horizon = 10000;
    int threads = 0;  // 0 = OpenMP default
    WeightMode mode = WeightMode::kPerEpoch;
    double max_censored_fraction = 0.01;
};

struct CampaignResult {
    std::vector<SampleRecord> records;  // replicate-index order
    double lambda_hat = 0.0;
    double variance = 0.0;
    double stderr_ = 0.0;
    std::uint64_t replicates = 0;
    std::uint64_t censored = 0;
    double mean_stop_length = 0.0;
    double elapsed_seconds = 0.0;
    double anchor = 0.0;  // ungapped exponent used to seed the root search
};

// Samples `count` replicates with stream indices first..first+count-1 and
// computes per-epoch weights up to k_max ladder epochs. OpenMP-parallel over
// replicates; results depend only on (seed, index), never on thread count.
std::vector<SampleRecord> run_replicates(const ScoringScheme& scheme,
                                         const TrialModel& model, int k_max,
                                         int horizon, std::uint64_t seed,
                                         std::uint64_t first, std::uint64_t count,
                                         int threads);

// Single-threaded reference with the identical per-record math; kept for
// equivalence testing and benchmarking against the parallel path.
std::vector<SampleRecord> run_replicates_serial(const ScoringScheme& scheme,
                                                const TrialModel& model, int k_max,
                                                int horizon, std::uint64_t seed,
                                                std::uint64_t first,
                                                std::uint64_t count);

// Full campaign: dispatch replicates (by count, or in chunks until the time
// budget elapses — in-flight chunks finish), abort if the censored fraction
// exceeds the configured bound, then estimate lambda and its dispersion.
CampaignResult run_campaign(const ScoringScheme& scheme, const TrialModel& model,
                            const UngappedAnalytics& ungapped,
                            const CampaignConfig& config);

}  // namespace gumbel
