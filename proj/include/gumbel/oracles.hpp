#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gumbel/estimator.hpp"

namespace gumbel {

// ---------- direct Monte Carlo over background letters ----------

// Samples letter pairs i.i.d. from the background frequencies, extends the
// alignment square by square, and records ladder epochs up to k_max or the
// horizon. Unit weights: this is the slow reference the importance-sampled
// campaign must agree with.
struct CrudeResult {
    std::vector<SampleRecord> records;
    std::vector<double> fraction_reached;  // index k-1: share with >= k epochs
    std::vector<double> fraction_se;       // binomial standard errors
    std::uint64_t replicates = 0;
    int horizon = 0;
};

CrudeResult crude_mc_ladder(const ScoringScheme& scheme, int k_max, int horizon,
                            std::uint64_t replicates, std::uint64_t seed,
                            int threads);

// ---------- exhaustive enumeration of trial-chain mass ----------

// Caps keeping exhaustive enumeration honest and affordable; instances
// beyond them are refused. `span` is a floor: the engines widen it until the
// gap-run tail beyond the window is below 1e-16 of the total, so the killed
// remainder stays far under comparison tolerances. The depth-first floor is
// relative to the mass already absorbed (letter-prefix probability factors
// cancel between a branch and the total, so an absolute floor would misprune
// low-probability prefixes).
struct EnumLimits {
    int max_alphabet = 2;
    int max_n = 5;
    int span = 80;            // minimum window past the square
    double kill_eps = 1e-18;  // branch floor relative to absorbed mass
};

// Mass of trial paths that emit exactly the letter prefixes of (A, B) and
// arrive at lattice point (i, j) in the given atom (0 = S, 1 = I, 2 = D).
// Exact recursive descent over the bounded rectangle.
double enum_cell_mass(const ScoringScheme& scheme, const TrialModel& model,
                      const std::string& seq_a, const std::string& seq_b, int atom,
                      int i, int j, const EnumLimits& limits = {});

// Mass of trial paths whose square-completion time hits N = |A| = |B| with the
// observed letters on [1, N]; letters beyond the square are marginalized.
// Two independent engines: depth-first descent and an aggregated synchronous
// wavefront. `killed` (optional) receives the truncated mass.
double enum_stop_mass_dfs(const ScoringScheme& scheme, const TrialModel& model,
                          const std::string& seq_a, const std::string& seq_b,
                          double* killed = nullptr, const EnumLimits& limits = {});
double enum_stop_mass_bfs(const ScoringScheme& scheme, const TrialModel& model,
                          const std::string& seq_a, const std::string& seq_b,
                          double* killed = nullptr, const EnumLimits& limits = {});

// Deterministic random instance small enough for the enumeration engines:
// 2-letter alphabet, match/mismatch scores with negative mean, real-valued
// gap costs, a valid tilted trial model (sometimes with I<->D switching
// enabled), and an equal-length sequence pair of 1..max_n letters.
struct SmallInstance {
    ScoringScheme scheme;
    TrialModel model;
    std::string seq_a, seq_b;
};

SmallInstance random_small_instance(std::uint64_t seed, std::uint64_t index,
                                    int max_n = 5);

// ---------- literal strip sums for the tail closures ----------

// Rebuilds the weight rectangle from scratch (no shared code with
// WeightFrontier) and sums W^T over `terms` columns j = N..N+terms at every
// row i (row variant), or the transpose (col variant).
struct StripSums {
    std::vector<double> S, I, D;  // index 0..N
};

StripSums strip_tail_sums_row(const ScoringScheme& scheme, const TrialModel& model,
                              const std::string& seq_a, const std::string& seq_b,
                              int terms);
StripSums strip_tail_sums_col(const ScoringScheme& scheme, const TrialModel& model,
                              const std::string& seq_a, const std::string& seq_b,
                              int terms);

// ---------- finite Markov additive chain with exact ladder algebra ----------

// Phase process with per-transition integer increments: a small chain whose
// ladder-epoch transform is computable by linear algebra, giving exact
// reference values for the whole estimation pipeline.
struct IncrementDist {
    std::vector<int> support;
    std::vector<double> probs;
    CumTable table;
};

struct FiniteMap {
    int n = 0;
    std::vector<double> P;            // n*n transition matrix
    std::vector<IncrementDist> inc;   // n*n increment laws
    std::vector<double> pi;           // stationary distribution
    double stationary_drift = 0.0;    // E_pi of one increment, must be < 0
    std::vector<CumTable> row_table;  // per-phase transition samplers

    const IncrementDist& inc_at(int i, int j) const {
        return inc[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                   static_cast<std::size_t>(j)];
    }
};

// Loads {"transitions": [[...]], "increments": [[{"support": [...],
// "probs": [...]}]]} and validates: stochastic rows, unit increment laws,
// integer support, a unique strictly positive stationary distribution,
// negative stationary drift, and some possible ascent.
FiniteMap load_finite_map(std::istream& in);
FiniteMap load_finite_map_file(const std::string& path);

// Ladder-epoch transform at exponent theta: entry (i, j) is the expected
// e^{theta * overshoot} over first strict ascents that land in phase j,
// starting from phase i. Computed by absorbing propagation over levels,
// truncated at depth tails below 1e-14 (depth doubles until stable), with the
// dominant eigenvalue from power iteration to 1e-12.
struct LadderTransform {
    int n = 0;
    std::vector<double> L;  // n*n
    double rho = 0.0;
    int depth_used = 0;
};

LadderTransform map_ladder_transform(const FiniteMap& map, double theta);

// Root of rho(theta) = 1 to 1e-10: the chain's exact decay exponent.
double map_lambda(const FiniteMap& map);

// Exact k-th epoch moment: e_{start} L_theta^k 1 = expected
// e^{theta * T_{beta(k)}} restricted to reaching epoch k.
double map_epoch_moment(const FiniteMap& map, double theta, int k, int start_phase);

// Simulates the chain's ladder directly (unit weights, integer scores),
// stopping at k_max epochs or after `step_horizon` steps.
std::vector<SampleRecord> map_simulate(const FiniteMap& map, int k_max,
                                       int step_horizon, std::uint64_t replicates,
                                       std::uint64_t seed, int threads,
                                       int start_phase = 0);

// End-to-end pipeline check: simulate, estimate between epochs k and k_prime,
// and report against the exact exponent.
struct MapCheck {
    double lambda_ref = 0.0;
    double lambda_hat = 0.0;
    double stderr_ = 0.0;
    std::uint64_t replicates = 0;
};

MapCheck map_estimator_check(const FiniteMap& map, int k, int k_prime,
                             std::uint64_t replicates, std::uint64_t seed,
                             int threads);

}  // namespace gumbel
