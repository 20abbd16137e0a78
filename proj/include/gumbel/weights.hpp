#pragma once

#include <vector>

#include "gumbel/scoring.hpp"
#include "gumbel/trial.hpp"

namespace gumbel {

// Weight-per-target-mass grids W^T_{i,j} = Q^T_{i,j} / (P_i P'_j), where
// Q^T_{i,j} is the chance the trial chain reaches lattice point (i,j) arriving
// in atom T, and P_i P'_j is the background probability of the letter prefix.
// Grown square by square in lockstep with the sampled letters, keeping the two
// most recent square edges. Linear three-term recursions with per-cell ratio
// r_{i,j} = q(A_i,B_j) / (fa(A_i) fb(B_j)); cells beyond the square use row or
// column marginal ratios. All entries share one power-of-two scaling exponent,
// renormalized whenever magnitudes leave [1e-150, 1e150], so rescaled and
// plain runs produce identical mantissas.
class WeightFrontier {
  public:
    WeightFrontier(const ScoringScheme& scheme, const TrialModel& model, int n_max);

    void extend(char a, char b);
    void extend_idx(int a, int b);
    void reset();

    int n() const { return n_; }
    int capacity() const { return n_max_; }
    int scale_exp() const { return scale_exp_; }

    // Edge cells of the current square, scaled by 2^-scale_exp: col arrays
    // hold (i, n) for i = 0..n, row arrays hold (n, j) for j = 0..n.
    const double* col_WS() const { return col_ws_.data(); }
    const double* col_WI() const { return col_wi_.data(); }
    const double* col_WD() const { return col_wd_.data(); }
    const double* row_WS() const { return row_ws_.data(); }
    const double* row_WI() const { return row_wi_.data(); }
    const double* row_WD() const { return row_wd_.data(); }

    // Row/column marginal ratios for the letters at 1-based position m.
    double r_row(int m) const;  // sum_b q(A_m, b) / fa(A_m)
    double r_col(int m) const;  // sum_a q(a, B_m) / fb(B_m)

    const TrialModel& model() const { return *model_; }

  private:
    void maybe_rescale();

    const ScoringScheme* scheme_;
    const TrialModel* model_;
    int n_max_;
    int n_ = 0;
    int scale_exp_ = 0;
    std::vector<int> seq_a_, seq_b_;
    std::vector<double> rdot_a_, rdot_b_;  // per-letter marginal ratios
    std::vector<double> rcell_;            // q(a,b)/(fa fb), row-major
    std::vector<double> col_ws_, col_wi_, col_wd_, row_ws_, row_wi_, row_wd_;
    std::vector<double> pcol_ws_, pcol_wi_, pcol_wd_, prow_ws_, prow_wi_, prow_wd_;
};

// Closed geometric sums over the half-row i, columns >= N (current square):
// S-, I-, D-atom masses of paths that run past the square boundary. Entry m
// of each vector is the partial sum at row m; the assembled total mass uses
// row N. Values share the frontier's scaling exponent.
struct TailSums {
    std::vector<double> S, I, D;
};

TailSums tail_sums_row(const WeightFrontier& wf);  // sums over (i, j >= N)
TailSums tail_sums_col(const WeightFrontier& wf);  // sums over (i >= N, j)

// Reciprocal importance weight at the current square N: total trial mass of
// all continuations consistent with the sampled letter prefix, divided by the
// background prefix probability. Combines the corner cell with the four
// boundary tail sums and unscales the result.
struct EpochWeight {
    int k = 0;       // ladder epoch index this weight belongs to
    int n = 0;       // square where the ladder stopped
    double inv_w = 0.0;
    double w = 0.0;
};

EpochWeight epoch_weight(const WeightFrontier& wf, int k);

}  // namespace gumbel
