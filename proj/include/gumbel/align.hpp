#pragma once

#include <string>
#include <vector>

#include "gumbel/scoring.hpp"

namespace gumbel {

// Global affine-gap alignment on the growing square [0,n] x [0,n], extended
// one square at a time. Three layers: S ends in a substitution, I ends in a
// gapped letter of B (B ahead), D ends in a gapped letter of A. Only the two
// most recent square edges are kept, O(n) memory. G = max(S, I, D) is the
// score of the best path of any ending; the per-square statistic M_n is the
// maximum of G over the new square's edge cells (i, n) and (n, j).
class AlignmentFrontier {
  public:
    AlignmentFrontier(const ScoringScheme& scheme, int n_max);

    // Extends by the next letter pair (A_n, B_n); returns M_n.
    double extend(char a, char b);
    double extend_idx(int a, int b);

    // Rewinds to square 0 without releasing storage, for replicate reuse.
    void reset();

    int n() const { return n_; }
    int capacity() const { return n_max_; }
    const std::vector<double>& m_trace() const { return m_trace_; }

    // Edge cells of the current square: col arrays hold (i, n) for i = 0..n,
    // row arrays hold (n, j) for j = 0..n. Exposed for oracles and replay.
    const double* col_S() const { return col_s_.data(); }
    const double* col_I() const { return col_i_.data(); }
    const double* col_D() const { return col_d_.data(); }
    const double* row_S() const { return row_s_.data(); }
    const double* row_I() const { return row_i_.data(); }
    const double* row_D() const { return row_d_.data(); }

    bool is_ninf(double v) const { return v < -2.5 * bound_; }
    double ninf() const { return -4.0 * bound_; }

  private:
    const ScoringScheme* scheme_;
    int n_max_;
    int n_ = 0;
    double bound_;
    double open_extend_;  // gap_open + gap_extend
    std::vector<int> seq_a_, seq_b_;
    std::vector<double> col_s_, col_i_, col_d_, row_s_, row_i_, row_d_;
    std::vector<double> pcol_s_, pcol_i_, pcol_d_, prow_s_, prow_i_, prow_d_;
    std::vector<double> m_trace_;
};

// Strictly ascending record of the per-square maxima: square n is an epoch
// when M_n exceeds every earlier M (with M_0 = 0, so the first epoch's score
// is positive).
struct LadderTrace {
    std::vector<int> epochs;
    std::vector<double> scores;

    // Returns true when (n, m) sets a new record and is recorded as an epoch.
    bool update(int n, double m) {
        double last = scores.empty() ? 0.0 : scores.back();
        if (m > last) {
            epochs.push_back(n);
            scores.push_back(m);
            return true;
        }
        return false;
    }

    int count() const { return static_cast<int>(epochs.size()); }
};

// Full-rectangle reference: all three layers over [0,lenA] x [0,lenB], kept
// whole. Debug/validation only; the frontier above is the production path.
struct NaiveDp {
    int len_a = 0, len_b = 0;
    std::vector<double> S, I, D;  // (len_a+1) x (len_b+1), row-major
    double bound = 0.0;

    double s(int i, int j) const { return S[idx(i, j)]; }
    double ins(int i, int j) const { return I[idx(i, j)]; }
    double del(int i, int j) const { return D[idx(i, j)]; }
    double g(int i, int j) const {
        return std::max(S[idx(i, j)], std::max(I[idx(i, j)], D[idx(i, j)]));
    }
    bool is_ninf(double v) const { return v < -2.5 * bound; }
    // Edge maximum of the square [0,n]^2 (requires n <= min(len_a, len_b)).
    double edge_max(int n) const;

    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(len_b + 1) +
               static_cast<std::size_t>(j);
    }
};

NaiveDp naive_dp(const std::string& seq_a, const std::string& seq_b,
                 const ScoringScheme& scheme);

}  // namespace gumbel
