#include "gumbel/align.hpp"

#include <algorithm>

#include "gumbel/errors.hpp"

namespace gumbel {

namespace {
inline double max3(double x, double y, double z) {
    return std::max(x, std::max(y, z));
}
}  // namespace

AlignmentFrontier::AlignmentFrontier(const ScoringScheme& scheme, int n_max)
    : scheme_(&scheme), n_max_(n_max) {
    if (n_max < 1) throw config_error("frontier capacity must be at least 1");
    bound_ = scheme.gap_open + scheme.gap_extend * n_max +
             static_cast<double>(n_max) * scheme.max_abs_score();
    open_extend_ = scheme.gap_open + scheme.gap_extend;
    std::size_t cap = static_cast<std::size_t>(n_max) + 1;
    for (auto* v : {&col_s_, &col_i_, &col_d_, &row_s_, &row_i_, &row_d_, &pcol_s_,
                    &pcol_i_, &pcol_d_, &prow_s_, &prow_i_, &prow_d_})
        v->assign(cap, ninf());
    seq_a_.reserve(cap);
    seq_b_.reserve(cap);
    col_s_[0] = row_s_[0] = 0.0;  // square 0 is the single cell (0,0)
    m_trace_.reserve(cap);
    m_trace_.push_back(0.0);
}

void AlignmentFrontier::reset() {
    n_ = 0;
    seq_a_.clear();
    seq_b_.clear();
    double ninfv = ninf();
    col_s_[0] = row_s_[0] = 0.0;
    col_i_[0] = col_d_[0] = row_i_[0] = row_d_[0] = ninfv;
    m_trace_.clear();
    m_trace_.push_back(0.0);
}

double AlignmentFrontier::extend(char a, char b) {
    return extend_idx(scheme_->alphabet.index_of(a), scheme_->alphabet.index_of(b));
}

double AlignmentFrontier::extend_idx(int a, int b) {
    if (n_ >= n_max_) throw compute_error("frontier capacity exceeded");
    const int n = n_ + 1;
    seq_a_.push_back(a);
    seq_b_.push_back(b);
    col_s_.swap(pcol_s_);
    col_i_.swap(pcol_i_);
    col_d_.swap(pcol_d_);
    row_s_.swap(prow_s_);
    row_i_.swap(prow_i_);
    row_d_.swap(prow_d_);
    const double ninfv = ninf();
    const double ext = scheme_->gap_extend;

    // Column cells (i, n), i = 0..n-1; cell (i, n-1) lives in the previous
    // column for i <= n-1 and previous corner values sit at index n-1.
    col_s_[0] = ninfv;
    col_i_[0] = -(scheme_->gap_open + ext * n);
    col_d_[0] = ninfv;
    for (int i = 1; i < n; ++i) {
        double diag = max3(pcol_s_[i - 1], pcol_i_[i - 1], pcol_d_[i - 1]);
        col_s_[i] = diag + scheme_->score(seq_a_[static_cast<std::size_t>(i - 1)], b);
        col_i_[i] = max3(pcol_s_[i] - open_extend_, pcol_i_[i] - ext,
                         pcol_d_[i] - open_extend_);
        col_d_[i] = std::max(col_s_[i - 1] - open_extend_, col_d_[i - 1] - ext);
    }

    // Row cells (n, j), j = 0..n-1.
    row_s_[0] = ninfv;
    row_i_[0] = ninfv;
    row_d_[0] = -(scheme_->gap_open + ext * n);
    for (int j = 1; j < n; ++j) {
        double diag = max3(prow_s_[j - 1], prow_i_[j - 1], prow_d_[j - 1]);
        row_s_[j] = diag + scheme_->score(a, seq_b_[static_cast<std::size_t>(j - 1)]);
        row_i_[j] = max3(row_s_[j - 1] - open_extend_, row_i_[j - 1] - ext,
                         row_d_[j - 1] - open_extend_);
        row_d_[j] = std::max(prow_s_[j] - open_extend_, prow_d_[j] - ext);
    }

    // Corner (n, n), shared by both edges.
    {
        double diag = max3(pcol_s_[n - 1], pcol_i_[n - 1], pcol_d_[n - 1]);
        double cs = diag + scheme_->score(a, b);
        double ci = max3(row_s_[n - 1] - open_extend_, row_i_[n - 1] - ext,
                         row_d_[n - 1] - open_extend_);
        double cd = std::max(col_s_[n - 1] - open_extend_, col_d_[n - 1] - ext);
        col_s_[n] = row_s_[n] = cs;
        col_i_[n] = row_i_[n] = ci;
        col_d_[n] = row_d_[n] = cd;
    }

    double m = ninfv;
    for (int i = 0; i <= n; ++i) m = std::max(m, max3(col_s_[i], col_i_[i], col_d_[i]));
    for (int j = 0; j < n; ++j) m = std::max(m, max3(row_s_[j], row_i_[j], row_d_[j]));
    n_ = n;
    m_trace_.push_back(m);
    return m;
}

NaiveDp naive_dp(const std::string& seq_a, const std::string& seq_b,
                 const ScoringScheme& scheme) {
    NaiveDp dp;
    dp.len_a = static_cast<int>(seq_a.size());
    dp.len_b = static_cast<int>(seq_b.size());
    int n_ref = std::max(std::max(dp.len_a, dp.len_b), 1);
    dp.bound = scheme.gap_open + scheme.gap_extend * n_ref +
               static_cast<double>(n_ref) * scheme.max_abs_score();
    const double ninfv = -4.0 * dp.bound;
    const double ext = scheme.gap_extend;
    const double open_extend = scheme.gap_open + ext;
    std::size_t total = static_cast<std::size_t>(dp.len_a + 1) *
                        static_cast<std::size_t>(dp.len_b + 1);
    dp.S.assign(total, ninfv);
    dp.I.assign(total, ninfv);
    dp.D.assign(total, ninfv);
    dp.S[dp.idx(0, 0)] = 0.0;
    for (int j = 1; j <= dp.len_b; ++j)
        dp.I[dp.idx(0, j)] = -(scheme.gap_open + ext * j);
    for (int i = 1; i <= dp.len_a; ++i)
        dp.D[dp.idx(i, 0)] = -(scheme.gap_open + ext * i);
    for (int i = 1; i <= dp.len_a; ++i) {
        int ai = scheme.alphabet.index_of(seq_a[static_cast<std::size_t>(i - 1)]);
        for (int j = 1; j <= dp.len_b; ++j) {
            int bj = scheme.alphabet.index_of(seq_b[static_cast<std::size_t>(j - 1)]);
            double diag = max3(dp.S[dp.idx(i - 1, j - 1)], dp.I[dp.idx(i - 1, j - 1)],
                               dp.D[dp.idx(i - 1, j - 1)]);
            dp.S[dp.idx(i, j)] = diag + scheme.score(ai, bj);
            dp.I[dp.idx(i, j)] =
                max3(dp.S[dp.idx(i, j - 1)] - open_extend,
                     dp.I[dp.idx(i, j - 1)] - ext, dp.D[dp.idx(i, j - 1)] - open_extend);
            dp.D[dp.idx(i, j)] = std::max(dp.S[dp.idx(i - 1, j)] - open_extend,
                                          dp.D[dp.idx(i - 1, j)] - ext);
        }
    }
    return dp;
}

double NaiveDp::edge_max(int n) const {
    double m = -4.0 * bound;
    for (int i = 0; i <= n; ++i) m = std::max(m, g(i, n));
    for (int j = 0; j <= n; ++j) m = std::max(m, g(n, j));
    return m;
}

}  // namespace gumbel
