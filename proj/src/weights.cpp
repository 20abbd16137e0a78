#include "gumbel/weights.hpp"

#include <cmath>

#include "gumbel/errors.hpp"

namespace gumbel {

WeightFrontier::WeightFrontier(const ScoringScheme& scheme, const TrialModel& model,
                               int n_max)
    : scheme_(&scheme), model_(&model), n_max_(n_max) {
    if (n_max < 1) throw config_error("weight frontier capacity must be at least 1");
    const int n = scheme.alphabet.size();
    if (model.alphabet_size() != n)
        throw config_error("trial chain and scheme alphabets differ");
    rdot_a_.assign(static_cast<std::size_t>(n), 0.0);
    rdot_b_.assign(static_cast<std::size_t>(n), 0.0);
    rcell_.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (int a = 0; a < n; ++a) {
        double fa = scheme.freq_a[static_cast<std::size_t>(a)];
        if (!(fa > 0.0)) throw config_error("zero background frequency: weights undefined");
        for (int b = 0; b < n; ++b) {
            double fb = scheme.freq_b[static_cast<std::size_t>(b)];
            if (!(fb > 0.0))
                throw config_error("zero background frequency: weights undefined");
            double qv = model.q[static_cast<std::size_t>(a) * static_cast<std::size_t>(n) +
                                static_cast<std::size_t>(b)];
            rcell_[static_cast<std::size_t>(a) * static_cast<std::size_t>(n) +
                   static_cast<std::size_t>(b)] = qv / (fa * fb);
            rdot_a_[static_cast<std::size_t>(a)] += qv / fa;
            rdot_b_[static_cast<std::size_t>(b)] += qv / fb;
        }
    }
    std::size_t cap = static_cast<std::size_t>(n_max) + 1;
    for (auto* v : {&col_ws_, &col_wi_, &col_wd_, &row_ws_, &row_wi_, &row_wd_,
                    &pcol_ws_, &pcol_wi_, &pcol_wd_, &prow_ws_, &prow_wi_, &prow_wd_})
        v->assign(cap, 0.0);
    seq_a_.reserve(cap);
    seq_b_.reserve(cap);
    col_ws_[0] = row_ws_[0] = 1.0;  // the empty path sits at (0,0) in atom S
}

void WeightFrontier::reset() {
    n_ = 0;
    scale_exp_ = 0;
    seq_a_.clear();
    seq_b_.clear();
    col_ws_[0] = row_ws_[0] = 1.0;
    col_wi_[0] = col_wd_[0] = row_wi_[0] = row_wd_[0] = 0.0;
}

double WeightFrontier::r_row(int m) const {
    return rdot_a_[static_cast<std::size_t>(seq_a_[static_cast<std::size_t>(m - 1)])];
}

double WeightFrontier::r_col(int m) const {
    return rdot_b_[static_cast<std::size_t>(seq_b_[static_cast<std::size_t>(m - 1)])];
}

void WeightFrontier::extend(char a, char b) {
    extend_idx(scheme_->alphabet.index_of(a), scheme_->alphabet.index_of(b));
}

void WeightFrontier::extend_idx(int a, int b) {
    if (n_ >= n_max_) throw compute_error("weight frontier capacity exceeded");
    const int n = n_ + 1;
    const int na = scheme_->alphabet.size();
    seq_a_.push_back(a);
    seq_b_.push_back(b);
    col_ws_.swap(pcol_ws_);
    col_wi_.swap(pcol_wi_);
    col_wd_.swap(pcol_wd_);
    row_ws_.swap(prow_ws_);
    row_wi_.swap(prow_wi_);
    row_wd_.swap(prow_wd_);
    const auto& t = model_->t;
    const double t_ss = t[0][0], t_si = t[0][1], t_sd = t[0][2];
    const double t_is = t[1][0], t_ii = t[1][1], t_id = t[1][2];
    const double t_ds = t[2][0], t_di = t[2][1], t_dd = t[2][2];
    auto rc = [&](int ra, int rb) {
        return rcell_[static_cast<std::size_t>(ra) * static_cast<std::size_t>(na) +
                      static_cast<std::size_t>(rb)];
    };

    // Column cells (i, n), i = 0..n-1. The i = 0 boundary follows the same
    // recursion with the absent diagonal and vertical neighbors equal to 0.
    col_ws_[0] = 0.0;
    col_wi_[0] = t_si * pcol_ws_[0] + t_ii * pcol_wi_[0] + t_di * pcol_wd_[0];
    col_wd_[0] = 0.0;
    for (int i = 1; i < n; ++i) {
        col_ws_[i] = rc(seq_a_[static_cast<std::size_t>(i - 1)], b) *
                     (t_ss * pcol_ws_[i - 1] + t_is * pcol_wi_[i - 1] +
                      t_ds * pcol_wd_[i - 1]);
        col_wi_[i] = t_si * pcol_ws_[i] + t_ii * pcol_wi_[i] + t_di * pcol_wd_[i];
        col_wd_[i] = t_sd * col_ws_[i - 1] + t_id * col_wi_[i - 1] + t_dd * col_wd_[i - 1];
    }

    // Row cells (n, j), j = 0..n-1.
    row_ws_[0] = 0.0;
    row_wi_[0] = 0.0;
    row_wd_[0] = t_sd * prow_ws_[0] + t_id * prow_wi_[0] + t_dd * prow_wd_[0];
    for (int j = 1; j < n; ++j) {
        row_ws_[j] = rc(a, seq_b_[static_cast<std::size_t>(j - 1)]) *
                     (t_ss * prow_ws_[j - 1] + t_is * prow_wi_[j - 1] +
                      t_ds * prow_wd_[j - 1]);
        row_wi_[j] = t_si * row_ws_[j - 1] + t_ii * row_wi_[j - 1] + t_di * row_wd_[j - 1];
        row_wd_[j] = t_sd * prow_ws_[j] + t_id * prow_wi_[j] + t_dd * prow_wd_[j];
    }

    // Corner (n, n), shared by both edges.
    {
        double cs = rc(a, b) * (t_ss * pcol_ws_[n - 1] + t_is * pcol_wi_[n - 1] +
                                t_ds * pcol_wd_[n - 1]);
        double ci = t_si * row_ws_[n - 1] + t_ii * row_wi_[n - 1] + t_di * row_wd_[n - 1];
        double cd = t_sd * col_ws_[n - 1] + t_id * col_wi_[n - 1] + t_dd * col_wd_[n - 1];
        col_ws_[n] = row_ws_[n] = cs;
        col_wi_[n] = row_wi_[n] = ci;
        col_wd_[n] = row_wd_[n] = cd;
    }
    n_ = n;
    maybe_rescale();
}

void WeightFrontier::maybe_rescale() {
    double m = 0.0;
    for (int i = 0; i <= n_; ++i) {
        m = std::max(m, std::abs(col_ws_[i]));
        m = std::max(m, std::abs(col_wi_[i]));
        m = std::max(m, std::abs(col_wd_[i]));
        m = std::max(m, std::abs(row_ws_[i]));
        m = std::max(m, std::abs(row_wi_[i]));
        m = std::max(m, std::abs(row_wd_[i]));
    }
    if (m == 0.0) return;
    if (m < 1e150 && m > 1e-150) return;
    int k = std::ilogb(m);
    for (auto* v : {&col_ws_, &col_wi_, &col_wd_, &row_ws_, &row_wi_, &row_wd_})
        for (int i = 0; i <= n_; ++i) (*v)[static_cast<std::size_t>(i)] =
            std::ldexp((*v)[static_cast<std::size_t>(i)], -k);
    scale_exp_ += k;
}

TailSums tail_sums_row(const WeightFrontier& wf) {
    const int n = wf.n();
    const auto& t = wf.model().t;
    const double t_ss = t[0][0], t_si = t[0][1], t_sd = t[0][2];
    const double t_is = t[1][0], t_ii = t[1][1], t_id = t[1][2];
    const double t_ds = t[2][0], t_di = t[2][1], t_dd = t[2][2];
    if (!(t_ii < 1.0))
        throw compute_error("insertion-run tail does not converge (t_II >= 1)");
    double geo_i = 1.0 / (1.0 - t_ii);
    TailSums out;
    out.S.assign(static_cast<std::size_t>(n) + 1, 0.0);
    out.I.assign(static_cast<std::size_t>(n) + 1, 0.0);
    out.D.assign(static_cast<std::size_t>(n) + 1, 0.0);
    // Row 0: only pure insertion runs reach (0, j >= n).
    out.I[0] = geo_i * wf.col_WI()[0];
    for (int i = 1; i <= n; ++i) {
        out.S[i] = wf.r_row(i) * (t_ss * out.S[i - 1] + t_is * out.I[i - 1] +
                                  t_ds * out.D[i - 1]) +
                   wf.col_WS()[i];
        out.D[i] = t_sd * out.S[i - 1] + t_id * out.I[i - 1] + t_dd * out.D[i - 1];
        out.I[i] = geo_i * (t_si * out.S[i] + t_di * out.D[i] + wf.col_WI()[i]);
    }
    return out;
}

TailSums tail_sums_col(const WeightFrontier& wf) {
    const int n = wf.n();
    const auto& t = wf.model().t;
    const double t_ss = t[0][0], t_si = t[0][1], t_sd = t[0][2];
    const double t_is = t[1][0], t_ii = t[1][1], t_id = t[1][2];
    const double t_ds = t[2][0], t_di = t[2][1], t_dd = t[2][2];
    if (!(t_dd < 1.0))
        throw compute_error("deletion-run tail does not converge (t_DD >= 1)");
    double geo_d = 1.0 / (1.0 - t_dd);
    TailSums out;
    out.S.assign(static_cast<std::size_t>(n) + 1, 0.0);
    out.I.assign(static_cast<std::size_t>(n) + 1, 0.0);
    out.D.assign(static_cast<std::size_t>(n) + 1, 0.0);
    // Column 0: only pure deletion runs reach (i >= n, 0).
    out.D[0] = geo_d * wf.row_WD()[0];
    for (int j = 1; j <= n; ++j) {
        out.S[j] = wf.r_col(j) * (t_ss * out.S[j - 1] + t_ds * out.D[j - 1] +
                                  t_is * out.I[j - 1]) +
                   wf.row_WS()[j];
        out.I[j] = t_si * out.S[j - 1] + t_di * out.D[j - 1] + t_ii * out.I[j - 1];
        out.D[j] = geo_d * (t_sd * out.S[j] + t_id * out.I[j] + wf.row_WD()[j]);
    }
    return out;
}

EpochWeight epoch_weight(const WeightFrontier& wf, int k) {
    const int n = wf.n();
    if (n < 1) throw compute_error("weight requested before any square was extended");
    TailSums u = tail_sums_row(wf);
    TailSums v = tail_sums_col(wf);
    double corner = wf.col_WS()[n];
    double scaled =
        -corner + u.S[static_cast<std::size_t>(n)] + u.D[static_cast<std::size_t>(n)] +
        v.S[static_cast<std::size_t>(n)] + v.I[static_cast<std::size_t>(n)];
    double inv_w = std::ldexp(scaled, wf.scale_exp());
    if (!(inv_w > 0.0) || !std::isfinite(inv_w))
        throw compute_error("reciprocal weight is not positive and finite: "
                            "internal inconsistency at square " + std::to_string(n));
    EpochWeight out;
    out.k = k;
    out.n = n;
    out.inv_w = inv_w;
    out.w = 1.0 / inv_w;
    return out;
}

}  // namespace gumbel
