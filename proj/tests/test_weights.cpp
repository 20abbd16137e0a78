#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "gumbel/errors.hpp"
#include "gumbel/oracles.hpp"
#include "gumbel/rng.hpp"
#include "gumbel/scoring.hpp"
#include "gumbel/trial.hpp"
#include "gumbel/weights.hpp"

using namespace gumbel;

namespace {

ScoringScheme unit_scheme() {
    Alphabet a("ACGT");
    std::vector<double> m(16, -1.0);
    for (int i = 0; i < 4; ++i) m[static_cast<std::size_t>(i) * 4 + static_cast<std::size_t>(i)] = 1.0;
    std::vector<double> f(4, 0.25);
    return make_scheme(a, m, 2.0, 1.0, f, f);
}

double rel(double a, double b) {
    double scale = std::max(std::abs(a), std::abs(b));
    if (scale < 1e-280) return 0.0;
    return std::abs(a - b) / scale;
}

double descale(const WeightFrontier& wf, double v) {
    return std::ldexp(v, wf.scale_exp());
}

}  // namespace

TEST_CASE("first square cells have closed forms") {
    ScoringScheme s = unit_scheme();
    UngappedAnalytics u = solve_lambda_star(s);
    TrialOverrides ov;
    ov.t_id = 0.05;
    ov.t_di = 0.04;
    TrialModel m = default_trial_model(s, u, ov);
    WeightFrontier wf(s, m, 4);
    wf.extend('A', 'A');

    const double r_match = (3.0 / 16.0) / (0.25 * 0.25);  // q / (fa fb) = 3
    const double t_ss = m.t[0][0], t_si = m.t[0][1], t_sd = m.t[0][2];
    const double t_id = m.t[1][2], t_di = m.t[2][1];

    // Cell (1,1) in the diagonal atom: one aligned pair straight from the
    // start. Cells (0,1)/(1,0): one gapped letter. Cell (1,1) in a gap atom:
    // a gapped letter in each direction, two orders.
    CHECK(rel(descale(wf, wf.col_WS()[1]), r_match * t_ss) < 1e-14);
    CHECK(rel(descale(wf, wf.col_WI()[0]), t_si) < 1e-14);
    CHECK(rel(descale(wf, wf.row_WD()[0]), t_sd) < 1e-14);
    CHECK(rel(descale(wf, wf.col_WI()[1]), t_sd * t_di) < 1e-14);
    CHECK(rel(descale(wf, wf.col_WD()[1]), t_si * t_id) < 1e-14);
    CHECK(descale(wf, wf.col_WS()[0]) == 0.0);  // diagonal atom needs i = j >= 1
    CHECK(descale(wf, wf.row_WS()[0]) == 0.0);
    CHECK(wf.n() == 1);
}

TEST_CASE("marginal ratios are exactly one on the unit scheme") {
    // The tilted pair emissions of the unit scheme have background marginals,
    // so every beyond-square column ratio collapses to 1.
    ScoringScheme s = unit_scheme();
    UngappedAnalytics u = solve_lambda_star(s);
    TrialModel m = default_trial_model(s, u);
    WeightFrontier wf(s, m, 4);
    wf.extend('A', 'C');
    wf.extend('G', 'G');
    for (int pos = 1; pos <= 2; ++pos) {
        CHECK(wf.r_row(pos) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(wf.r_col(pos) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("edge cells match exhaustive path enumeration") {
    for (std::uint64_t idx = 0; idx < 6; ++idx) {
        CAPTURE(idx);
        SmallInstance inst = random_small_instance(4242, idx, 4);
        const int n = static_cast<int>(inst.seq_a.size());
        WeightFrontier wf(inst.scheme, inst.model, n);
        std::vector<double> pa{1.0}, pb{1.0};
        for (int i = 1; i <= n; ++i) {
            pa.push_back(pa.back() *
                         inst.scheme.freq_a[static_cast<std::size_t>(
                             inst.scheme.alphabet.index_of(
                                 inst.seq_a[static_cast<std::size_t>(i - 1)]))]);
            pb.push_back(pb.back() *
                         inst.scheme.freq_b[static_cast<std::size_t>(
                             inst.scheme.alphabet.index_of(
                                 inst.seq_b[static_cast<std::size_t>(i - 1)]))]);
        }
        for (int m = 1; m <= n; ++m) {
            wf.extend(inst.seq_a[static_cast<std::size_t>(m - 1)],
                      inst.seq_b[static_cast<std::size_t>(m - 1)]);
            for (int i = 0; i <= m; ++i) {
                double ps = pa[static_cast<std::size_t>(i)] * pb[static_cast<std::size_t>(m)];
                CHECK(rel(descale(wf, wf.col_WS()[i]) * ps,
                          enum_cell_mass(inst.scheme, inst.model, inst.seq_a,
                                         inst.seq_b, TrialModel::kS, i, m)) < 1e-11);
                CHECK(rel(descale(wf, wf.col_WI()[i]) * ps,
                          enum_cell_mass(inst.scheme, inst.model, inst.seq_a,
                                         inst.seq_b, TrialModel::kI, i, m)) < 1e-11);
                CHECK(rel(descale(wf, wf.col_WD()[i]) * ps,
                          enum_cell_mass(inst.scheme, inst.model, inst.seq_a,
                                         inst.seq_b, TrialModel::kD, i, m)) < 1e-11);
            }
        }
    }
}

TEST_CASE("assembled reciprocal weight matches both enumeration engines") {
    for (std::uint64_t idx = 0; idx < 6; ++idx) {
        CAPTURE(idx);
        SmallInstance inst = random_small_instance(777, idx, 4);
        const int n = static_cast<int>(inst.seq_a.size());
        WeightFrontier wf(inst.scheme, inst.model, n);
        double pf = 1.0;
        for (int i = 0; i < n; ++i) {
            wf.extend(inst.seq_a[static_cast<std::size_t>(i)],
                      inst.seq_b[static_cast<std::size_t>(i)]);
            pf *= inst.scheme.freq_a[static_cast<std::size_t>(
                      inst.scheme.alphabet.index_of(inst.seq_a[static_cast<std::size_t>(i)]))] *
                  inst.scheme.freq_b[static_cast<std::size_t>(
                      inst.scheme.alphabet.index_of(inst.seq_b[static_cast<std::size_t>(i)]))];
        }
        EpochWeight ew = epoch_weight(wf, 1);
        CHECK(ew.n == n);
        CHECK(ew.k == 1);
        CHECK(ew.w * ew.inv_w == doctest::Approx(1.0).epsilon(1e-12));
        double dfs = enum_stop_mass_dfs(inst.scheme, inst.model, inst.seq_a, inst.seq_b);
        double bfs = enum_stop_mass_bfs(inst.scheme, inst.model, inst.seq_a, inst.seq_b);
        CHECK(rel(ew.inv_w, dfs / pf) < 1e-10);
        CHECK(rel(ew.inv_w, bfs / pf) < 1e-10);
        CHECK(rel(dfs, bfs) < 1e-11);
    }
}

TEST_CASE("tail closures match literal strip sums") {
    for (std::uint64_t idx = 0; idx < 6; ++idx) {
        CAPTURE(idx);
        SmallInstance inst = random_small_instance(31337, idx, 5);
        const int n = static_cast<int>(inst.seq_a.size());
        WeightFrontier wf(inst.scheme, inst.model, n);
        for (int i = 0; i < n; ++i)
            wf.extend(inst.seq_a[static_cast<std::size_t>(i)],
                      inst.seq_b[static_cast<std::size_t>(i)]);
        TailSums u = tail_sums_row(wf);
        TailSums v = tail_sums_col(wf);
        StripSums us = strip_tail_sums_row(inst.scheme, inst.model, inst.seq_a,
                                           inst.seq_b, 600);
        StripSums vs = strip_tail_sums_col(inst.scheme, inst.model, inst.seq_a,
                                           inst.seq_b, 600);
        for (int i = 0; i <= n; ++i) {
            CHECK(rel(descale(wf, u.S[static_cast<std::size_t>(i)]),
                      us.S[static_cast<std::size_t>(i)]) < 1e-11);
            CHECK(rel(descale(wf, u.I[static_cast<std::size_t>(i)]),
                      us.I[static_cast<std::size_t>(i)]) < 1e-11);
            CHECK(rel(descale(wf, u.D[static_cast<std::size_t>(i)]),
                      us.D[static_cast<std::size_t>(i)]) < 1e-11);
            CHECK(rel(descale(wf, v.S[static_cast<std::size_t>(i)]),
                      vs.S[static_cast<std::size_t>(i)]) < 1e-11);
            CHECK(rel(descale(wf, v.I[static_cast<std::size_t>(i)]),
                      vs.I[static_cast<std::size_t>(i)]) < 1e-11);
            CHECK(rel(descale(wf, v.D[static_cast<std::size_t>(i)]),
                      vs.D[static_cast<std::size_t>(i)]) < 1e-11);
        }
    }
}

TEST_CASE("rescaling keeps extreme magnitudes finite and faithful") {
    // A rare letter with a large self-score: its pair ratio is about 1/p^2,
    // so a 40-square all-'A' run crosses the rescale threshold while the
    // unscaled strip grid stays within double range as the reference.
    Alphabet ab("AB");
    std::vector<double> m{19.0, -1.0, -1.0, -1.0};
    std::vector<double> f{1e-3, 1.0 - 1e-3};
    ScoringScheme s = make_scheme(ab, m, 2.0, 1.0, f, f);
    UngappedAnalytics u = solve_lambda_star(s);
    TrialModel model = default_trial_model(s, u);
    const int n = 40;
    std::string a(n, 'A'), b(n, 'A');  // rare letters: huge ratios
    WeightFrontier wf(s, model, n);
    for (int i = 0; i < n; ++i) wf.extend('A', 'A');
    CHECK(wf.scale_exp() != 0);  // the stress actually triggered a rescale
    TailSums tails = tail_sums_row(wf);
    StripSums strip = strip_tail_sums_row(s, model, a, b, 400);
    for (int i = 0; i <= n; ++i) {
        double got = descale(wf, tails.S[static_cast<std::size_t>(i)]);
        double want = strip.S[static_cast<std::size_t>(i)];
        CHECK(std::isfinite(got));
        CHECK(rel(got, want) < 1e-10);
    }

    // Bit-identical replay, including the scaling exponent.
    WeightFrontier wf2(s, model, n);
    for (int i = 0; i < n; ++i) wf2.extend('A', 'A');
    CHECK(wf2.scale_exp() == wf.scale_exp());
    for (int i = 0; i <= n; ++i) {
        CHECK(wf2.col_WS()[i] == wf.col_WS()[i]);
        CHECK(wf2.row_WD()[i] == wf.row_WD()[i]);
    }
}

TEST_CASE("non-converging gap runs are rejected by the tail closures") {
    ScoringScheme s = unit_scheme();
    UngappedAnalytics u = solve_lambda_star(s);
    TrialModel m = default_trial_model(s, u);
    // Force an insertion run that never terminates; rows still sum to 1.
    m.t[TrialModel::kI][TrialModel::kI] = 1.0;
    m.t[TrialModel::kI][TrialModel::kS] = 0.0;
    m.t[TrialModel::kI][TrialModel::kD] = 0.0;
    m.build_tables();
    m.validate();
    WeightFrontier wf(s, m, 4);
    wf.extend('A', 'A');
    CHECK_THROWS_WITH_AS(tail_sums_row(wf), doctest::Contains("does not converge"),
                         compute_error);
}

TEST_CASE("weight frontier validates its construction and use") {
    ScoringScheme s = unit_scheme();
    UngappedAnalytics u = solve_lambda_star(s);
    TrialModel m = default_trial_model(s, u);
    CHECK_THROWS_AS(WeightFrontier(s, m, 0), config_error);

    WeightFrontier wf(s, m, 2);
    CHECK_THROWS_WITH_AS(epoch_weight(wf, 1), doctest::Contains("before any square"),
                         compute_error);
    wf.extend('A', 'A');
    wf.extend('C', 'C');
    CHECK_THROWS_AS(wf.extend('G', 'G'), compute_error);

    // Replay after reset is identical.
    WeightFrontier wr(s, m, 3);
    wr.extend('A', 'C');
    double before = descale(wr, wr.col_WS()[1]);
    wr.reset();
    CHECK(wr.n() == 0);
    wr.extend('A', 'C');
    CHECK(descale(wr, wr.col_WS()[1]) == before);

    // A chain built for a different alphabet size is rejected.
    Alphabet ab("AB");
    std::vector<double> m2{1.0, -2.0, -2.0, 1.0};
    std::vector<double> f2{0.5, 0.5};
    ScoringScheme s2 = make_scheme(ab, m2, 2.0, 1.0, f2, f2);
    UngappedAnalytics u2 = solve_lambda_star(s2);
    TrialModel mm = default_trial_model(s2, u2);
    CHECK_THROWS_WITH_AS(WeightFrontier(s, mm, 4), doctest::Contains("alphabets differ"),
                         config_error);
}
