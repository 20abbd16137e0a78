#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "gumbel/align.hpp"
#include "gumbel/errors.hpp"
#include "gumbel/rng.hpp"
#include "gumbel/scoring.hpp"

using namespace gumbel;

namespace {

ScoringScheme nuc_scheme(double gap_open, double gap_extend) {
    Alphabet a("ACGT");
    std::vector<double> m(16, -4.0);
    for (int i = 0; i < 4; ++i) m[static_cast<std::size_t>(i) * 4 + static_cast<std::size_t>(i)] = 5.0;
    std::vector<double> f(4, 0.25);
    return make_scheme(a, m, gap_open, gap_extend, f, f);
}

// Random integer-valued scheme: integer scores and gap costs keep every DP
// cell an exact integer, so the frontier and the full-rectangle reference
// must agree bit for bit.
ScoringScheme random_int_scheme(RngStream& rng) {
    Alphabet a("ACGT");
    std::vector<double> m(16);
    for (double& v : m) v = std::floor(rng.uniform() * 11.0) - 7.0;  // -7..3
    m[0] = 5.0;  // guarantee one positive score
    std::vector<double> f(4, 0.25);
    double gap_open = std::floor(rng.uniform() * 6.0) + 1.0;
    double gap_extend = std::floor(rng.uniform() * 3.0) + 1.0;
    return make_scheme(a, m, gap_open, gap_extend, f, f);
}

std::string random_letters(RngStream& rng, int n) {
    std::string s;
    for (int i = 0; i < n; ++i)
        s.push_back("ACGT"[static_cast<int>(rng.uniform() * 4.0)]);
    return s;
}

}  // namespace

TEST_CASE("worked ten-letter example reproduces every pinned value") {
    // TACTAGCGCA vs ACGGTAGAT, +5/-4, gap of g letters costs 3 + 2g.
    ScoringScheme s = nuc_scheme(3.0, 2.0);
    NaiveDp dp = naive_dp("TACTAGCGCA", "ACGGTAGAT", s);
    CHECK(dp.s(10, 8) == 9.0);
    CHECK(dp.g(10, 8) == 9.0);

    const std::vector<double> want{-4.0, 0.0, 5.0, 1.0, 3.0, 8.0, 13.0, 9.0, 6.0};
    LadderTrace trace;
    for (int n = 1; n <= 9; ++n) {
        CHECK(dp.edge_max(n) == want[static_cast<std::size_t>(n - 1)]);
        trace.update(n, dp.edge_max(n));
    }
    CHECK(trace.epochs == std::vector<int>{3, 6, 7});
    CHECK(trace.scores == std::vector<double>{5.0, 8.0, 13.0});

    // The square-by-square frontier sees the same nine edge maxima.
    AlignmentFrontier frontier(s, 16);
    const std::string a = "TACTAGCGC";  // pairs only: min(10, 9) squares
    const std::string b = "ACGGTAGAT";
    for (int n = 0; n < 9; ++n)
        frontier.extend(a[static_cast<std::size_t>(n)], b[static_cast<std::size_t>(n)]);
    std::vector<double> with_baseline{0.0};  // the trace starts at zero
    with_baseline.insert(with_baseline.end(), want.begin(), want.end());
    CHECK(frontier.m_trace() == with_baseline);
}

TEST_CASE("frontier edges equal the full-rectangle reference exactly") {
    RngStream rng(2024, 0);
    for (int trial = 0; trial < 8; ++trial) {
        ScoringScheme s = random_int_scheme(rng);
        const int n_max = 48;
        std::string a = random_letters(rng, n_max);
        std::string b = random_letters(rng, n_max);
        NaiveDp dp = naive_dp(a, b, s);
        AlignmentFrontier fr(s, n_max);
        for (int n = 1; n <= n_max; ++n) {
            double m = fr.extend(a[static_cast<std::size_t>(n - 1)],
                                 b[static_cast<std::size_t>(n - 1)]);
            CHECK(m == dp.edge_max(n));
            for (int i = 0; i <= n; ++i) {
                auto same = [&](double f, double v) {
                    if (fr.is_ninf(f)) {
                        CHECK(dp.is_ninf(v));
                    } else {
                        CHECK(f == v);
                    }
                };
                same(fr.col_S()[i], dp.s(i, n));
                same(fr.col_I()[i], dp.ins(i, n));
                same(fr.col_D()[i], dp.del(i, n));
                same(fr.row_S()[i], dp.s(n, i));
                same(fr.row_I()[i], dp.ins(n, i));
                same(fr.row_D()[i], dp.del(n, i));
            }
        }
    }
}

TEST_CASE("prohibitive gap costs reduce the frontier to the diagonal") {
    Alphabet al("ACGT");
    std::vector<double> m(16, -4.0);
    for (int i = 0; i < 4; ++i) m[static_cast<std::size_t>(i) * 4 + static_cast<std::size_t>(i)] = 5.0;
    std::vector<double> f(4, 0.25);
    ScoringScheme s = make_scheme(al, m, 1e6, 1.0, f, f);
    RngStream rng(7, 7);
    std::string a = random_letters(rng, 20);
    std::string b = random_letters(rng, 20);
    AlignmentFrontier fr(s, 20);
    double run = 0.0;
    for (int n = 1; n <= 20; ++n) {
        int ia = al.index_of(a[static_cast<std::size_t>(n - 1)]);
        int ib = al.index_of(b[static_cast<std::size_t>(n - 1)]);
        run += s.score(ia, ib);
        CHECK(fr.extend_idx(ia, ib) == run);
    }
}

TEST_CASE("ladder records strict ascents over a zero baseline") {
    LadderTrace t;
    CHECK_FALSE(t.update(1, -4.0));
    CHECK_FALSE(t.update(2, 0.0));  // must strictly exceed the baseline
    CHECK(t.update(3, 5.0));
    CHECK_FALSE(t.update(4, 5.0));  // ties are not ascents
    CHECK_FALSE(t.update(5, 3.0));
    CHECK(t.update(6, 8.0));
    CHECK(t.count() == 2);
    CHECK(t.epochs == std::vector<int>{3, 6});
    CHECK(t.scores == std::vector<double>{5.0, 8.0});
}

TEST_CASE("frontier reset replays identically") {
    ScoringScheme s = nuc_scheme(3.0, 2.0);
    AlignmentFrontier fr(s, 12);
    RngStream rng(1, 2);
    std::string a = random_letters(rng, 12);
    std::string b = random_letters(rng, 12);
    std::vector<double> first;
    for (int n = 0; n < 12; ++n)
        first.push_back(fr.extend(a[static_cast<std::size_t>(n)],
                                  b[static_cast<std::size_t>(n)]));
    CHECK(fr.n() == 12);
    fr.reset();
    CHECK(fr.n() == 0);
    std::vector<double> second;
    for (int n = 0; n < 12; ++n)
        second.push_back(fr.extend(a[static_cast<std::size_t>(n)],
                                   b[static_cast<std::size_t>(n)]));
    CHECK(first == second);
    std::vector<double> with_baseline{0.0};
    with_baseline.insert(with_baseline.end(), first.begin(), first.end());
    CHECK(fr.m_trace() == with_baseline);
}

TEST_CASE("frontier enforces its capacity") {
    ScoringScheme s = nuc_scheme(3.0, 2.0);
    AlignmentFrontier fr(s, 2);
    CHECK(fr.capacity() == 2);
    fr.extend('A', 'A');
    fr.extend('C', 'G');
    CHECK_THROWS_AS(fr.extend('A', 'A'), compute_error);
    CHECK_THROWS_AS(AlignmentFrontier(s, 0), config_error);
}

TEST_CASE("frontier rejects letters outside the alphabet") {
    ScoringScheme s = nuc_scheme(3.0, 2.0);
    AlignmentFrontier fr(s, 4);
    CHECK_THROWS_AS(fr.extend('X', 'A'), config_error);
}
