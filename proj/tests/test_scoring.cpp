#include <doctest.h>

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "gumbel/errors.hpp"
#include "gumbel/scoring.hpp"

using namespace gumbel;

namespace {

const std::string kDataDir = GUMBEL_DATA_DIR;

// Match +1 / mismatch -1 over four equiprobable letters. The conjugate
// exponent solves (1/4)e^x + (3/4)e^{-x} = 1, a quadratic in e^x with root
// e^x = 3, and the tilted mean is (1/4)(3) - (3/4)(1/3) = 1/2.
ScoringScheme unit_scheme(double gap_open, double gap_extend) {
    Alphabet a("ACGT");
    std::vector<double> m(16, -1.0);
    for (int i = 0; i < 4; ++i) m[static_cast<std::size_t>(i) * 4 + static_cast<std::size_t>(i)] = 1.0;
    std::vector<double> f(4, 0.25);
    return make_scheme(a, m, gap_open, gap_extend, f, f);
}

ScoringScheme load_bundled(const std::string& matrix, const std::string& freq,
                           const std::string& letters, double gap_open,
                           double gap_extend) {
    Alphabet a(letters);
    std::ifstream m(kDataDir + "/" + matrix);
    REQUIRE(m.good());
    std::vector<double> mat = parse_matrix(m, a);
    std::ifstream f(kDataDir + "/" + freq);
    REQUIRE(f.good());
    std::vector<double> fr = parse_frequencies(f, a);
    return make_scheme(a, std::move(mat), gap_open, gap_extend, fr, fr);
}

constexpr char kProtein[] = "ARNDCQEGHILKMFPSTWYV";

}  // namespace

TEST_CASE("conjugate exponent has closed form on the unit scheme") {
    ScoringScheme s = unit_scheme(2.0, 1.0);
    UngappedAnalytics u = solve_lambda_star(s);
    CHECK(u.lambda_star == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(u.mu_star == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(u.entropy() == doctest::Approx(0.5 * std::log(3.0)).epsilon(1e-12));
    CHECK(s.mean_score() == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(s.max_score() == 1.0);
    CHECK(s.max_abs_score() == 1.0);
}

TEST_CASE("gapped-decay approximation has closed form on the unit scheme") {
    // lambda* - 2 e^{-2 lambda*} / (mu* (e^{lambda*} - 1))
    //   = ln 3 - 2 (1/9) / ((1/2)(3 - 1)) = ln 3 - 2/9.
    ScoringScheme s = unit_scheme(2.0, 1.0);
    UngappedAnalytics u = solve_lambda_star(s);
    double lt = storey_siegmund_lambda(u, s.gap_open, s.gap_extend);
    CHECK(lt == doctest::Approx(0.8763900664458876).epsilon(1e-12));
    CHECK_THROWS_AS(storey_siegmund_lambda(u, 2.0, 0.0), config_error);
}

TEST_CASE("conjugate exponent matches the frozen +5/-4 value") {
    ScoringScheme s = load_bundled("NUC.5.-4", "acgt_uniform.freq", "ACGT", 3.0, 2.0);
    UngappedAnalytics u = solve_lambda_star(s);
    // Frozen from an independent bisection of (1/4)e^{5x} + (3/4)e^{-4x} = 1.
    CHECK(u.lambda_star == doctest::Approx(0.191529283390431).epsilon(1e-10));
}

TEST_CASE("conjugate exponents of bundled protein schemes match known values") {
    struct Row {
        const char* matrix;
        double lambda;
    };
    // Ungapped scale parameters for the standard matrices under the bundled
    // residue frequencies, as reported by widely used alignment tools.
    const Row rows[] = {{"BLOSUM62", 0.317604},
                        {"BLOSUM45", 0.229090},
                        {"BLOSUM80", 0.342969},
                        {"PAM30", 0.340025},
                        {"PAM70", 0.334502}};
    for (const Row& row : rows) {
        CAPTURE(row.matrix);
        ScoringScheme s = load_bundled(row.matrix, "robinson.freq", kProtein, 11, 1);
        UngappedAnalytics u = solve_lambda_star(s);
        CHECK(std::abs(u.lambda_star - row.lambda) < 2e-6);
    }
}

TEST_CASE("conjugate exponent satisfies its defining identity on all bundled schemes") {
    for (const char* matrix :
         {"BLOSUM62", "BLOSUM45", "BLOSUM80", "PAM30", "PAM70"}) {
        CAPTURE(matrix);
        ScoringScheme s = load_bundled(matrix, "robinson.freq", kProtein, 11, 1);
        UngappedAnalytics u = solve_lambda_star(s);
        double plug = 0.0;
        for (int a = 0; a < 20; ++a)
            for (int b = 0; b < 20; ++b)
                plug += s.freq_a[static_cast<std::size_t>(a)] *
                        s.freq_b[static_cast<std::size_t>(b)] *
                        std::exp(u.lambda_star * s.score(a, b));
        CHECK(std::abs(plug - 1.0) < 1e-10);
    }
}

TEST_CASE("well-known table cells survive parsing") {
    Alphabet a(kProtein);
    std::ifstream in(kDataDir + "/BLOSUM62");
    REQUIRE(in.good());
    std::vector<double> m = parse_matrix(in, a);
    auto cell = [&](char x, char y) {
        return m[static_cast<std::size_t>(a.index_of(x)) * 20 +
                 static_cast<std::size_t>(a.index_of(y))];
    };
    CHECK(cell('A', 'A') == 4.0);
    CHECK(cell('W', 'W') == 11.0);
    CHECK(cell('C', 'C') == 9.0);
    CHECK(cell('W', 'C') == -2.0);
    CHECK(cell('C', 'W') == -2.0);
}

TEST_CASE("matrix parser reports positions and missing coverage") {
    Alphabet ab("AB");
    // Happy path with a comment, an ignored extra column, and mixed spacing.
    std::vector<double> m = parse_matrix(
        "# comment\n   A  B  *\nA  1 -2 -9\nB -2  3 -9\n* -9 -9 1\n", ab);
    CHECK(m == std::vector<double>{1.0, -2.0, -2.0, 3.0});

    CHECK_THROWS_WITH_AS(parse_matrix("A B\nA 1 x\nB 1 1\n", ab),
                         doctest::Contains("expected a number"), config_error);
    CHECK_THROWS_WITH_AS(parse_matrix("A B\nA 1 x\nB 1 1\n", ab),
                         doctest::Contains("line 2"), config_error);
    CHECK_THROWS_WITH_AS(parse_matrix("A\nA 1\n", ab),
                         doctest::Contains("missing a column for letter 'B'"),
                         config_error);
    CHECK_THROWS_WITH_AS(parse_matrix("A B\nA 1 -2\n", ab),
                         doctest::Contains("missing a row for letter 'B'"),
                         config_error);
    CHECK_THROWS_WITH_AS(parse_matrix("", ab), doctest::Contains("no header row"),
                         config_error);
    CHECK_THROWS_WITH_AS(parse_matrix("A A B\nA 1 1 1\nB 1 1 1\n", ab),
                         doctest::Contains("duplicate column"), config_error);
}

TEST_CASE("frequency parser validates letters, duplicates, and totals") {
    Alphabet ab("AB");
    std::vector<double> f = parse_frequencies("# c\nA 0.25\nB 0.75\n", ab);
    CHECK(f == std::vector<double>{0.25, 0.75});

    // A tiny total error is renormalized to an exact unit sum.
    std::vector<double> g = parse_frequencies("A 0.2500001\nB 0.75\n", ab);
    CHECK(g[0] + g[1] == doctest::Approx(1.0).epsilon(1e-15));

    CHECK_THROWS_WITH_AS(parse_frequencies("A 0.3\nB 0.3\n", ab),
                         doctest::Contains("away from 1"), config_error);
    CHECK_THROWS_WITH_AS(parse_frequencies("A 0.25\n", ab),
                         doctest::Contains("no frequency given for letter 'B'"),
                         config_error);
    CHECK_THROWS_WITH_AS(parse_frequencies("A 0.25\nA 0.75\nB 0.1\n", ab),
                         doctest::Contains("duplicate frequency"), config_error);
    CHECK_THROWS_WITH_AS(parse_frequencies("A 0.5\nC 0.5\n", ab),
                         doctest::Contains("not in the alphabet"), config_error);
    CHECK_THROWS_WITH_AS(parse_frequencies("A -0.5\nB 1.5\n", ab),
                         doctest::Contains("must be positive"), config_error);
}

TEST_CASE("scheme assembly enforces its invariants") {
    Alphabet ab("AB");
    std::vector<double> good{1.0, -2.0, -2.0, 1.0};
    std::vector<double> f{0.5, 0.5};
    CHECK_THROWS_WITH_AS(make_scheme(ab, {1.0, -2.0}, 2, 1, f, f),
                         doctest::Contains("matrix has"), config_error);
    CHECK_THROWS_WITH_AS(make_scheme(ab, good, -1, 1, f, f),
                         doctest::Contains("nonnegative"), config_error);
    CHECK_THROWS_WITH_AS(make_scheme(ab, good, 0, 0, f, f),
                         doctest::Contains("length-1 gap must cost"), config_error);
    CHECK_THROWS_AS(make_scheme(ab, good, 2, 1, {0.5, 0.6}, f), config_error);
    CHECK_THROWS_AS(make_scheme(ab, good, 2, 1, {1.2, -0.2}, f), config_error);

    // Decay-regime checks live in the exponent solver, not the assembler.
    std::vector<double> all_pos{1.0, 1.0, 1.0, 1.0};
    ScoringScheme s = make_scheme(ab, all_pos, 2, 1, f, f);
    CHECK_THROWS_WITH_AS(solve_lambda_star(s),
                         doctest::Contains("mean score is nonnegative"),
                         config_error);
    std::vector<double> all_neg{-1.0, -1.0, -1.0, -1.0};
    ScoringScheme s2 = make_scheme(ab, all_neg, 2, 1, f, f);
    CHECK_THROWS_WITH_AS(solve_lambda_star(s2),
                         doctest::Contains("no positive score"), config_error);
}

TEST_CASE("conjugate exponent is invariant under alphabet permutation") {
    Alphabet ab("AB");
    ScoringScheme s1 = make_scheme(ab, {2.0, -3.0, -3.0, 1.0}, 2, 1, {0.3, 0.7},
                                   {0.6, 0.4});
    Alphabet ba("BA");
    ScoringScheme s2 = make_scheme(ba, {1.0, -3.0, -3.0, 2.0}, 2, 1, {0.7, 0.3},
                                   {0.4, 0.6});
    CHECK(solve_lambda_star(s1).lambda_star ==
          doctest::Approx(solve_lambda_star(s2).lambda_star).epsilon(1e-12));
}

TEST_CASE("halving all scores doubles the conjugate exponent") {
    Alphabet ab("AB");
    std::vector<double> m{2.0, -3.0, -3.0, 1.0};
    std::vector<double> h = m;
    for (double& v : h) v *= 0.5;
    ScoringScheme s1 = make_scheme(ab, m, 2, 1, {0.3, 0.7}, {0.6, 0.4});
    ScoringScheme s2 = make_scheme(ab, h, 2, 1, {0.3, 0.7}, {0.6, 0.4});
    CHECK(solve_lambda_star(s2).lambda_star ==
          doctest::Approx(2.0 * solve_lambda_star(s1).lambda_star).epsilon(1e-10));
}

TEST_CASE("scheme digests identify the inputs") {
    ScoringScheme a = unit_scheme(2.0, 1.0);
    ScoringScheme b = unit_scheme(2.0, 1.0);
    ScoringScheme c = unit_scheme(3.0, 1.0);
    CHECK(a.digest() == b.digest());
    CHECK(a.digest() != c.digest());
    ScoringScheme d = unit_scheme(2.0, 1.0);
    d.freq_a[0] += 1e-9;
    CHECK(a.digest() != d.digest());
}
