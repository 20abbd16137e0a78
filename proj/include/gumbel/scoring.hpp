#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gumbel/alphabet.hpp"

namespace gumbel {

// Substitution scores plus affine gap costs: a gap of length g >= 1 costs
// gap_open + gap_extend * g. Background letter frequencies for the two
// sequences close the model. All invariants are checked by make_scheme.
struct ScoringScheme {
    Alphabet alphabet;
    std::vector<double> matrix;  // size n*n, row-major over alphabet order
    double gap_open = 0.0;       // charged once per gap run
    double gap_extend = 0.0;     // charged per gapped letter
    std::vector<double> freq_a;  // letter frequencies of sequence A
    std::vector<double> freq_b;  // letter frequencies of sequence B

    double score(int a, int b) const {
        return matrix[static_cast<std::size_t>(a) *
                          static_cast<std::size_t>(alphabet.size()) +
                      static_cast<std::size_t>(b)];
    }
    double max_score() const;
    double max_abs_score() const;
    double mean_score() const;  // expectation under freq_a x freq_b

    // Stable identifier of (alphabet, matrix, gaps, frequencies) used to tag
    // reports, so results can be traced back to the exact inputs.
    std::string digest() const;
};

// Validates and assembles a scheme. Frequencies must be strictly positive and
// sum to 1 within 1e-12; gap costs must be nonnegative with gap_open +
// gap_extend > 0 (an actual penalty for a length-1 gap).
ScoringScheme make_scheme(const Alphabet& alphabet, std::vector<double> matrix,
                          double gap_open, double gap_extend,
                          std::vector<double> freq_a, std::vector<double> freq_b);

// Parses a whitespace-separated score table. '#' starts a comment; the first
// non-comment row lists column letters; each following row starts with its
// letter. Rows/columns for letters outside `alphabet` (e.g. '*' or ambiguity
// codes) are ignored. Every alphabet pair must be covered. Errors carry
// 1-based line and column positions.
std::vector<double> parse_matrix(std::istream& in, const Alphabet& alphabet);
std::vector<double> parse_matrix(const std::string& text, const Alphabet& alphabet);

// Parses "letter frequency" lines ('#' comments allowed). Every alphabet
// letter must appear exactly once; other letters are rejected. A total within
// 1e-6 of 1 is renormalized to sum exactly 1; a larger deviation is an error.
std::vector<double> parse_frequencies(std::istream& in, const Alphabet& alphabet);
std::vector<double> parse_frequencies(const std::string& text, const Alphabet& alphabet);

// Conjugate exponent of the ungapped score distribution: the unique positive
// root of sum_ab fa_a fb_b exp(lambda * s(a,b)) = 1, with the tilted mean
// mu = sum s * fa fb exp(lambda s) evaluated at the root. Requires a negative
// mean score and a positive maximum score; entropy is lambda * mu.
struct UngappedAnalytics {
    double lambda_star = 0.0;
    double mu_star = 0.0;
    double entropy() const { return lambda_star * mu_star; }
};

UngappedAnalytics solve_lambda_star(const ScoringScheme& scheme);

// First-order gapped-decay approximation built from the ungapped solution:
// lambda_star - 2 * big_lambda * exp(-lambda_star*gap_open) /
// (mu_star * (exp(lambda_star*gap_extend) - 1)). Requires gap_extend > 0.
double storey_siegmund_lambda(const UngappedAnalytics& ungapped, double gap_open,
                              double gap_extend, double big_lambda = 1.0);

}  // namespace gumbel
