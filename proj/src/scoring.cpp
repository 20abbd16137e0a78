#include "gumbel/scoring.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <sstream>

#include "gumbel/roots.hpp"

namespace gumbel {

namespace {

struct Token {
    std::string text;
    int col = 0;  // 1-based start column
};

std::vector<Token> tokenize(const std::string& raw_line) {
    std::string line = raw_line;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        if (std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])))
            ++i;
        out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
    }
    return out;
}

[[noreturn]] void parse_fail(int line, int col, const std::string& what) {
    throw config_error("line " + std::to_string(line) + ", column " +
                       std::to_string(col) + ": " + what);
}

double parse_number(const Token& tok, int line) {
    double value = 0.0;
    const char* begin = tok.text.data();
    const char* end = begin + tok.text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        parse_fail(line, tok.col, "expected a number, got '" + tok.text + "'");
    return value;
}

}  // namespace

std::vector<double> parse_matrix(std::istream& in, const Alphabet& alphabet) {
    const int n = alphabet.size();
    std::vector<char> header;      // column letters in file order
    std::vector<double> table;     // rows x header.size(), in file order
    std::vector<char> row_letters;
    std::string line;
    int line_no = 0;
    int header_line = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto toks = tokenize(line);
        if (toks.empty()) continue;
        if (header.empty()) {
            for (const auto& t : toks) {
                if (t.text.size() != 1)
                    parse_fail(line_no, t.col,
                               "expected a single column letter, got '" + t.text + "'");
                header.push_back(t.text[0]);
            }
            header_line = line_no;
            continue;
        }
        if (toks[0].text.size() != 1)
            parse_fail(line_no, toks[0].col,
                       "expected a single row letter, got '" + toks[0].text + "'");
        char row_letter = toks[0].text[0];
        if (toks.size() - 1 < header.size()) {
            int col = static_cast<int>(line.size()) + 1;
            parse_fail(line_no, col,
                       "row '" + std::string(1, row_letter) + "' has " +
                           std::to_string(toks.size() - 1) + " cells, expected " +
                           std::to_string(header.size()));
        }
        if (toks.size() - 1 > header.size())
            parse_fail(line_no, toks[header.size() + 1].col,
                       "row '" + std::string(1, row_letter) + "' has " +
                           std::to_string(toks.size() - 1) + " cells, expected " +
                           std::to_string(header.size()));
        for (char prev : row_letters)
            if (prev == row_letter)
                parse_fail(line_no, toks[0].col,
                           "duplicate row for letter '" + std::string(1, row_letter) +
                               "'");
        row_letters.push_back(row_letter);
        for (std::size_t c = 0; c < header.size(); ++c)
            table.push_back(parse_number(toks[c + 1], line_no));
    }
    if (header.empty()) throw config_error("matrix text has no header row");

    std::vector<int> col_of(static_cast<std::size_t>(n), -1);
    for (std::size_t c = 0; c < header.size(); ++c)
        if (alphabet.contains(header[c])) {
            int a = alphabet.index_of(header[c]);
            if (col_of[static_cast<std::size_t>(a)] != -1)
                parse_fail(header_line, 1,
                           "duplicate column for letter '" + std::string(1, header[c]) +
                               "'");
            col_of[static_cast<std::size_t>(a)] = static_cast<int>(c);
        }
    std::vector<int> row_of(static_cast<std::size_t>(n), -1);
    for (std::size_t r = 0; r < row_letters.size(); ++r)
        if (alphabet.contains(row_letters[r]))
            row_of[static_cast<std::size_t>(alphabet.index_of(row_letters[r]))] =
                static_cast<int>(r);
    for (int a = 0; a < n; ++a) {
        if (col_of[static_cast<std::size_t>(a)] < 0)
            throw config_error(std::string("matrix is missing a column for letter '") +
                               alphabet.letter(a) + "'");
        if (row_of[static_cast<std::size_t>(a)] < 0)
            throw config_error(std::string("matrix is missing a row for letter '") +
                               alphabet.letter(a) + "'");
    }
    std::vector<double> out(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            out[static_cast<std::size_t>(a) * static_cast<std::size_t>(n) +
                static_cast<std::size_t>(b)] =
                table[static_cast<std::size_t>(row_of[static_cast<std::size_t>(a)]) *
                          header.size() +
                      static_cast<std::size_t>(col_of[static_cast<std::size_t>(b)])];
    return out;
}

std::vector<double> parse_matrix(const std::string& text, const Alphabet& alphabet) {
    std::istringstream in(text);
    return parse_matrix(in, alphabet);
}

std::vector<double> parse_frequencies(std::istream& in, const Alphabet& alphabet) {
    const int n = alphabet.size();
    std::vector<double> freq(static_cast<std::size_t>(n), -1.0);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto toks = tokenize(line);
        if (toks.empty()) continue;
        if (toks.size() != 2)
            parse_fail(line_no, toks[0].col, "expected 'letter frequency'");
        if (toks[0].text.size() != 1 || !alphabet.contains(toks[0].text[0]))
            parse_fail(line_no, toks[0].col,
                       "letter '" + toks[0].text + "' is not in the alphabet");
        int a = alphabet.index_of(toks[0].text[0]);
        if (freq[static_cast<std::size_t>(a)] >= 0.0)
            parse_fail(line_no, toks[0].col,
                       "duplicate frequency for letter '" + toks[0].text + "'");
        double v = parse_number(toks[1], line_no);
        if (v <= 0.0)
            parse_fail(line_no, toks[1].col,
                       "frequency for '" + toks[0].text + "' must be positive");
        freq[static_cast<std::size_t>(a)] = v;
    }
    for (int a = 0; a < n; ++a)
        if (freq[static_cast<std::size_t>(a)] < 0.0)
            throw config_error(std::string("no frequency given for letter '") +
                               alphabet.letter(a) + "'");
    double sum = 0.0;
    for (double v : freq) sum += v;
    if (std::abs(sum - 1.0) > 1e-6)
        throw config_error("frequencies sum to " + std::to_string(sum) +
                           "; more than 1e-6 away from 1");
    for (double& v : freq) v /= sum;
    return freq;
}

std::vector<double> parse_frequencies(const std::string& text,
                                      const Alphabet& alphabet) {
    std::istringstream in(text);
    return parse_frequencies(in, alphabet);
}

double ScoringScheme::max_score() const {
    double m = matrix[0];
    for (double v : matrix) m = std::max(m, v);
    return m;
}

double ScoringScheme::max_abs_score() const {
    double m = 0.0;
    for (double v : matrix) m = std::max(m, std::abs(v));
    return m;
}

double ScoringScheme::mean_score() const {
    const int n = alphabet.size();
    double mean = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            mean += freq_a[static_cast<std::size_t>(a)] *
                    freq_b[static_cast<std::size_t>(b)] * score(a, b);
    return mean;
}

std::string ScoringScheme::digest() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
    auto mix = [&h](const char* data, std::size_t len) {
        for (std::size_t i = 0; i < len; ++i) {
            h ^= static_cast<unsigned char>(data[i]);
            h *= 0x100000001b3ULL;
        }
    };
    auto mix_double = [&](double v) {
        char buf[32];
        int len = std::snprintf(buf, sizeof buf, "%.17g,", v);
        mix(buf, static_cast<std::size_t>(len));
    };
    mix(alphabet.letters().data(), alphabet.letters().size());
    mix("|", 1);
    for (double v : matrix) mix_double(v);
    mix("|", 1);
    mix_double(gap_open);
    mix_double(gap_extend);
    mix("|", 1);
    for (double v : freq_a) mix_double(v);
    mix("|", 1);
    for (double v : freq_b) mix_double(v);
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return std::string(out, 16);
}

ScoringScheme make_scheme(const Alphabet& alphabet, std::vector<double> matrix,
                          double gap_open, double gap_extend,
                          std::vector<double> freq_a, std::vector<double> freq_b) {
    const std::size_t n = static_cast<std::size_t>(alphabet.size());
    if (matrix.size() != n * n)
        throw config_error("matrix has " + std::to_string(matrix.size()) +
                           " cells; alphabet needs " + std::to_string(n * n));
    for (double v : matrix)
        if (!std::isfinite(v)) throw config_error("matrix cells must be finite");
    if (!(gap_open >= 0.0) || !(gap_extend >= 0.0))
        throw config_error("gap costs must be nonnegative");
    if (!(gap_open + gap_extend > 0.0))
        throw config_error("a length-1 gap must cost something: gap_open + "
                           "gap_extend must be positive");
    auto check_freq = [n](const std::vector<double>& f, const char* which) {
        if (f.size() != n)
            throw config_error(std::string(which) + " frequency vector has " +
                               std::to_string(f.size()) + " entries; alphabet has " +
                               std::to_string(n));
        double sum = 0.0;
        for (double v : f) {
            if (!(v > 0.0))
                throw config_error(std::string(which) +
                                   " frequencies must be strictly positive");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw config_error(std::string(which) + " frequencies sum to " +
                               std::to_string(sum) + ", not 1");
    };
    check_freq(freq_a, "sequence-A");
    check_freq(freq_b, "sequence-B");
    return ScoringScheme{alphabet, std::move(matrix), gap_open, gap_extend,
                         std::move(freq_a), std::move(freq_b)};
}

UngappedAnalytics solve_lambda_star(const ScoringScheme& scheme) {
    if (scheme.mean_score() >= 0.0)
        throw config_error("mean score is nonnegative: scheme is not in the "
                           "logarithmic phase");
    if (scheme.max_score() <= 0.0)
        throw config_error("no positive score: scheme is not in the logarithmic "
                           "phase");
    const int n = scheme.alphabet.size();
    auto phi_and_dphi = [&](double lam) {
        double phi = 0.0, dphi = 0.0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                double w = scheme.freq_a[static_cast<std::size_t>(a)] *
                           scheme.freq_b[static_cast<std::size_t>(b)] *
                           std::exp(lam * scheme.score(a, b));
                phi += w;
                dphi += scheme.score(a, b) * w;
            }
        return std::pair<double, double>(phi - 1.0, dphi);
    };
    double lam0 = 1.0 / scheme.max_score();
    double lo, hi;
    if (phi_and_dphi(lam0).first < 0.0) {
        lo = lam0;
        hi = 2.0 * lam0;
        int tries = 0;
        while (phi_and_dphi(hi).first < 0.0) {
            hi *= 2.0;
            if (++tries > 200)
                throw compute_error("could not bracket the conjugate exponent "
                                    "(transform never re-crosses 1)");
        }
    } else {
        hi = lam0;
        lo = 0.5 * lam0;
        int tries = 0;
        while (phi_and_dphi(lo).first >= 0.0) {
            lo *= 0.5;
            if (++tries > 200)
                throw compute_error("could not bracket the conjugate exponent "
                                    "(transform stays above 1 near 0)");
        }
    }
    double lambda_star = newton_bisect(phi_and_dphi, lo, hi, 1e-13);
    double mu_star = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            mu_star += scheme.score(a, b) * scheme.freq_a[static_cast<std::size_t>(a)] *
                       scheme.freq_b[static_cast<std::size_t>(b)] *
                       std::exp(lambda_star * scheme.score(a, b));
    return UngappedAnalytics{lambda_star, mu_star};
}

double storey_siegmund_lambda(const UngappedAnalytics& ungapped, double gap_open,
                              double gap_extend, double big_lambda) {
    if (gap_extend <= 0.0)
        throw config_error("the gapped-decay approximation needs gap_extend > 0");
    double denom = ungapped.mu_star * (std::exp(ungapped.lambda_star * gap_extend) - 1.0);
    return ungapped.lambda_star -
           2.0 * big_lambda * std::exp(-ungapped.lambda_star * gap_open) / denom;
}

}  // namespace gumbel
