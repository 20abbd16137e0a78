#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "gumbel/align.hpp"
#include "gumbel/rng.hpp"
#include "gumbel/scoring.hpp"

namespace gumbel {

// Three-atom Markov chain that generates letter pairs: atom S emits an
// aligned pair from the joint table q, atom I emits one letter of B from its
// background, atom D emits one letter of A from its background. The chain
// starts at S. Row t[from] gives transition probabilities; by default I->D is
// forbidden, matching the alignment recursion's canonical gap order.
struct TrialModel {
    static constexpr int kS = 0, kI = 1, kD = 2;

    std::array<std::array<double, 3>, 3> t{};
    std::vector<double> q;       // n*n joint emission for S, row-major
    std::vector<double> emit_a;  // letter distribution emitted by D
    std::vector<double> emit_b;  // letter distribution emitted by I
    double tilt_lambda = 0.0;    // exponent used to build q

    std::array<CumTable, 3> t_table;
    CumTable q_table, a_table, b_table;

    int alphabet_size() const { return static_cast<int>(emit_a.size()); }
    void build_tables();
    // Row sums and emission sums must equal 1 within 1e-12, entries >= 0.
    void validate() const;
};

// Optional replacements for individual chain parameters. Unset fields keep
// their defaults; explicit gap-atom entries win over the shared scale c.
struct TrialOverrides {
    std::optional<double> c;            // scales t(S->I) and t(S->D)
    std::optional<double> tilt_lambda;  // exponent for q and gap-atom decay
    std::optional<double> t_si, t_sd, t_ii, t_dd, t_id, t_di;
};

// Default chain tuned to the scheme: q_ab proportional to
// fa_a fb_b exp(lambda s(a,b)) (lambda = the ungapped conjugate exponent),
// gap-run persistence exp(-lambda*gap_extend), gap starts
// c * exp(-lambda*(gap_open+gap_extend)), no I<->D switching. Diagonal
// returns to S absorb the remainder of each row; a negative remainder is a
// config error (choose a smaller c).
TrialModel default_trial_model(const ScoringScheme& scheme,
                               const UngappedAnalytics& ungapped,
                               const TrialOverrides& overrides = {});

// One sampled chain trajectory, stopped at the k_max-th ladder epoch or
// censored at the square horizon.
struct PathSample {
    std::vector<std::uint8_t> atoms;  // visited atoms, in order
    std::string seq_a, seq_b;         // emitted letters
    std::vector<int> ia, ib;          // same letters as alphabet indices
    LadderTrace ladder;
    int stop_n = 0;  // squares extended when sampling stopped
    bool censored = false;
};

// Runs the chain, extending `frontier` (reset here) one square whenever both
// sequences have grown past it, until k_max ladder epochs are recorded or the
// square horizon = frontier.capacity() is hit (censored). Letters emitted
// beyond the final square stay in seq_a/seq_b.
PathSample run_replicate(const ScoringScheme& scheme, const TrialModel& model,
                         int k_max, AlignmentFrontier& frontier, RngStream& rng);

}  // namespace gumbel
