#include "gumbel/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>

#include <json.hpp>

#include "gumbel/errors.hpp"
#include "gumbel/roots.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gumbel {

// ---------- direct Monte Carlo ----------

namespace {

SampleRecord one_crude_replicate(const ScoringScheme& scheme, const CumTable& ta,
                                 const CumTable& tb, int k_max,
                                 AlignmentFrontier& frontier, std::uint64_t seed,
                                 std::uint64_t index) {
    RngStream rng(seed, index);
    frontier.reset();
    SampleRecord rec;
    rec.replicate = index;
    const int horizon = frontier.capacity();
    LadderTrace ladder;
    int n = 0;
    while (n < horizon) {
        int a = ta.sample(rng);
        int b = tb.sample(rng);
        double m = frontier.extend_idx(a, b);
        ++n;
        if (ladder.update(n, m) && ladder.count() == k_max) break;
    }
    rec.epochs_reached = ladder.count();
    rec.stop_n = n;
    rec.scores = ladder.scores;
    rec.weights.assign(ladder.scores.size(), 1.0);
    return rec;
}

}  // namespace

CrudeResult crude_mc_ladder(const ScoringScheme& scheme, int k_max, int horizon,
                            std::uint64_t replicates, std::uint64_t seed,
                            int threads) {
    if (k_max < 1) throw config_error("need at least one ladder epoch");
    if (horizon < 1) throw config_error("horizon must be at least 1");
    if (replicates == 0) throw config_error("replicate count must be positive");
    CumTable ta(scheme.freq_a), tb(scheme.freq_b);
    CrudeResult out;
    out.records.assign(replicates, SampleRecord{});
    out.horizon = horizon;
    out.replicates = replicates;
#ifdef _OPENMP
    int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel num_threads(nt)
    {
        AlignmentFrontier frontier(scheme, horizon);
#pragma omp for schedule(dynamic, 64)
        for (std::int64_t c = 0; c < static_cast<std::int64_t>(replicates); ++c)
            out.records[static_cast<std::size_t>(c)] = one_crude_replicate(
                scheme, ta, tb, k_max, frontier, seed, static_cast<std::uint64_t>(c));
    }
#else
    (void)threads;
    AlignmentFrontier frontier(scheme, horizon);
    for (std::uint64_t c = 0; c < replicates; ++c)
        out.records[static_cast<std::size_t>(c)] =
            one_crude_replicate(scheme, ta, tb, k_max, frontier, seed, c);
#endif
    out.fraction_reached.assign(static_cast<std::size_t>(k_max), 0.0);
    out.fraction_se.assign(static_cast<std::size_t>(k_max), 0.0);
    for (const auto& rec : out.records)
        for (int k = 1; k <= rec.epochs_reached; ++k)
            out.fraction_reached[static_cast<std::size_t>(k - 1)] += 1.0;
    for (int k = 1; k <= k_max; ++k) {
        double p = out.fraction_reached[static_cast<std::size_t>(k - 1)] /
                   static_cast<double>(replicates);
        out.fraction_reached[static_cast<std::size_t>(k - 1)] = p;
        out.fraction_se[static_cast<std::size_t>(k - 1)] =
            std::sqrt(p * (1.0 - p) / static_cast<double>(replicates));
    }
    return out;
}

// ---------- exhaustive enumeration ----------

namespace {

struct EnumContext {
    const ScoringScheme* scheme;
    const TrialModel* model;
    std::vector<int> ia, ib;          // letter prefix, alphabet indices
    int n = 0;                        // square size N
    std::vector<double> qdot_a;       // sum_b q[a][b]
    std::vector<double> qdot_b;       // sum_a q[a][b]
    EnumLimits limits;

    EnumContext(const ScoringScheme& s, const TrialModel& m, const std::string& a,
                const std::string& b, const EnumLimits& lim)
        : scheme(&s), model(&m), limits(lim) {
        if (a.size() != b.size())
            throw config_error("enumeration needs equal-length prefixes");
        n = static_cast<int>(a.size());
        if (n < 1 || n > lim.max_n)
            throw config_error("enumeration bound exceeded: square " +
                               std::to_string(n) + " not in [1, " +
                               std::to_string(lim.max_n) + "]");
        if (s.alphabet.size() > lim.max_alphabet)
            throw config_error("enumeration bound exceeded: alphabet size " +
                               std::to_string(s.alphabet.size()) + " > " +
                               std::to_string(lim.max_alphabet));
        for (char c : a) ia.push_back(s.alphabet.index_of(c));
        for (char c : b) ib.push_back(s.alphabet.index_of(c));
        const int na = s.alphabet.size();
        qdot_a.assign(static_cast<std::size_t>(na), 0.0);
        qdot_b.assign(static_cast<std::size_t>(na), 0.0);
        for (int x = 0; x < na; ++x)
            for (int y = 0; y < na; ++y) {
                double qv = m.q[static_cast<std::size_t>(x) *
                                    static_cast<std::size_t>(na) +
                                static_cast<std::size_t>(y)];
                qdot_a[static_cast<std::size_t>(x)] += qv;
                qdot_b[static_cast<std::size_t>(y)] += qv;
            }
    }

    double qv(int a, int b) const {
        return model->q[static_cast<std::size_t>(a) *
                            static_cast<std::size_t>(scheme->alphabet.size()) +
                        static_cast<std::size_t>(b)];
    }

    // Emission probability of a step by `atom` from (i, j); destination
    // coordinates past the square marginalize to the observed prefix.
    double emission(int atom, int i, int j) const {
        if (atom == TrialModel::kS) {
            bool a_in = i + 1 <= n, b_in = j + 1 <= n;
            if (a_in && b_in)
                return qv(ia[static_cast<std::size_t>(i)],
                          ib[static_cast<std::size_t>(j)]);
            if (a_in) return qdot_a[static_cast<std::size_t>(ia[static_cast<std::size_t>(i)])];
            if (b_in) return qdot_b[static_cast<std::size_t>(ib[static_cast<std::size_t>(j)])];
            return 1.0;
        }
        if (atom == TrialModel::kI)
            return j + 1 <= n
                       ? model->emit_b[static_cast<std::size_t>(ib[static_cast<std::size_t>(j)])]
                       : 1.0;
        return i + 1 <= n
                   ? model->emit_a[static_cast<std::size_t>(ia[static_cast<std::size_t>(i)])]
                   : 1.0;
    }
};

void dfs_cell(const EnumContext& ctx, int atom, int i, int j, double p, int target_atom,
              int ci, int cj, double& acc) {
    if (i == ci && j == cj) {
        if (atom == target_atom) acc += p;
        return;
    }
    if (i > ci || j > cj) return;
    for (int nxt = 0; nxt < 3; ++nxt) {
        double tp = ctx.model->t[static_cast<std::size_t>(atom)][static_cast<std::size_t>(nxt)];
        if (tp == 0.0) continue;
        int ni = i + (nxt != TrialModel::kI ? 1 : 0);
        int nj = j + (nxt != TrialModel::kD ? 1 : 0);
        if (ni > ci || nj > cj) continue;
        dfs_cell(ctx, nxt, ni, nj, p * tp * ctx.emission(nxt, i, j), target_atom, ci,
                 cj, acc);
    }
}

// Window needed so the mass of gap runs escaping past it is below 1e-16 of
// the total (gap persistence decays geometrically with the run length).
int effective_span(const TrialModel& model, const EnumLimits& limits) {
    double t = std::max({model.t[1][1], model.t[2][2], 0.1});
    if (t >= 1.0)
        throw config_error("gap persistence >= 1: excursion tails never die");
    int needed = static_cast<int>(std::ceil(std::log(1e-16) / std::log(t))) + 8;
    return std::max(limits.span, needed);
}

struct StopTally {
    double acc = 0.0;
    double killed = 0.0;
    long long nodes = 0;
};

void dfs_stop(const EnumContext& ctx, int atom, int i, int j, double p, int cap,
              StopTally& tally) {
    if (std::min(i, j) >= ctx.n) {
        tally.acc += p;
        return;
    }
    if ((tally.acc > 0.0 && p < ctx.limits.kill_eps * tally.acc) || p < 1e-300 ||
        i > cap || j > cap) {
        tally.killed += p;
        return;
    }
    if (++tally.nodes > 200000000)
        throw compute_error("path enumeration exploded; shrink the instance");
    for (int nxt = 0; nxt < 3; ++nxt) {
        double tp = ctx.model->t[static_cast<std::size_t>(atom)][static_cast<std::size_t>(nxt)];
        if (tp == 0.0) continue;
        int ni = i + (nxt != TrialModel::kI ? 1 : 0);
        int nj = j + (nxt != TrialModel::kD ? 1 : 0);
        dfs_stop(ctx, nxt, ni, nj, p * tp * ctx.emission(nxt, i, j), cap, tally);
    }
}

}  // namespace

double enum_cell_mass(const ScoringScheme& scheme, const TrialModel& model,
                      const std::string& seq_a, const std::string& seq_b, int atom,
                      int i, int j, const EnumLimits& limits) {
    EnumContext ctx(scheme, model, seq_a, seq_b, limits);
    if (atom < 0 || atom > 2) throw config_error("atom must be 0, 1, or 2");
    if (i < 0 || j < 0 || i > ctx.n || j > ctx.n)
        throw config_error("cell outside the square");
    double acc = 0.0;
    dfs_cell(ctx, TrialModel::kS, 0, 0, 1.0, atom, i, j, acc);
    return acc;
}

double enum_stop_mass_dfs(const ScoringScheme& scheme, const TrialModel& model,
                          const std::string& seq_a, const std::string& seq_b,
                          double* killed, const EnumLimits& limits) {
    EnumContext ctx(scheme, model, seq_a, seq_b, limits);
    const int cap = ctx.n + effective_span(model, limits);
    StopTally tally;
    dfs_stop(ctx, TrialModel::kS, 0, 0, 1.0, cap, tally);
    if (killed) *killed = tally.killed;
    return tally.acc;
}

double enum_stop_mass_bfs(const ScoringScheme& scheme, const TrialModel& model,
                          const std::string& seq_a, const std::string& seq_b,
                          double* killed, const EnumLimits& limits) {
    EnumContext ctx(scheme, model, seq_a, seq_b, limits);
    const int cap = ctx.n + effective_span(model, limits);  // coordinates 0..cap
    const std::size_t side = static_cast<std::size_t>(cap) + 1;
    auto at = [side](int atom, int i, int j) {
        return (static_cast<std::size_t>(atom) * side + static_cast<std::size_t>(i)) *
                   side +
               static_cast<std::size_t>(j);
    };
    std::vector<double> cur(3 * side * side, 0.0), nxt_mass(3 * side * side, 0.0);
    cur[at(TrialModel::kS, 0, 0)] = 1.0;
    double acc = 0.0, lost = 0.0, live = 1.0;
    // Live states satisfy min(i, j) < n (everything else was absorbed or cut),
    // so the sweep only visits the two thin slabs i < n or j < n. Every step
    // advances i or j, so live mass is gone after cap + n + 2 sweeps.
    for (int sweep = 0; sweep < cap + ctx.n + 2 && live > 0.0; ++sweep) {
        std::fill(nxt_mass.begin(), nxt_mass.end(), 0.0);
        for (int atom = 0; atom < 3; ++atom)
            for (int i = 0; i <= cap; ++i) {
                const int jmax = i < ctx.n ? cap : ctx.n - 1;
                for (int j = 0; j <= jmax; ++j) {
                    double m = cur[at(atom, i, j)];
                    if (m == 0.0) continue;
                    for (int to = 0; to < 3; ++to) {
                        double tp = ctx.model->t[static_cast<std::size_t>(atom)]
                                                [static_cast<std::size_t>(to)];
                        if (tp == 0.0) continue;
                        int ni = i + (to != TrialModel::kI ? 1 : 0);
                        int nj = j + (to != TrialModel::kD ? 1 : 0);
                        double add = m * tp * ctx.emission(to, i, j);
                        if (std::min(ni, nj) >= ctx.n)
                            acc += add;
                        else if (ni > cap || nj > cap)
                            lost += add;
                        else
                            nxt_mass[at(to, ni, nj)] += add;
                    }
                }
            }
        cur.swap(nxt_mass);
        live = 0.0;
        for (double v : cur) live += v;
    }
    lost += live;  // anything still live is untracked tail mass
    if (killed) *killed = lost;
    return acc;
}

SmallInstance random_small_instance(std::uint64_t seed, std::uint64_t index,
                                    int max_n) {
    if (max_n < 1) throw config_error("max_n must be at least 1");
    RngStream rng(seed, index);
    for (int attempt = 0; attempt < 200; ++attempt) {
        double match = 1.0 + 2.0 * rng.uniform();
        double mismatch = -(1.0 + 3.0 * rng.uniform());
        double pa = 0.2 + 0.6 * rng.uniform();
        double pb = 0.2 + 0.6 * rng.uniform();
        double gap_open = 0.5 + 2.5 * rng.uniform();
        double gap_extend = 0.5 + 1.5 * rng.uniform();
        std::optional<ScoringScheme> scheme;
        UngappedAnalytics ungapped;
        try {
            scheme = make_scheme(Alphabet("AB"),
                                 {match, mismatch, mismatch, match}, gap_open,
                                 gap_extend, {pa, 1.0 - pa}, {pb, 1.0 - pb});
            ungapped = solve_lambda_star(*scheme);
        } catch (const std::exception&) {
            continue;  // drawn outside the decaying-score regime; redraw
        }
        TrialOverrides ov;
        ov.c = 0.25 + 0.75 * rng.uniform();
        if (rng.uniform() < 0.3) {
            ov.t_id = 0.01 + 0.04 * rng.uniform();
            ov.t_di = 0.01 + 0.04 * rng.uniform();
        }
        TrialModel model;
        try {
            model = default_trial_model(*scheme, ungapped, ov);
        } catch (const std::exception&) {
            continue;
        }
        // Keep gap runs short-lived so exhaustive path enumeration stays
        // tractable; persistent-gap behavior is exercised by the closures.
        if (model.t[1][1] > 0.6 || model.t[2][2] > 0.6) continue;
        int n = 1 + static_cast<int>(rng.uniform() * static_cast<double>(max_n));
        if (n > max_n) n = max_n;
        std::string seq_a, seq_b;
        for (int s = 0; s < n; ++s) {
            seq_a.push_back(rng.uniform() < 0.5 ? 'A' : 'B');
            seq_b.push_back(rng.uniform() < 0.5 ? 'A' : 'B');
        }
        return SmallInstance{std::move(*scheme), std::move(model),
                             std::move(seq_a), std::move(seq_b)};
    }
    throw compute_error("could not draw a valid random instance");
}

// ---------- literal strip sums ----------

namespace {

struct StripGrid {
    std::vector<double> ws, wi, wd;
    std::size_t cols = 0;
    double& WS(int i, int j) { return ws[static_cast<std::size_t>(i) * cols + static_cast<std::size_t>(j)]; }
    double& WI(int i, int j) { return wi[static_cast<std::size_t>(i) * cols + static_cast<std::size_t>(j)]; }
    double& WD(int i, int j) { return wd[static_cast<std::size_t>(i) * cols + static_cast<std::size_t>(j)]; }
};

}  // namespace

StripSums strip_tail_sums_row(const ScoringScheme& scheme, const TrialModel& model,
                              const std::string& seq_a, const std::string& seq_b,
                              int terms) {
    if (seq_a.size() != seq_b.size())
        throw config_error("strip sums need equal-length prefixes");
    const int n = static_cast<int>(seq_a.size());
    if (n < 1) throw config_error("strip sums need a nonempty prefix");
    if (terms < 0) throw config_error("strip term count must be nonnegative");
    const int na = scheme.alphabet.size();
    std::vector<int> ia, ib;
    for (char c : seq_a) ia.push_back(scheme.alphabet.index_of(c));
    for (char c : seq_b) ib.push_back(scheme.alphabet.index_of(c));
    std::vector<double> qdot_a(static_cast<std::size_t>(na), 0.0);
    for (int x = 0; x < na; ++x)
        for (int y = 0; y < na; ++y)
            qdot_a[static_cast<std::size_t>(x)] +=
                model.q[static_cast<std::size_t>(x) * static_cast<std::size_t>(na) +
                        static_cast<std::size_t>(y)];
    auto r_of = [&](int i, int j) {  // 1-based lattice coordinates
        int a = ia[static_cast<std::size_t>(i - 1)];
        double fa = scheme.freq_a[static_cast<std::size_t>(a)];
        if (j <= n) {
            int b = ib[static_cast<std::size_t>(j - 1)];
            return model.q[static_cast<std::size_t>(a) * static_cast<std::size_t>(na) +
                           static_cast<std::size_t>(b)] /
                   (fa * scheme.freq_b[static_cast<std::size_t>(b)]);
        }
        return qdot_a[static_cast<std::size_t>(a)] / fa;
    };
    const auto& t = model.t;
    const double t_ss = t[0][0], t_si = t[0][1], t_sd = t[0][2];
    const double t_is = t[1][0], t_ii = t[1][1], t_id = t[1][2];
    const double t_ds = t[2][0], t_di = t[2][1], t_dd = t[2][2];
    const int jmax = n + terms;
    StripGrid g;
    g.cols = static_cast<std::size_t>(jmax) + 1;
    g.ws.assign((static_cast<std::size_t>(n) + 1) * g.cols, 0.0);
    g.wi = g.ws;
    g.wd = g.ws;
    g.WS(0, 0) = 1.0;
    for (int i = 1; i <= n; ++i)
        g.WD(i, 0) = t_sd * g.WS(i - 1, 0) + t_id * g.WI(i - 1, 0) + t_dd * g.WD(i - 1, 0);
    for (int j = 1; j <= jmax; ++j)
        g.WI(0, j) = t_si * g.WS(0, j - 1) + t_ii * g.WI(0, j - 1) + t_di * g.WD(0, j - 1);
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= jmax; ++j) {
            g.WS(i, j) = r_of(i, j) * (t_ss * g.WS(i - 1, j - 1) +
                                       t_is * g.WI(i - 1, j - 1) +
                                       t_ds * g.WD(i - 1, j - 1));
            g.WI(i, j) = t_si * g.WS(i, j - 1) + t_ii * g.WI(i, j - 1) +
                         t_di * g.WD(i, j - 1);
            g.WD(i, j) = t_sd * g.WS(i - 1, j) + t_id * g.WI(i - 1, j) +
                         t_dd * g.WD(i - 1, j);
        }
    StripSums out;
    out.S.assign(static_cast<std::size_t>(n) + 1, 0.0);
    out.I = out.S;
    out.D = out.S;
    for (int i = 0; i <= n; ++i)
        for (int j = n; j <= jmax; ++j) {
            out.S[static_cast<std::size_t>(i)] += g.WS(i, j);
            out.I[static_cast<std::size_t>(i)] += g.WI(i, j);
            out.D[static_cast<std::size_t>(i)] += g.WD(i, j);
        }
    return out;
}

StripSums strip_tail_sums_col(const ScoringScheme& scheme, const TrialModel& model,
                              const std::string& seq_a, const std::string& seq_b,
                              int terms) {
    if (seq_a.size() != seq_b.size())
        throw config_error("strip sums need equal-length prefixes");
    const int n = static_cast<int>(seq_a.size());
    if (n < 1) throw config_error("strip sums need a nonempty prefix");
    if (terms < 0) throw config_error("strip term count must be nonnegative");
    const int na = scheme.alphabet.size();
    std::vector<int> ia, ib;
    for (char c : seq_a) ia.push_back(scheme.alphabet.index_of(c));
    for (char c : seq_b) ib.push_back(scheme.alphabet.index_of(c));
    std::vector<double> qdot_b(static_cast<std::size_t>(na), 0.0);
    for (int x = 0; x < na; ++x)
        for (int y = 0; y < na; ++y)
            qdot_b[static_cast<std::size_t>(y)] +=
                model.q[static_cast<std::size_t>(x) * static_cast<std::size_t>(na) +
                        static_cast<std::size_t>(y)];
    auto r_of = [&](int i, int j) {
        int b = ib[static_cast<std::size_t>(j - 1)];
        double fb = scheme.freq_b[static_cast<std::size_t>(b)];
        if (i <= n) {
            int a = ia[static_cast<std::size_t>(i - 1)];
            return model.q[static_cast<std::size_t>(a) * static_cast<std::size_t>(na) +
                           static_cast<std::size_t>(b)] /
                   (scheme.freq_a[static_cast<std::size_t>(a)] * fb);
        }
        return qdot_b[static_cast<std::size_t>(b)] / fb;
    };
    const auto& t = model.t;
    const double t_ss = t[0][0], t_si = t[0][1], t_sd = t[0][2];
    const double t_is = t[1][0], t_ii = t[1][1], t_id = t[1][2];
    const double t_ds = t[2][0], t_di = t[2][1], t_dd = t[2][2];
    const int imax = n + terms;
    StripGrid g;
    g.cols = static_cast<std::size_t>(n) + 1;
    g.ws.assign((static_cast<std::size_t>(imax) + 1) * g.cols, 0.0);
    g.wi = g.ws;
    g.wd = g.ws;
    g.WS(0, 0) = 1.0;
    for (int i = 1; i <= imax; ++i)
        g.WD(i, 0) = t_sd * g.WS(i - 1, 0) + t_id * g.WI(i - 1, 0) + t_dd * g.WD(i - 1, 0);
    for (int j = 1; j <= n; ++j)
        g.WI(0, j) = t_si * g.WS(0, j - 1) + t_ii * g.WI(0, j - 1) + t_di * g.WD(0, j - 1);
    for (int i = 1; i <= imax; ++i)
        for (int j = 1; j <= n; ++j) {
            g.WS(i, j) = r_of(i, j) * (t_ss * g.WS(i - 1, j - 1) +
                                       t_is * g.WI(i - 1, j - 1) +
                                       t_ds * g.WD(i - 1, j - 1));
            g.WI(i, j) = t_si * g.WS(i, j - 1) + t_ii * g.WI(i, j - 1) +
                         t_di * g.WD(i, j - 1);
            g.WD(i, j) = t_sd * g.WS(i - 1, j) + t_id * g.WI(i - 1, j) +
                         t_dd * g.WD(i - 1, j);
        }
    StripSums out;
    out.S.assign(static_cast<std::size_t>(n) + 1, 0.0);
    out.I = out.S;
    out.D = out.S;
    for (int j = 0; j <= n; ++j)
        for (int i = n; i <= imax; ++i) {
            out.S[static_cast<std::size_t>(j)] += g.WS(i, j);
            out.I[static_cast<std::size_t>(j)] += g.WI(i, j);
            out.D[static_cast<std::size_t>(j)] += g.WD(i, j);
        }
    return out;
}

// ---------- finite Markov additive chain ----------

FiniteMap load_finite_map(std::istream& in) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("chain description is not valid JSON: ") +
                           e.what());
    }
    if (!doc.contains("transitions") || !doc.contains("increments"))
        throw config_error("chain description needs 'transitions' and 'increments'");
    const auto& tr = doc["transitions"];
    if (!tr.is_array() || tr.empty())
        throw config_error("'transitions' must be a nonempty matrix");
    const int n = static_cast<int>(tr.size());
    if (n > 64) throw config_error("chain too large (at most 64 phases)");
    FiniteMap map;
    map.n = n;
    map.P.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        const auto& row = tr[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            throw config_error("'transitions' must be square");
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            double v = row[static_cast<std::size_t>(j)].get<double>();
            if (!(v >= 0.0)) throw config_error("transition probabilities must be >= 0");
            map.P[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                  static_cast<std::size_t>(j)] = v;
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw config_error("transition row " + std::to_string(i) +
                               " sums to " + std::to_string(sum) + ", not 1");
    }
    const auto& inc = doc["increments"];
    if (!inc.is_array() || static_cast<int>(inc.size()) != n)
        throw config_error("'increments' must have one row per phase");
    map.inc.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto& row = inc[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            throw config_error("'increments' must be square");
        for (int j = 0; j < n; ++j) {
            const auto& cell = row[static_cast<std::size_t>(j)];
            IncrementDist d;
            if (!cell.is_object() || !cell.contains("support") ||
                !cell.contains("probs"))
                throw config_error("each increment law needs 'support' and 'probs'");
            for (const auto& z : cell["support"]) {
                if (!z.is_number_integer())
                    throw config_error("increment support must be integers "
                                       "(non-lattice increments are unsupported)");
                d.support.push_back(z.get<int>());
            }
            double sum = 0.0;
            for (const auto& p : cell["probs"]) {
                double v = p.get<double>();
                if (!(v >= 0.0)) throw config_error("increment probabilities must be >= 0");
                d.probs.push_back(v);
                sum += v;
            }
            if (d.support.size() != d.probs.size() || d.support.empty())
                throw config_error("increment support and probs must match and be "
                                   "nonempty");
            if (std::abs(sum - 1.0) > 1e-12)
                throw config_error("increment law (" + std::to_string(i) + "," +
                                   std::to_string(j) + ") sums to " +
                                   std::to_string(sum) + ", not 1");
            d.table = CumTable(d.probs);
            map.inc[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                    static_cast<std::size_t>(j)] = std::move(d);
        }
    }
    for (int i = 0; i < n; ++i) {
        std::vector<double> row(map.P.begin() + static_cast<std::ptrdiff_t>(i) * n,
                                map.P.begin() + static_cast<std::ptrdiff_t>(i + 1) * n);
        map.row_table.emplace_back(row);
    }

    // Stationary distribution: solve x (P - I) = 0 with sum(x) = 1, i.e.
    // (P^T - I) x = 0 with the last equation replaced by the normalization.
    {
        std::vector<double> A(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
        std::vector<double> rhs(static_cast<std::size_t>(n), 0.0);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                A[static_cast<std::size_t>(r) * static_cast<std::size_t>(n) +
                  static_cast<std::size_t>(c)] =
                    map.P[static_cast<std::size_t>(c) * static_cast<std::size_t>(n) +
                          static_cast<std::size_t>(r)] -
                    (r == c ? 1.0 : 0.0);
        for (int c = 0; c < n; ++c)
            A[static_cast<std::size_t>(n - 1) * static_cast<std::size_t>(n) +
              static_cast<std::size_t>(c)] = 1.0;
        rhs[static_cast<std::size_t>(n - 1)] = 1.0;
        // Gaussian elimination with partial pivoting.
        for (int col = 0; col < n; ++col) {
            int piv = col;
            for (int r = col + 1; r < n; ++r)
                if (std::abs(A[static_cast<std::size_t>(r) * static_cast<std::size_t>(n) +
                               static_cast<std::size_t>(col)]) >
                    std::abs(A[static_cast<std::size_t>(piv) * static_cast<std::size_t>(n) +
                               static_cast<std::size_t>(col)]))
                    piv = r;
            if (std::abs(A[static_cast<std::size_t>(piv) * static_cast<std::size_t>(n) +
                           static_cast<std::size_t>(col)]) < 1e-12)
                throw config_error("no unique stationary distribution");
            if (piv != col) {
                for (int c = 0; c < n; ++c)
                    std::swap(A[static_cast<std::size_t>(piv) * static_cast<std::size_t>(n) +
                                static_cast<std::size_t>(c)],
                              A[static_cast<std::size_t>(col) * static_cast<std::size_t>(n) +
                                static_cast<std::size_t>(c)]);
                std::swap(rhs[static_cast<std::size_t>(piv)],
                          rhs[static_cast<std::size_t>(col)]);
            }
            for (int r = col + 1; r < n; ++r) {
                double f = A[static_cast<std::size_t>(r) * static_cast<std::size_t>(n) +
                             static_cast<std::size_t>(col)] /
                           A[static_cast<std::size_t>(col) * static_cast<std::size_t>(n) +
                             static_cast<std::size_t>(col)];
                if (f == 0.0) continue;
                for (int c = col; c < n; ++c)
                    A[static_cast<std::size_t>(r) * static_cast<std::size_t>(n) +
                      static_cast<std::size_t>(c)] -=
                        f * A[static_cast<std::size_t>(col) * static_cast<std::size_t>(n) +
                              static_cast<std::size_t>(c)];
                rhs[static_cast<std::size_t>(r)] -= f * rhs[static_cast<std::size_t>(col)];
            }
        }
        map.pi.assign(static_cast<std::size_t>(n), 0.0);
        for (int r = n - 1; r >= 0; --r) {
            double v = rhs[static_cast<std::size_t>(r)];
            for (int c = r + 1; c < n; ++c)
                v -= A[static_cast<std::size_t>(r) * static_cast<std::size_t>(n) +
                       static_cast<std::size_t>(c)] *
                     map.pi[static_cast<std::size_t>(c)];
            map.pi[static_cast<std::size_t>(r)] =
                v / A[static_cast<std::size_t>(r) * static_cast<std::size_t>(n) +
                      static_cast<std::size_t>(r)];
        }
        for (double v : map.pi)
            if (!(v > 1e-12))
                throw config_error("stationary distribution is not strictly positive");
    }

    double drift = 0.0;
    bool can_ascend = false;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double pij = map.P[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                               static_cast<std::size_t>(j)];
            if (pij == 0.0) continue;
            const auto& d = map.inc_at(i, j);
            double mean = 0.0;
            for (std::size_t s = 0; s < d.support.size(); ++s) {
                mean += d.support[s] * d.probs[s];
                if (d.support[s] > 0 && d.probs[s] > 0.0) can_ascend = true;
            }
            drift += map.pi[static_cast<std::size_t>(i)] * pij * mean;
        }
    if (!(drift < 0.0))
        throw config_error("stationary drift must be negative (got " +
                           std::to_string(drift) + ")");
    if (!can_ascend)
        throw config_error("chain can never ascend: ladder epochs are impossible");
    map.stationary_drift = drift;
    return map;
}

FiniteMap load_finite_map_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open chain description '" + path + "'");
    return load_finite_map(in);
}

namespace {

// Absorbing propagation with levels -depth..0; returns the n*n transform.
std::vector<double> propagate_transform(const FiniteMap& map, double theta,
                                        int depth) {
    const int n = map.n;
    std::vector<double> L(static_cast<std::size_t>(n) * static_cast<std::size_t>(n),
                          0.0);
    const std::size_t levels = static_cast<std::size_t>(depth) + 1;
    std::vector<double> cur(static_cast<std::size_t>(n) * levels);
    std::vector<double> nxt(static_cast<std::size_t>(n) * levels);
    for (int src = 0; src < n; ++src) {
        std::fill(cur.begin(), cur.end(), 0.0);
        cur[static_cast<std::size_t>(src) * levels] = 1.0;  // level 0
        double live = 1.0;
        int sweeps = 0;
        while (live > 1e-16) {
            if (++sweeps > 200000)
                throw compute_error("ladder transform did not converge");
            std::fill(nxt.begin(), nxt.end(), 0.0);
            for (int p = 0; p < n; ++p)
                for (std::size_t d = 0; d < levels; ++d) {
                    double m = cur[static_cast<std::size_t>(p) * levels + d];
                    if (m == 0.0) continue;
                    for (int q = 0; q < n; ++q) {
                        double tp =
                            map.P[static_cast<std::size_t>(p) * static_cast<std::size_t>(n) +
                                  static_cast<std::size_t>(q)];
                        if (tp == 0.0) continue;
                        const auto& dist = map.inc_at(p, q);
                        for (std::size_t s = 0; s < dist.support.size(); ++s) {
                            double add = m * tp * dist.probs[s];
                            if (add == 0.0) continue;
                            long long lvl =
                                -static_cast<long long>(d) + dist.support[s];
                            if (lvl > 0)
                                L[static_cast<std::size_t>(src) *
                                      static_cast<std::size_t>(n) +
                                  static_cast<std::size_t>(q)] +=
                                    add * std::exp(theta * static_cast<double>(lvl));
                            else if (-lvl <= depth)
                                nxt[static_cast<std::size_t>(q) * levels +
                                    static_cast<std::size_t>(-lvl)] += add;
                            // deeper than `depth`: truncated
                        }
                    }
                }
            cur.swap(nxt);
            live = 0.0;
            for (double v : cur) live += v;
        }
    }
    return L;
}

double dominant_eigenvalue(const std::vector<double>& L, int n) {
    if (n == 1) return L[0];
    std::vector<double> x(static_cast<std::size_t>(n), 1.0);
    std::vector<double> y(static_cast<std::size_t>(n));
    double rho_prev = -1.0;
    int stable = 0;
    for (int iter = 0; iter < 1000000; ++iter) {
        double norm = 0.0;
        for (int i = 0; i < n; ++i) {
            double v = 0.0;
            for (int j = 0; j < n; ++j)
                v += L[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                       static_cast<std::size_t>(j)] *
                     x[static_cast<std::size_t>(j)];
            y[static_cast<std::size_t>(i)] = v;
            norm = std::max(norm, std::abs(v));
        }
        if (norm == 0.0) return 0.0;
        double rho = norm;  // x is kept at unit max-norm
        for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] =
            y[static_cast<std::size_t>(i)] / norm;
        if (std::abs(rho - rho_prev) <= 1e-13 * std::max(1.0, rho)) {
            if (++stable >= 3) return rho;
        } else {
            stable = 0;
        }
        rho_prev = rho;
    }
    throw compute_error("power iteration did not converge");
}

}  // namespace

LadderTransform map_ladder_transform(const FiniteMap& map, double theta) {
    if (!std::isfinite(theta)) throw config_error("transform exponent must be finite");
    std::vector<double> prev;
    for (int depth = 64; depth <= 16384; depth *= 2) {
        std::vector<double> L = propagate_transform(map, theta, depth);
        if (!prev.empty()) {
            double scale = 1.0;
            for (double v : L) scale = std::max(scale, std::abs(v));
            double diff = 0.0;
            for (std::size_t i = 0; i < L.size(); ++i)
                diff = std::max(diff, std::abs(L[i] - prev[i]));
            if (diff <= 1e-14 * scale) {
                LadderTransform out;
                out.n = map.n;
                out.L = std::move(L);
                out.rho = dominant_eigenvalue(out.L, map.n);
                out.depth_used = depth;
                return out;
            }
        }
        prev = std::move(L);
    }
    throw compute_error("ladder transform truncation did not stabilize");
}

double map_lambda(const FiniteMap& map) {
    double rho0 = map_ladder_transform(map, 0.0).rho;
    if (!(rho0 < 1.0))
        throw config_error("epoch mass at exponent 0 must be below 1 "
                           "(negative-drift chain)");
    auto f = [&map](double theta) { return map_ladder_transform(map, theta).rho - 1.0; };
    double lo = 0.0, hi = 0.25;
    int tries = 0;
    while (f(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++tries > 60)
            throw compute_error("could not bracket the chain's decay exponent");
    }
    return secant_bisect(f, lo, hi, 1e-10);
}

double map_epoch_moment(const FiniteMap& map, double theta, int k, int start_phase) {
    if (k < 1) throw config_error("epoch index must be at least 1");
    if (start_phase < 0 || start_phase >= map.n)
        throw config_error("start phase out of range");
    LadderTransform lt = map_ladder_transform(map, theta);
    std::vector<double> v(static_cast<std::size_t>(map.n), 0.0);
    v[static_cast<std::size_t>(start_phase)] = 1.0;
    std::vector<double> w(static_cast<std::size_t>(map.n));
    for (int step = 0; step < k; ++step) {
        for (int j = 0; j < map.n; ++j) {
            double s = 0.0;
            for (int i = 0; i < map.n; ++i)
                s += v[static_cast<std::size_t>(i)] *
                     lt.L[static_cast<std::size_t>(i) * static_cast<std::size_t>(map.n) +
                          static_cast<std::size_t>(j)];
            w[static_cast<std::size_t>(j)] = s;
        }
        v.swap(w);
    }
    double total = 0.0;
    for (double x : v) total += x;
    return total;
}

namespace {

SampleRecord one_map_replicate(const FiniteMap& map, int k_max, int step_horizon,
                               std::uint64_t seed, std::uint64_t index,
                               int start_phase) {
    RngStream rng(seed, index);
    SampleRecord rec;
    rec.replicate = index;
    int phase = start_phase;
    long long total = 0, best = 0;
    int epochs = 0;
    int step = 0;
    while (step < step_horizon) {
        ++step;
        int nxt = map.row_table[static_cast<std::size_t>(phase)].sample(rng);
        const auto& d = map.inc_at(phase, nxt);
        total += d.support[static_cast<std::size_t>(d.table.sample(rng))];
        phase = nxt;
        if (total > best) {
            best = total;
            ++epochs;
            rec.scores.push_back(static_cast<double>(total));
            rec.weights.push_back(1.0);
            if (epochs == k_max) break;
        }
    }
    rec.epochs_reached = epochs;
    rec.stop_n = step;
    return rec;
}

}  // namespace

std::vector<SampleRecord> map_simulate(const FiniteMap& map, int k_max,
                                       int step_horizon, std::uint64_t replicates,
                                       std::uint64_t seed, int threads,
                                       int start_phase) {
    if (k_max < 1) throw config_error("need at least one ladder epoch");
    if (step_horizon < 1) throw config_error("step horizon must be positive");
    if (start_phase < 0 || start_phase >= map.n)
        throw config_error("start phase out of range");
    std::vector<SampleRecord> out(replicates);
#ifdef _OPENMP
    int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 256) num_threads(nt)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(replicates); ++c)
        out[static_cast<std::size_t>(c)] =
            one_map_replicate(map, k_max, step_horizon, seed,
                              static_cast<std::uint64_t>(c), start_phase);
#else
    (void)threads;
    for (std::uint64_t c = 0; c < replicates; ++c)
        out[static_cast<std::size_t>(c)] =
            one_map_replicate(map, k_max, step_horizon, seed, c, start_phase);
#endif
    return out;
}

MapCheck map_estimator_check(const FiniteMap& map, int k, int k_prime,
                             std::uint64_t replicates, std::uint64_t seed,
                             int threads) {
    MapCheck out;
    out.lambda_ref = map_lambda(map);
    auto records = map_simulate(map, k_prime, 10000, replicates, seed, threads);
    out.lambda_hat = solve_lambda(records, k, k_prime, out.lambda_ref);
    out.stderr_ = estimate_variance(records, k, k_prime, out.lambda_hat).stderr_;
    out.replicates = replicates;
    return out;
}

}  // namespace gumbel
