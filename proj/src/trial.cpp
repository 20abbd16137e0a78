#include "gumbel/trial.hpp"

#include <cmath>

#include "gumbel/errors.hpp"

namespace gumbel {

void TrialModel::build_tables() {
    for (int from = 0; from < 3; ++from)
        t_table[static_cast<std::size_t>(from)] =
            CumTable(std::vector<double>(t[static_cast<std::size_t>(from)].begin(),
                                         t[static_cast<std::size_t>(from)].end()));
    q_table = CumTable(q);
    a_table = CumTable(emit_a);
    b_table = CumTable(emit_b);
}

void TrialModel::validate() const {
    const int n = alphabet_size();
    if (n < 1) throw config_error("trial chain has no alphabet");
    if (q.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n) ||
        emit_b.size() != static_cast<std::size_t>(n))
        throw config_error("trial chain emission tables have inconsistent sizes");
    for (int from = 0; from < 3; ++from) {
        double sum = 0.0;
        for (int to = 0; to < 3; ++to) {
            double v = t[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
            if (!(v >= 0.0) || !(v <= 1.0))
                throw config_error("trial chain transition out of [0,1]");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw config_error("trial chain transition row does not sum to 1");
    }
    auto check_dist = [](const std::vector<double>& d, const char* name) {
        double sum = 0.0;
        for (double v : d) {
            if (!(v >= 0.0)) throw config_error(std::string(name) + " has a negative entry");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw config_error(std::string(name) + " does not sum to 1");
    };
    check_dist(q, "trial joint emission");
    check_dist(emit_a, "trial A-letter emission");
    check_dist(emit_b, "trial B-letter emission");
}

TrialModel default_trial_model(const ScoringScheme& scheme,
                               const UngappedAnalytics& ungapped,
                               const TrialOverrides& overrides) {
    TrialModel m;
    const int n = scheme.alphabet.size();
    double lam = overrides.tilt_lambda.value_or(ungapped.lambda_star);
    if (!(lam > 0.0)) throw config_error("trial tilt exponent must be positive");
    m.tilt_lambda = lam;
    double c = overrides.c.value_or(1.0);
    if (!(c > 0.0)) throw config_error("gap-start scale c must be positive");

    double persist = std::exp(-lam * scheme.gap_extend);
    double start = c * std::exp(-lam * (scheme.gap_open + scheme.gap_extend));
    double t_si = overrides.t_si.value_or(start);
    double t_sd = overrides.t_sd.value_or(start);
    double t_ii = overrides.t_ii.value_or(persist);
    double t_dd = overrides.t_dd.value_or(persist);
    double t_id = overrides.t_id.value_or(0.0);
    double t_di = overrides.t_di.value_or(0.0);
    for (double v : {t_si, t_sd, t_ii, t_dd, t_id, t_di})
        if (!(v >= 0.0) || !(v < 1.0))
            throw config_error("trial gap parameters must lie in [0,1)");
    double t_ss = 1.0 - t_si - t_sd;
    double t_is = 1.0 - t_ii - t_id;
    double t_ds = 1.0 - t_dd - t_di;
    if (t_ss < 0.0 || t_is < 0.0 || t_ds < 0.0)
        throw config_error("trial chain rows exceed probability 1; choose a smaller "
                           "gap-start scale c or smaller gap-atom entries");
    m.t = {{{t_ss, t_si, t_sd}, {t_is, t_ii, t_id}, {t_ds, t_di, t_dd}}};

    m.q.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    double qsum = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            double v = scheme.freq_a[static_cast<std::size_t>(a)] *
                       scheme.freq_b[static_cast<std::size_t>(b)] *
                       std::exp(lam * scheme.score(a, b));
            m.q[static_cast<std::size_t>(a) * static_cast<std::size_t>(n) +
                static_cast<std::size_t>(b)] = v;
            qsum += v;
        }
    for (double& v : m.q) v /= qsum;  // exact unit mass even off the conjugate point
    m.emit_a = scheme.freq_a;
    m.emit_b = scheme.freq_b;
    m.validate();
    m.build_tables();
    return m;
}

PathSample run_replicate(const ScoringScheme& scheme, const TrialModel& model,
                         int k_max, AlignmentFrontier& frontier, RngStream& rng) {
    if (k_max < 1) throw config_error("need at least one ladder epoch");
    const int n_alpha = scheme.alphabet.size();
    const int horizon = frontier.capacity();
    frontier.reset();
    PathSample out;
    int atom = TrialModel::kS;
    int i = 0, j = 0, n = 0;
    // Runaway guard: letter steps vastly exceeding the square horizon mean the
    // chain is stuck in gap atoms; record the sample censored rather than spin.
    const std::uint64_t step_cap =
        100ull * static_cast<std::uint64_t>(horizon) + 1000ull;
    std::uint64_t steps = 0;
    while (true) {
        ++steps;
        atom = model.t_table[static_cast<std::size_t>(atom)].sample(rng);
        out.atoms.push_back(static_cast<std::uint8_t>(atom));
        if (atom == TrialModel::kS) {
            int pair = model.q_table.sample(rng);
            int a = pair / n_alpha, b = pair % n_alpha;
            out.ia.push_back(a);
            out.ib.push_back(b);
            out.seq_a.push_back(scheme.alphabet.letter(a));
            out.seq_b.push_back(scheme.alphabet.letter(b));
            ++i;
            ++j;
        } else if (atom == TrialModel::kI) {
            int b = model.b_table.sample(rng);
            out.ib.push_back(b);
            out.seq_b.push_back(scheme.alphabet.letter(b));
            ++j;
        } else {
            int a = model.a_table.sample(rng);
            out.ia.push_back(a);
            out.seq_a.push_back(scheme.alphabet.letter(a));
            ++i;
        }
        bool stopped = false;
        while (n < std::min(i, j)) {
            double m = frontier.extend_idx(out.ia[static_cast<std::size_t>(n)],
                                           out.ib[static_cast<std::size_t>(n)]);
            ++n;
            if (out.ladder.update(n, m) && out.ladder.count() == k_max) {
                stopped = true;
                break;
            }
            if (n >= horizon) break;
        }
        if (stopped) {
            out.stop_n = n;
            out.censored = false;
            break;
        }
        if (n >= horizon || steps > step_cap) {
            out.stop_n = n;
            out.censored = true;
            break;
        }
    }
    return out;
}

}  // namespace gumbel
