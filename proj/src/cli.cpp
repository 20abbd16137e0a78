#include "gumbel/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gumbel/align.hpp"
#include "gumbel/errors.hpp"
#include "gumbel/estimator.hpp"
#include "gumbel/oracles.hpp"
#include "gumbel/scoring.hpp"
#include "gumbel/trial.hpp"
#include "gumbel/weights.hpp"

#ifndef GUMBEL_DATA_DIR
#define GUMBEL_DATA_DIR ""
#endif

namespace gumbel {
namespace {

using nlohmann::ordered_json;

// Shortest round-trip decimal form, shared by JSON and CSV output so the two
// formats never disagree on a value.
std::string fmt_num(double v) { return ordered_json(v).dump(); }

std::string resolve_data_path(const std::string& name) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (fs::exists(name, ec)) return name;
    std::vector<std::string> tried{name};
    if (const char* env = std::getenv("GUMBEL_DATA_DIR")) {
        fs::path p = fs::path(env) / name;
        if (fs::exists(p, ec)) return p.string();
        tried.push_back(p.string());
    }
    const std::string builtin = GUMBEL_DATA_DIR;
    if (!builtin.empty()) {
        fs::path p = fs::path(builtin) / name;
        if (fs::exists(p, ec)) return p.string();
        tried.push_back(p.string());
    }
    std::string msg = "cannot find data file; tried";
    for (const auto& t : tried) msg += " '" + t + "'";
    throw config_error(msg);
}

// A numeric option that knows whether anything (flag or config file) set it.
struct OptDouble {
    double value = 0.0;
    CLI::Option* opt = nullptr;
    bool from_config = false;
    bool set() const { return from_config || (opt != nullptr && opt->count() > 0); }
};

struct OptU64 {
    std::uint64_t value = 0;
    CLI::Option* opt = nullptr;
    bool from_config = false;
    bool set() const { return from_config || (opt != nullptr && opt->count() > 0); }
};

// Applies config-file values to options the command line left untouched and
// rejects unknown keys (they are usually typos).
class ConfigMerger {
  public:
    explicit ConfigMerger(const ordered_json& cfg, std::string scope)
        : cfg_(&cfg), scope_(std::move(scope)) {
        if (!cfg.is_object())
            throw config_error(scope_ + " must be a JSON object");
    }

    template <typename T>
    void value(const char* key, CLI::Option* opt, T& target) {
        if (!cfg_->contains(key)) return;
        used_.insert(key);
        if (opt != nullptr && opt->count() > 0) return;  // flags win
        assign(key, target);
    }

    void opt_double(const char* key, OptDouble& target) {
        if (!cfg_->contains(key)) return;
        used_.insert(key);
        if (target.opt != nullptr && target.opt->count() > 0) return;
        assign(key, target.value);
        target.from_config = true;
    }

    void opt_u64(const char* key, OptU64& target) {
        if (!cfg_->contains(key)) return;
        used_.insert(key);
        if (target.opt != nullptr && target.opt->count() > 0) return;
        assign(key, target.value);
        target.from_config = true;
    }

    const ordered_json* subobject(const char* key) {
        if (!cfg_->contains(key)) return nullptr;
        used_.insert(key);
        return &cfg_->at(key);
    }

    void finish() const {
        for (const auto& item : cfg_->items())
            if (used_.find(item.key()) == used_.end())
                throw config_error("unknown key '" + item.key() + "' in " + scope_);
    }

  private:
    template <typename T>
    void assign(const char* key, T& target) {
        try {
            target = cfg_->at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw config_error(scope_ + " key '" + std::string(key) +
                               "': " + e.what());
        }
    }

    const ordered_json* cfg_;
    std::string scope_;
    std::set<std::string> used_;
};

ordered_json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    try {
        return ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw config_error("config file '" + path + "' is not valid JSON: " +
                           e.what());
    }
}

// ---------- shared scheme options ----------

struct SchemeCli {
    std::string matrix = "BLOSUM62";
    std::string freq = "robinson.freq";
    std::string freq_b;
    std::string alphabet = "ARNDCQEGHILKMFPSTWYV";
    double gap_open = 11.0;
    double gap_extend = 1.0;
    CLI::Option* o_matrix = nullptr;
    CLI::Option* o_freq = nullptr;
    CLI::Option* o_freq_b = nullptr;
    CLI::Option* o_alphabet = nullptr;
    CLI::Option* o_open = nullptr;
    CLI::Option* o_extend = nullptr;

    void attach(CLI::App* cmd) {
        o_matrix = cmd->add_option(
                          "--matrix", matrix,
                          "Substitution matrix: a path, or a name looked up in "
                          "$GUMBEL_DATA_DIR and the bundled data directory")
                       ->capture_default_str();
        o_freq = cmd->add_option("--freq", freq,
                                 "Letter-frequency file used for both sequences")
                     ->capture_default_str();
        o_freq_b = cmd->add_option("--freq-b", freq_b,
                                   "Frequency file for sequence B when it differs "
                                   "from --freq");
        o_alphabet = cmd->add_option("--alphabet", alphabet,
                                     "Ordered alphabet letters")
                         ->capture_default_str();
        o_open = cmd->add_option("--gap-open", gap_open,
                                 "Gap start cost d0; a gap of g letters costs "
                                 "d0 + d1*g, so the defaults price it at 11 + g")
                     ->capture_default_str();
        o_extend = cmd->add_option("--gap-extend", gap_extend,
                                   "Per-letter gap cost d1")
                       ->capture_default_str();
    }

    void merge(ConfigMerger& m) {
        m.value("matrix", o_matrix, matrix);
        m.value("freq", o_freq, freq);
        m.value("freq-b", o_freq_b, freq_b);
        m.value("alphabet", o_alphabet, alphabet);
        m.value("gap-open", o_open, gap_open);
        m.value("gap-extend", o_extend, gap_extend);
    }

    struct Loaded {
        ScoringScheme scheme;
        std::string matrix_path, freq_path, freq_b_path;
    };

    Loaded load() const {
        Alphabet alpha(alphabet);
        std::string matrix_path = resolve_data_path(matrix);
        std::ifstream m(matrix_path);
        if (!m) throw config_error("cannot open matrix file '" + matrix_path + "'");
        std::vector<double> mat = parse_matrix(m, alpha);
        std::string freq_path = resolve_data_path(freq);
        std::ifstream f(freq_path);
        if (!f) throw config_error("cannot open frequency file '" + freq_path + "'");
        std::vector<double> fa = parse_frequencies(f, alpha);
        std::vector<double> fb = fa;
        std::string freq_b_path;
        if (!freq_b.empty()) {
            freq_b_path = resolve_data_path(freq_b);
            std::ifstream g(freq_b_path);
            if (!g)
                throw config_error("cannot open frequency file '" + freq_b_path +
                                   "'");
            fb = parse_frequencies(g, alpha);
        }
        return Loaded{make_scheme(alpha, std::move(mat), gap_open, gap_extend,
                                  std::move(fa), std::move(fb)),
                      matrix_path, freq_path, freq_b_path};
    }

    ordered_json echo(const Loaded& l) const {
        ordered_json s;
        s["digest"] = l.scheme.digest();
        s["alphabet"] = alphabet;
        s["matrix"] = l.matrix_path;
        s["frequencies"] = l.freq_path;
        if (!l.freq_b_path.empty()) s["frequencies_b"] = l.freq_b_path;
        s["gap_open"] = gap_open;
        s["gap_extend"] = gap_extend;
        return s;
    }

    std::string short_name() const {
        return std::filesystem::path(matrix).filename().string();
    }
};

// ---------- trial-model override options ----------

struct TrialCli {
    OptDouble c, tilt, t_si, t_sd, t_ii, t_dd, t_id, t_di;

    void attach(CLI::App* cmd) {
        c.opt = cmd->add_option("--trial-c", c.value,
                                "Scale on the chain's gap-start transitions "
                                "(default 1)");
        tilt.opt = cmd->add_option("--trial-tilt", tilt.value,
                                   "Exponent tilting the chain's pair emissions "
                                   "(default: the ungapped exponent)");
        t_si.opt = cmd->add_option("--trial-t-si", t_si.value, "Chain entry S->I");
        t_sd.opt = cmd->add_option("--trial-t-sd", t_sd.value, "Chain entry S->D");
        t_ii.opt = cmd->add_option("--trial-t-ii", t_ii.value, "Chain entry I->I");
        t_dd.opt = cmd->add_option("--trial-t-dd", t_dd.value, "Chain entry D->D");
        t_id.opt = cmd->add_option("--trial-t-id", t_id.value, "Chain entry I->D");
        t_di.opt = cmd->add_option("--trial-t-di", t_di.value, "Chain entry D->I");
    }

    void merge(ConfigMerger& top) {
        const ordered_json* sub = top.subobject("trial");
        if (sub == nullptr) return;
        ConfigMerger m(*sub, "config object 'trial'");
        m.opt_double("c", c);
        m.opt_double("tilt", tilt);
        m.opt_double("t-si", t_si);
        m.opt_double("t-sd", t_sd);
        m.opt_double("t-ii", t_ii);
        m.opt_double("t-dd", t_dd);
        m.opt_double("t-id", t_id);
        m.opt_double("t-di", t_di);
        m.finish();
    }

    TrialOverrides overrides() const {
        TrialOverrides ov;
        if (c.set()) ov.c = c.value;
        if (tilt.set()) ov.tilt_lambda = tilt.value;
        if (t_si.set()) ov.t_si = t_si.value;
        if (t_sd.set()) ov.t_sd = t_sd.value;
        if (t_ii.set()) ov.t_ii = t_ii.value;
        if (t_dd.set()) ov.t_dd = t_dd.value;
        if (t_id.set()) ov.t_id = t_id.value;
        if (t_di.set()) ov.t_di = t_di.value;
        return ov;
    }

    ordered_json echo(const TrialModel& model) const {
        ordered_json t;
        t["tilt_lambda"] = model.tilt_lambda;
        t["t"] = {{model.t[0][0], model.t[0][1], model.t[0][2]},
                  {model.t[1][0], model.t[1][1], model.t[1][2]},
                  {model.t[2][0], model.t[2][1], model.t[2][2]}};
        return t;
    }
};

// ---------- estimate ----------

struct EstimateOpts {
    SchemeCli scheme;
    TrialCli trial;
    std::string config_path;
    int k = 3;
    int k_prime = 4;
    OptU64 replicates;
    OptDouble seconds;
    std::uint64_t seed = 1;
    int horizon = 10000;
    int threads = 0;
    int batches = 0;
    bool single_weight = false;
    bool no_timing = false;
    int dump_trace = 0;
    double max_censored_fraction = 0.01;
    std::string format = "json";
    CLI::Option *o_k = nullptr, *o_kp = nullptr, *o_seed = nullptr,
                *o_horizon = nullptr, *o_threads = nullptr, *o_batches = nullptr,
                *o_sw = nullptr, *o_nt = nullptr, *o_mcf = nullptr,
                *o_format = nullptr, *o_dump = nullptr;
};

void attach_estimate(CLI::App* cmd, EstimateOpts& o) {
    o.scheme.attach(cmd);
    o.trial.attach(cmd);
    cmd->add_option("--config", o.config_path,
                    "JSON file supplying defaults for any flag not given on the "
                    "command line (flags win)");
    o.o_k = cmd->add_option("--k", o.k, "Lower ladder epoch of the balance")
                ->capture_default_str();
    o.o_kp = cmd->add_option("--k-prime", o.k_prime,
                             "Upper ladder epoch (sampling stops there)")
                 ->capture_default_str();
    o.replicates.opt =
        cmd->add_option("--replicates", o.replicates.value,
                        "Replicate budget (deterministic; excludes --seconds)");
    o.seconds.opt =
        cmd->add_option("--seconds", o.seconds.value,
                        "Wall-clock budget in seconds (default 1 when neither "
                        "budget is given)");
    o.o_seed = cmd->add_option("--seed", o.seed, "Campaign seed")
                   ->capture_default_str();
    o.o_horizon = cmd->add_option("--horizon", o.horizon,
                                  "Square-size safety horizon per replicate")
                      ->capture_default_str();
    o.o_threads = cmd->add_option("--threads", o.threads,
                                  "Worker threads (0 = library default)")
                      ->capture_default_str();
    o.o_batches = cmd->add_option("--batches", o.batches,
                                  "Split into B independent batches and report "
                                  "their mean and spread; bare --batches means "
                                  "200");
    o.o_batches->expected(0, 1)->default_str("200");
    o.o_sw = cmd->add_flag("--single-weight", o.single_weight,
                           "Weight both epochs with the stop-time weight "
                           "(diagnostic; biased)");
    o.o_nt = cmd->add_flag("--no-timing", o.no_timing,
                           "Report elapsed_seconds as 0 so reruns are "
                           "byte-identical");
    o.o_dump = cmd->add_option("--dump-trace", o.dump_trace,
                               "Write the first N replicate paths to stderr, "
                               "one tab-separated line each");
    o.o_mcf = cmd->add_option("--max-censored-fraction", o.max_censored_fraction,
                              "Abort when more than this fraction of replicates "
                              "hits the horizon")
                  ->capture_default_str();
    o.o_format = cmd->add_option("--format", o.format, "Report format")
                     ->check(CLI::IsMember({"json", "csv"}))
                     ->capture_default_str();
}

void merge_estimate(EstimateOpts& o) {
    if (o.config_path.empty()) return;
    ordered_json cfg = load_config_file(o.config_path);
    ConfigMerger m(cfg, "config file '" + o.config_path + "'");
    o.scheme.merge(m);
    o.trial.merge(m);
    m.value("k", o.o_k, o.k);
    m.value("k-prime", o.o_kp, o.k_prime);
    m.opt_u64("replicates", o.replicates);
    m.opt_double("seconds", o.seconds);
    m.value("seed", o.o_seed, o.seed);
    m.value("horizon", o.o_horizon, o.horizon);
    m.value("threads", o.o_threads, o.threads);
    m.value("batches", o.o_batches, o.batches);
    m.value("single-weight", o.o_sw, o.single_weight);
    m.value("no-timing", o.o_nt, o.no_timing);
    m.value("dump-trace", o.o_dump, o.dump_trace);
    m.value("max-censored-fraction", o.o_mcf, o.max_censored_fraction);
    m.value("format", o.o_format, o.format);
    m.finish();
}

void dump_traces(const ScoringScheme& scheme, const TrialModel& model, int k_max,
                 int horizon, std::uint64_t seed, int count, std::ostream& err) {
    AlignmentFrontier frontier(scheme, horizon);
    err << "# trace\treplicate\tatoms\tseq_a\tseq_b\tepochs\tscores\tstop_n\t"
           "censored\n";
    for (int rep = 0; rep < count; ++rep) {
        RngStream rng(seed, static_cast<std::uint64_t>(rep));
        PathSample s = run_replicate(scheme, model, k_max, frontier, rng);
        std::string atoms;
        for (std::uint8_t a : s.atoms) atoms.push_back("SID"[a]);
        std::string epochs, scores;
        for (std::size_t e = 0; e < s.ladder.epochs.size(); ++e) {
            if (e) {
                epochs.push_back(',');
                scores.push_back(',');
            }
            epochs += std::to_string(s.ladder.epochs[e]);
            scores += fmt_num(s.ladder.scores[e]);
        }
        err << "trace\t" << rep << '\t' << atoms << '\t' << s.seq_a << '\t'
            << s.seq_b << '\t' << epochs << '\t' << scores << '\t' << s.stop_n
            << '\t' << (s.censored ? 1 : 0) << '\n';
    }
}

ordered_json campaign_json(const CampaignResult& res, bool no_timing) {
    ordered_json r;
    r["lambda_hat"] = res.lambda_hat;
    r["stderr"] = res.stderr_;
    r["variance"] = res.variance;
    r["replicates"] = res.replicates;
    r["censored"] = res.censored;
    r["censored_fraction"] =
        res.replicates == 0
            ? 0.0
            : static_cast<double>(res.censored) / static_cast<double>(res.replicates);
    r["mean_stop_length"] = res.mean_stop_length;
    r["elapsed_seconds"] = no_timing ? 0.0 : res.elapsed_seconds;
    return r;
}

int cmd_estimate(EstimateOpts& o, std::ostream& out, std::ostream& err) {
    merge_estimate(o);
    if (o.k < 1) throw config_error("k must be at least 1");
    if (o.k >= o.k_prime) throw config_error("k must be less than k-prime");
    if (o.replicates.set() && o.seconds.set())
        throw config_error("give exactly one of --replicates and --seconds");
    if (o.batches < 0) throw config_error("batches must be nonnegative");
    if (o.threads < 0) throw config_error("threads must be nonnegative");
    if (o.dump_trace < 0) throw config_error("dump-trace must be nonnegative");
    if (o.format != "json" && o.format != "csv")
        throw config_error("format must be json or csv");

    SchemeCli::Loaded loaded = o.scheme.load();
    UngappedAnalytics ungapped = solve_lambda_star(loaded.scheme);
    TrialModel model = default_trial_model(loaded.scheme, ungapped,
                                           o.trial.overrides());

    CampaignConfig cfg;
    cfg.k = o.k;
    cfg.k_prime = o.k_prime;
    if (o.replicates.set())
        cfg.budget.replicates = o.replicates.value;
    else
        cfg.budget.seconds = o.seconds.set() ? o.seconds.value : 1.0;
    cfg.seed = o.seed;
    cfg.horizon = o.horizon;
    cfg.threads = o.threads;
    cfg.mode = o.single_weight ? WeightMode::kFinalEpoch : WeightMode::kPerEpoch;
    cfg.max_censored_fraction = o.max_censored_fraction;

    if (o.dump_trace > 0)
        dump_traces(loaded.scheme, model, cfg.k_prime, cfg.horizon, cfg.seed,
                    o.dump_trace, err);

    ordered_json rep;
    rep["schema_version"] = 1;
    rep["command"] = "estimate";
    double lambda_hat = 0.0, stderr_v = 0.0;
    std::uint64_t total_reps = 0, total_cens = 0;
    double mean_len = 0.0;

    if (o.batches == 0) {
        CampaignResult res = run_campaign(loaded.scheme, model, ungapped, cfg);
        ordered_json body = campaign_json(res, o.no_timing);
        rep.update(body);
        rep["stderr_kind"] = "asymptotic";
        lambda_hat = res.lambda_hat;
        stderr_v = res.stderr_;
        total_reps = res.replicates;
        total_cens = res.censored;
        mean_len = res.mean_stop_length;
    } else {
        std::vector<CampaignResult> results;
        results.reserve(static_cast<std::size_t>(o.batches));
        for (int b = 0; b < o.batches; ++b) {
            CampaignConfig bc = cfg;
            bc.first_replicate = static_cast<std::uint64_t>(b) << 32;
            results.push_back(run_campaign(loaded.scheme, model, ungapped, bc));
        }
        double mean = 0.0;
        for (const auto& r : results) mean += r.lambda_hat;
        mean /= static_cast<double>(o.batches);
        double ss = 0.0;
        for (const auto& r : results)
            ss += (r.lambda_hat - mean) * (r.lambda_hat - mean);
        double batch_se =
            o.batches > 1 ? std::sqrt(ss / (static_cast<double>(o.batches) *
                                            (static_cast<double>(o.batches) - 1.0)))
                          : 0.0;
        double len_sum = 0.0;
        ordered_json arr = ordered_json::array();
        for (int b = 0; b < o.batches; ++b) {
            const auto& r = results[static_cast<std::size_t>(b)];
            ordered_json one = campaign_json(r, o.no_timing);
            one["first_replicate"] = static_cast<std::uint64_t>(b) << 32;
            arr.push_back(std::move(one));
            total_reps += r.replicates;
            total_cens += r.censored;
            len_sum += r.mean_stop_length * static_cast<double>(r.replicates -
                                                                r.censored);
        }
        std::uint64_t kept = 0;
        for (const auto& r : results) kept += r.replicates - r.censored;
        mean_len = kept == 0 ? 0.0 : len_sum / static_cast<double>(kept);
        lambda_hat = mean;
        stderr_v = batch_se;
        rep["lambda_hat"] = mean;
        rep["stderr"] = batch_se;
        rep["stderr_kind"] = "batch";
        rep["replicates"] = total_reps;
        rep["censored"] = total_cens;
        rep["censored_fraction"] =
            total_reps == 0 ? 0.0
                            : static_cast<double>(total_cens) /
                                  static_cast<double>(total_reps);
        rep["mean_stop_length"] = mean_len;
        rep["batch_count"] = o.batches;
        rep["batches"] = std::move(arr);
    }

    rep["k"] = o.k;
    rep["k_prime"] = o.k_prime;
    if (o.replicates.set())
        rep["budget"] = ordered_json{{"replicates", o.replicates.value}};
    else
        rep["budget"] =
            ordered_json{{"seconds", o.seconds.set() ? o.seconds.value : 1.0}};
    rep["seed"] = o.seed;
    rep["horizon"] = o.horizon;
    rep["weight_mode"] = o.single_weight ? "final-epoch" : "per-epoch";
    rep["ungapped_lambda"] = ungapped.lambda_star;
    rep["ungapped_mu"] = ungapped.mu_star;
    rep["scheme"] = o.scheme.echo(loaded);
    rep["trial"] = o.trial.echo(model);

    if (o.format == "json") {
        out << rep.dump(2) << '\n';
    } else {
        out << "scheme,gap_open,gap_extend,lambda_hat,stderr,pairs,mean_length\n";
        out << o.scheme.short_name() << ',' << fmt_num(o.scheme.gap_open) << ','
            << fmt_num(o.scheme.gap_extend) << ',' << fmt_num(lambda_hat) << ','
            << fmt_num(stderr_v) << ',' << total_reps << ',' << fmt_num(mean_len)
            << '\n';
    }
    return 0;
}

// ---------- crude ----------

struct CrudeOpts {
    SchemeCli scheme;
    int k = 4;
    int horizon = 400;
    std::uint64_t replicates = 100000;
    std::uint64_t seed = 1;
    int threads = 0;
};

int cmd_crude(const CrudeOpts& o, std::ostream& out) {
    SchemeCli::Loaded loaded = o.scheme.load();
    CrudeResult res = crude_mc_ladder(loaded.scheme, o.k, o.horizon, o.replicates,
                                      o.seed, o.threads);
    ordered_json rep;
    rep["schema_version"] = 1;
    rep["command"] = "crude";
    rep["k"] = o.k;
    rep["horizon"] = o.horizon;
    rep["replicates"] = o.replicates;
    rep["seed"] = o.seed;
    rep["fraction_reached"] = res.fraction_reached;
    rep["fraction_se"] = res.fraction_se;
    rep["scheme"] = o.scheme.echo(loaded);
    out << rep.dump(2) << '\n';
    return 0;
}

// ---------- validate-weights ----------

struct ValidateWeightsOpts {
    int instances = 100;
    std::uint64_t seed = 1;
    int max_n = 5;
    int terms = 500;
    double threshold = 1e-9;
};

double rel_err(double a, double b) {
    double scale = std::max(std::abs(a), std::abs(b));
    if (scale < 1e-280) return 0.0;
    return std::abs(a - b) / scale;
}

int cmd_validate_weights(const ValidateWeightsOpts& o, std::ostream& out) {
    if (o.instances < 1) throw config_error("instances must be at least 1");
    if (o.max_n < 1 || o.max_n > EnumLimits{}.max_n)
        throw config_error("max-n must be between 1 and " +
                           std::to_string(EnumLimits{}.max_n));
    double worst = 0.0;
    std::uint64_t worst_instance = 0;
    std::string worst_quantity = "none";
    auto note = [&](double e, std::uint64_t idx, const char* what) {
        if (e > worst) {
            worst = e;
            worst_instance = idx;
            worst_quantity = what;
        }
    };
    for (std::uint64_t idx = 0; idx < static_cast<std::uint64_t>(o.instances);
         ++idx) {
        SmallInstance inst = random_small_instance(o.seed, idx, o.max_n);
        const int n = static_cast<int>(inst.seq_a.size());
        WeightFrontier wf(inst.scheme, inst.model, n);
        // Background probabilities of the letter prefixes.
        std::vector<double> pa(static_cast<std::size_t>(n) + 1, 1.0);
        std::vector<double> pb(static_cast<std::size_t>(n) + 1, 1.0);
        for (int i = 1; i <= n; ++i) {
            int a = inst.scheme.alphabet.index_of(inst.seq_a[static_cast<std::size_t>(i - 1)]);
            int b = inst.scheme.alphabet.index_of(inst.seq_b[static_cast<std::size_t>(i - 1)]);
            pa[static_cast<std::size_t>(i)] =
                pa[static_cast<std::size_t>(i - 1)] *
                inst.scheme.freq_a[static_cast<std::size_t>(a)];
            pb[static_cast<std::size_t>(i)] =
                pb[static_cast<std::size_t>(i - 1)] *
                inst.scheme.freq_b[static_cast<std::size_t>(b)];
        }
        for (int m = 1; m <= n; ++m) {
            wf.extend(inst.seq_a[static_cast<std::size_t>(m - 1)],
                      inst.seq_b[static_cast<std::size_t>(m - 1)]);
            const double sc = std::ldexp(1.0, wf.scale_exp());
            for (int i = 0; i <= m; ++i) {
                double ps = pa[static_cast<std::size_t>(i)] *
                            pb[static_cast<std::size_t>(m)];
                note(rel_err(wf.col_WS()[i] * sc * ps,
                             enum_cell_mass(inst.scheme, inst.model, inst.seq_a,
                                            inst.seq_b, TrialModel::kS, i, m)),
                     idx, "cell S");
                note(rel_err(wf.col_WI()[i] * sc * ps,
                             enum_cell_mass(inst.scheme, inst.model, inst.seq_a,
                                            inst.seq_b, TrialModel::kI, i, m)),
                     idx, "cell I");
                note(rel_err(wf.col_WD()[i] * sc * ps,
                             enum_cell_mass(inst.scheme, inst.model, inst.seq_a,
                                            inst.seq_b, TrialModel::kD, i, m)),
                     idx, "cell D");
            }
            for (int j = 0; j < m; ++j) {
                double ps = pa[static_cast<std::size_t>(m)] *
                            pb[static_cast<std::size_t>(j)];
                note(rel_err(wf.row_WS()[j] * sc * ps,
                             enum_cell_mass(inst.scheme, inst.model, inst.seq_a,
                                            inst.seq_b, TrialModel::kS, m, j)),
                     idx, "cell S");
                note(rel_err(wf.row_WI()[j] * sc * ps,
                             enum_cell_mass(inst.scheme, inst.model, inst.seq_a,
                                            inst.seq_b, TrialModel::kI, m, j)),
                     idx, "cell I");
                note(rel_err(wf.row_WD()[j] * sc * ps,
                             enum_cell_mass(inst.scheme, inst.model, inst.seq_a,
                                            inst.seq_b, TrialModel::kD, m, j)),
                     idx, "cell D");
            }
        }
        // Assembled reciprocal weight against both enumeration engines.
        EpochWeight ew = epoch_weight(wf, 1);
        double pf = pa[static_cast<std::size_t>(n)] * pb[static_cast<std::size_t>(n)];
        double killed_dfs = 0.0, killed_bfs = 0.0;
        double dfs = enum_stop_mass_dfs(inst.scheme, inst.model, inst.seq_a,
                                        inst.seq_b, &killed_dfs);
        double bfs = enum_stop_mass_bfs(inst.scheme, inst.model, inst.seq_a,
                                        inst.seq_b, &killed_bfs);
        note(rel_err(ew.inv_w, dfs / pf), idx, "stop mass (depth-first)");
        note(rel_err(ew.inv_w, bfs / pf), idx, "stop mass (wavefront)");
        note(rel_err(dfs, bfs), idx, "engine cross-check");
        // Tail closures against literal strip sums.
        TailSums u = tail_sums_row(wf);
        TailSums v = tail_sums_col(wf);
        StripSums us = strip_tail_sums_row(inst.scheme, inst.model, inst.seq_a,
                                           inst.seq_b, o.terms);
        StripSums vs = strip_tail_sums_col(inst.scheme, inst.model, inst.seq_a,
                                           inst.seq_b, o.terms);
        const double sc = std::ldexp(1.0, wf.scale_exp());
        for (int i = 0; i <= n; ++i) {
            note(rel_err(u.S[static_cast<std::size_t>(i)] * sc,
                         us.S[static_cast<std::size_t>(i)]),
                 idx, "row tail S");
            note(rel_err(u.I[static_cast<std::size_t>(i)] * sc,
                         us.I[static_cast<std::size_t>(i)]),
                 idx, "row tail I");
            note(rel_err(u.D[static_cast<std::size_t>(i)] * sc,
                         us.D[static_cast<std::size_t>(i)]),
                 idx, "row tail D");
            note(rel_err(v.S[static_cast<std::size_t>(i)] * sc,
                         vs.S[static_cast<std::size_t>(i)]),
                 idx, "col tail S");
            note(rel_err(v.I[static_cast<std::size_t>(i)] * sc,
                         vs.I[static_cast<std::size_t>(i)]),
                 idx, "col tail I");
            note(rel_err(v.D[static_cast<std::size_t>(i)] * sc,
                         vs.D[static_cast<std::size_t>(i)]),
                 idx, "col tail D");
        }
    }
    bool pass = worst <= o.threshold;
    ordered_json rep;
    rep["schema_version"] = 1;
    rep["command"] = "validate-weights";
    rep["instances"] = o.instances;
    rep["seed"] = o.seed;
    rep["max_n"] = o.max_n;
    rep["strip_terms"] = o.terms;
    rep["max_rel_error"] = worst;
    rep["threshold"] = o.threshold;
    rep["worst_instance"] = worst_instance;
    rep["worst_quantity"] = worst_quantity;
    rep["pass"] = pass;
    out << rep.dump(2) << '\n';
    return pass ? 0 : 1;
}

// ---------- validate-map ----------

struct ValidateMapOpts {
    std::string map_path;
    int k = 1;
    int k_prime = 2;
    std::uint64_t replicates = 10000;
    std::uint64_t seed = 1;
    int threads = 0;
};

int cmd_validate_map(const ValidateMapOpts& o, std::ostream& out) {
    if (o.k >= o.k_prime) throw config_error("k must be less than k-prime");
    FiniteMap map = load_finite_map_file(o.map_path);
    MapCheck chk = map_estimator_check(map, o.k, o.k_prime, o.replicates, o.seed,
                                       o.threads);
    ordered_json rep;
    rep["schema_version"] = 1;
    rep["command"] = "validate-map";
    rep["map"] = o.map_path;
    rep["phases"] = map.n;
    rep["stationary_drift"] = map.stationary_drift;
    rep["k"] = o.k;
    rep["k_prime"] = o.k_prime;
    rep["replicates"] = o.replicates;
    rep["seed"] = o.seed;
    rep["lambda_exact"] = chk.lambda_ref;
    rep["lambda_hat"] = chk.lambda_hat;
    rep["stderr"] = chk.stderr_;
    rep["z"] = chk.stderr_ > 0.0
                   ? (chk.lambda_hat - chk.lambda_ref) / chk.stderr_
                   : 0.0;
    out << rep.dump(2) << '\n';
    return 0;
}

// ---------- dump-dp ----------

struct DumpDpOpts {
    SchemeCli scheme;
    std::string seq_a, seq_b;
};

std::string cell_text(const NaiveDp& dp, double v) {
    if (dp.is_ninf(v)) return "-inf";
    if (v == std::floor(v) && std::abs(v) < 1e15)
        return std::to_string(static_cast<long long>(v));
    return fmt_num(v);
}

int cmd_dump_dp(const DumpDpOpts& o, std::ostream& out) {
    if (o.seq_a.empty() || o.seq_b.empty())
        throw config_error("--seq-a and --seq-b must be nonempty");
    SchemeCli::Loaded loaded = o.scheme.load();
    NaiveDp dp = naive_dp(o.seq_a, o.seq_b, loaded.scheme);
    out << "# best global score by cell (rows: sequence A; columns: sequence B)\n";
    out << '.';
    out << "\t-";
    for (char b : o.seq_b) out << '\t' << b;
    out << '\n';
    for (int i = 0; i <= dp.len_a; ++i) {
        out << (i == 0 ? '-' : o.seq_a[static_cast<std::size_t>(i - 1)]);
        for (int j = 0; j <= dp.len_b; ++j) out << '\t' << cell_text(dp, dp.g(i, j));
        out << '\n';
    }
    const int nmax = std::min(dp.len_a, dp.len_b);
    LadderTrace trace;
    out << "# edge_maxima";
    for (int n = 1; n <= nmax; ++n) {
        double m = dp.edge_max(n);
        trace.update(n, m);
        out << '\t' << cell_text(dp, m);
    }
    out << '\n';
    out << "# ladder_epochs";
    for (int e : trace.epochs) out << '\t' << e;
    out << '\n';
    out << "# ladder_scores";
    for (double s : trace.scores) out << '\t' << cell_text(dp, s);
    out << '\n';
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
    CLI::App app{
        "Estimates the Gumbel scale of gapped local alignment scores by "
        "importance sampling of global-alignment ladder epochs.\n"
        "Gap convention: a run of g gapped letters costs gap-open + "
        "gap-extend*g."};
    app.name("gumbel_lambda");
    app.require_subcommand(1);

    EstimateOpts est;
    CLI::App* c_est = app.add_subcommand(
        "estimate", "Estimate the Gumbel scale for a scoring scheme");
    attach_estimate(c_est, est);

    CrudeOpts crude;
    CLI::App* c_crude = app.add_subcommand(
        "crude", "Direct Monte Carlo: fraction of sequence pairs reaching each "
                 "ladder epoch");
    crude.scheme.attach(c_crude);
    c_crude->add_option("--k", crude.k, "Deepest ladder epoch to track")
        ->capture_default_str();
    c_crude->add_option("--horizon", crude.horizon, "Square-size horizon")
        ->capture_default_str();
    c_crude->add_option("--replicates", crude.replicates, "Replicate count")
        ->capture_default_str();
    c_crude->add_option("--seed", crude.seed, "Seed")->capture_default_str();
    c_crude->add_option("--threads", crude.threads,
                        "Worker threads (0 = library default)")
        ->capture_default_str();

    ValidateWeightsOpts vw;
    CLI::App* c_vw = app.add_subcommand(
        "validate-weights", "Cross-check the weight recursions against "
                            "exhaustive path enumeration on small instances");
    c_vw->add_option("--instances", vw.instances, "Random instances to check")
        ->capture_default_str();
    c_vw->add_option("--seed", vw.seed, "Seed")->capture_default_str();
    c_vw->add_option("--max-n", vw.max_n, "Largest square size")
        ->capture_default_str();
    c_vw->add_option("--terms", vw.terms, "Strip terms for the tail oracle")
        ->capture_default_str();
    c_vw->add_option("--threshold", vw.threshold,
                     "Largest allowed relative error")
        ->capture_default_str();

    ValidateMapOpts vm;
    CLI::App* c_vm = app.add_subcommand(
        "validate-map", "Run the estimator on a finite phase chain with a "
                        "computable exact exponent");
    c_vm->add_option("--map", vm.map_path, "Chain description (JSON)")
        ->required();
    c_vm->add_option("--k", vm.k, "Lower ladder epoch")->capture_default_str();
    c_vm->add_option("--k-prime", vm.k_prime, "Upper ladder epoch")
        ->capture_default_str();
    c_vm->add_option("--replicates", vm.replicates, "Replicate count")
        ->capture_default_str();
    c_vm->add_option("--seed", vm.seed, "Seed")->capture_default_str();
    c_vm->add_option("--threads", vm.threads,
                     "Worker threads (0 = library default)")
        ->capture_default_str();

    DumpDpOpts dd;
    CLI::App* c_dd = app.add_subcommand(
        "dump-dp", "Print the full alignment score table, edge maxima, and "
                   "ladder epochs for a fixed sequence pair");
    dd.scheme.attach(c_dd);
    c_dd->add_option("--seq-a", dd.seq_a, "Sequence A letters")->required();
    c_dd->add_option("--seq-b", dd.seq_b, "Sequence B letters")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (c_est->parsed()) return cmd_estimate(est, out, err);
        if (c_crude->parsed()) return cmd_crude(crude, out);
        if (c_vw->parsed()) return cmd_validate_weights(vw, out);
        if (c_vm->parsed()) return cmd_validate_map(vm, out);
        if (c_dd->parsed()) return cmd_dump_dp(dd, out);
    } catch (const config_error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const compute_error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace gumbel
