#include <benchmark/benchmark.h>

#include <fstream>
#include <string>
#include <vector>

#include "gumbel/align.hpp"
#include "gumbel/estimator.hpp"
#include "gumbel/rng.hpp"
#include "gumbel/scoring.hpp"
#include "gumbel/trial.hpp"

using namespace gumbel;

namespace {

ScoringScheme protein_scheme() {
    Alphabet alphabet("ARNDCQEGHILKMFPSTWYV");
    std::ifstream mf(std::string(GUMBEL_DATA_DIR) + "/BLOSUM62");
    std::vector<double> matrix = parse_matrix(mf, alphabet);
    std::ifstream ff(std::string(GUMBEL_DATA_DIR) + "/robinson.freq");
    std::vector<double> freq = parse_frequencies(ff, alphabet);
    return make_scheme(alphabet, matrix, 11.0, 1.0, freq, freq);
}

std::string random_letters(const ScoringScheme& s, RngStream& rng, int n) {
    std::string out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        int idx = static_cast<int>(rng.uniform() *
                                   static_cast<double>(s.alphabet.size()));
        if (idx >= s.alphabet.size()) idx = s.alphabet.size() - 1;
        out.push_back(s.alphabet.letter(idx));
    }
    return out;
}

void BM_CampaignSerial(benchmark::State& state) {
    ScoringScheme s = protein_scheme();
    UngappedAnalytics u = solve_lambda_star(s);
    TrialModel model = default_trial_model(s, u);
    const auto count = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) {
        auto recs = run_replicates_serial(s, model, 4, 10000, 1, 0, count);
        benchmark::DoNotOptimize(recs.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(count));
}

void BM_CampaignOmp(benchmark::State& state) {
    ScoringScheme s = protein_scheme();
    UngappedAnalytics u = solve_lambda_star(s);
    TrialModel model = default_trial_model(s, u);
    const auto count = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) {
        auto recs = run_replicates(s, model, 4, 10000, 1, 0, count, 0);
        benchmark::DoNotOptimize(recs.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(count));
}

void BM_FrontierExtend(benchmark::State& state) {
    ScoringScheme s = protein_scheme();
    const int n = static_cast<int>(state.range(0));
    RngStream rng(7, 0);
    std::string a = random_letters(s, rng, n);
    std::string b = random_letters(s, rng, n);
    AlignmentFrontier fr(s, n);
    for (auto _ : state) {
        fr.reset();
        for (int i = 0; i < n; ++i)
            fr.extend(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(i)]);
        benchmark::DoNotOptimize(fr.m_trace().data());
    }
    // One square step costs O(n); a full run of n steps is O(n^2) cells.
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(n) *
                            static_cast<std::int64_t>(n));
}

void BM_NaiveDp(benchmark::State& state) {
    ScoringScheme s = protein_scheme();
    const int n = static_cast<int>(state.range(0));
    RngStream rng(7, 0);
    std::string a = random_letters(s, rng, n);
    std::string b = random_letters(s, rng, n);
    for (auto _ : state) {
        NaiveDp dp = naive_dp(a, b, s);
        benchmark::DoNotOptimize(dp.edge_max(n));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(n) *
                            static_cast<std::int64_t>(n));
}

}  // namespace

BENCHMARK(BM_CampaignSerial)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CampaignOmp)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FrontierExtend)->Arg(64)->Arg(256);
BENCHMARK(BM_NaiveDp)->Arg(64)->Arg(256);

BENCHMARK_MAIN();
