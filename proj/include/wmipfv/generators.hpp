/**
 * Seeded synthetic data: the income population (with an optional wage
 * penalty for the protected group) and the random linear-teacher benchmark.
 */
#ifndef WMIPFV_GENERATORS_HPP
#define WMIPFV_GENERATORS_HPP

#include <algorithm>
#include <random>

#include "io.hpp"

namespace wmipfv {

struct IncomeConfig
{
    bool biased = false;
    std::size_t n_train_prior = 10000, n_train_sys = 10000, n_test = 2000;
    std::uint64_t seed = 0;
};

struct IncomeData
{
    Dataset prior_train, system_train, test;
};

/** Columns female:bool, hpw:real, yexp:real, hw:real, y:bool. */
inline Dataset sample_income(std::size_t n, bool biased, std::mt19937_64& rng)
{
    Dataset d;
    d.names = {"female", "hpw", "yexp", "hw", "y"};
    d.sorts = {Sort::boolean, Sort::real, Sort::real, Sort::real, Sort::boolean};
    std::bernoulli_distribution female_d(0.5);
    std::normal_distribution<double> hpw_d(7, 1), yexp_d(20, 7), wage_noise(1, 0.02), penalty(0.1, 0.02);
    d.rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        bool female = female_d(rng);
        double hpw = 5 * std::clamp(hpw_d(rng), 2.0, 12.0);
        double yexp = std::clamp(yexp_d(rng), 0.0, 55.0);
        double hw = wage_noise(rng) * (500 * yexp + 30000) / 1920;
        if (biased)
            hw += hw * penalty(rng) * (1 - 2 * double(female));
        double income = 48 * hpw * hw;
        d.rows.push_back({double(female), hpw, yexp, hw, double(income > 35000)});
    }
    return d;
}

inline IncomeData gen_income_data(const IncomeConfig& cfg)
{
    if (cfg.n_train_prior == 0 || cfg.n_train_sys == 0 || cfg.n_test == 0)
        throw Error("income dataset sizes must be positive");
    std::mt19937_64 rng(cfg.seed);
    IncomeData out;
    out.prior_train = sample_income(cfg.n_train_prior, cfg.biased, rng);
    out.system_train = sample_income(cfg.n_train_sys, cfg.biased, rng);
    out.test = sample_income(cfg.n_test, cfg.biased, rng);
    return out;
}

struct SyntheticBenchmark
{
    /** Entries in {−1, 0, 1}, n_inputs × m. */
    std::vector<std::vector<int>> m1;
    /** Entries in {−1, 1}, length m. */
    std::vector<int> m2;
    /** Columns x0..x{N-1}:real, y:bool. */
    Dataset data;
};

/** y = ((x·M1)·M2 ≥ 0) for x ~ N(0, I). */
inline bool benchmark_label(const std::vector<std::vector<int>>& m1, const std::vector<int>& m2, const std::vector<double>& x)
{
    double s = 0;
    for (std::size_t j = 0; j < m2.size(); ++j) {
        double h = 0;
        for (std::size_t i = 0; i < x.size(); ++i)
            h += x[i] * m1[i][j];
        s += h * m2[j];
    }
    return s >= 0;
}

inline Dataset sample_benchmark(const std::vector<std::vector<int>>& m1, const std::vector<int>& m2, std::size_t n, std::mt19937_64& rng)
{
    std::size_t n_inputs = m1.size();
    Dataset d;
    for (std::size_t i = 0; i < n_inputs; ++i) {
        d.names.push_back("x" + std::to_string(i));
        d.sorts.push_back(Sort::real);
    }
    d.names.push_back("y");
    d.sorts.push_back(Sort::boolean);
    std::normal_distribution<double> normal(0, 1);
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<double> x(n_inputs);
        for (auto& v : x)
            v = normal(rng);
        bool y = benchmark_label(m1, m2, x);
        x.push_back(double(y));
        d.rows.push_back(std::move(x));
    }
    return d;
}

inline SyntheticBenchmark gen_synthetic_benchmark(std::size_t n_inputs, std::size_t m, std::size_t n_samples, std::uint64_t seed)
{
    if (n_inputs == 0 || m == 0)
        throw Error("benchmark dimensions must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> three(-1, 1), two(0, 1);
    SyntheticBenchmark b;
    b.m1.assign(n_inputs, std::vector<int>(m));
    for (auto& row : b.m1)
        for (auto& v : row)
            v = three(rng);
    b.m2.resize(m);
    for (auto& v : b.m2)
        v = two(rng) ? 1 : -1;
    b.data = sample_benchmark(b.m1, b.m2, n_samples, rng);
    return b;
}

} // namespace wmipfv

#endif
