#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace urlab::analysis {

// Interquartile mean with fractional trimming: drop the lowest and highest
// quarter, weighting boundary scores linearly when n/4 is not integral.
double iqm(std::span<const double> scores);

double mean(std::span<const double> scores);
double median(std::span<const double> scores);

// Mean shortfall of expert-normalized scores below 1.0.
double optimality_gap(std::span<const double> scores);

// (task x seed) score table; rectangular by construction.
struct RunMatrix {
    std::vector<std::string> tasks;
    std::vector<std::string> seeds;
    std::vector<std::vector<double>> scores;  // [task][seed]

    std::vector<double> flatten() const;
    static RunMatrix from_csv(const std::filesystem::path& path);  // columns task,seed,score
    void to_csv(const std::filesystem::path& path) const;
};

enum class Statistic { Iqm, Mean, Median, OptimalityGap };

double evaluate_statistic(Statistic stat, std::span<const double> scores);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Stratified bootstrap: seeds resampled with replacement within each task.
Interval bootstrap_ci(const RunMatrix& matrix, Statistic stat, int n_resamples = 2000, double level = 0.95,
                      std::uint64_t seed = 0);

}  // namespace urlab::analysis
