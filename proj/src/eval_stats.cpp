#include "urlab/eval_stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "urlab/csv.hpp"
#include "urlab/errors.hpp"
#include "urlab/rng.hpp"

namespace urlab::analysis {

double iqm(std::span<const double> scores) {
    if (scores.size() < 4) throw std::invalid_argument("iqm: need at least 4 scores");
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    const double trim = n / 4.0;
    double total = 0.0;
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        // overlap of [i, i+1) with the kept band [trim, n - trim)
        const double lo = std::max(static_cast<double>(i), trim);
        const double hi = std::min(static_cast<double>(i + 1), n - trim);
        const double w = std::max(0.0, hi - lo);
        total += w * sorted[i];
        weight_sum += w;
    }
    return total / weight_sum;
}

double mean(std::span<const double> scores) {
    if (scores.empty()) throw std::invalid_argument("mean: empty");
    double acc = 0.0;
    for (double s : scores) acc += s;
    return acc / static_cast<double>(scores.size());
}

double median(std::span<const double> scores) {
    if (scores.empty()) throw std::invalid_argument("median: empty");
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    return (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

double optimality_gap(std::span<const double> scores) {
    if (scores.empty()) throw std::invalid_argument("optimality_gap: empty");
    double acc = 0.0;
    for (double s : scores) acc += std::max(0.0, 1.0 - s);
    return acc / static_cast<double>(scores.size());
}

std::vector<double> RunMatrix::flatten() const {
    std::vector<double> out;
    for (const auto& row : scores) out.insert(out.end(), row.begin(), row.end());
    return out;
}

RunMatrix RunMatrix::from_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const int c_task = table.column("task");
    const int c_seed = table.column("seed");
    int c_score = table.column("normalized_return");
    if (c_score < 0) c_score = table.column("score");
    if (c_task < 0 || c_seed < 0 || c_score < 0)
        throw ConfigError(path.string() + ": need columns task, seed, normalized_return (or score)");

    std::map<std::string, std::map<std::string, double>> by_task;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string ctx = path.string() + " row " + std::to_string(r + 2);
        by_task[row[c_task]][row[c_seed]] = csv::to_double(row[c_score], ctx);
    }
    RunMatrix m;
    std::vector<std::string> seed_labels;
    for (const auto& [task, seeds] : by_task) {
        if (seed_labels.empty())
            for (const auto& [seed, _] : seeds) seed_labels.push_back(seed);
        if (seeds.size() != seed_labels.size())
            throw ConfigError(path.string() + ": task '" + task + "' has " + std::to_string(seeds.size()) +
                              " seeds, expected " + std::to_string(seed_labels.size()));
        std::vector<double> row;
        for (const auto& label : seed_labels) {
            auto it = seeds.find(label);
            if (it == seeds.end())
                throw ConfigError(path.string() + ": task '" + task + "' is missing seed '" + label + "'");
            row.push_back(it->second);
        }
        m.tasks.push_back(task);
        m.scores.push_back(std::move(row));
    }
    m.seeds = seed_labels;
    if (m.tasks.empty()) throw ConfigError(path.string() + ": empty run matrix");
    return m;
}

void RunMatrix::to_csv(const std::filesystem::path& path) const {
    csv::Writer out(path, {"task", "seed", "normalized_return"});
    for (std::size_t t = 0; t < tasks.size(); ++t)
        for (std::size_t s = 0; s < seeds.size(); ++s)
            out.row_raw({tasks[t], seeds[s], csv::format_double(scores[t][s])});
}

double evaluate_statistic(Statistic stat, std::span<const double> scores) {
    switch (stat) {
        case Statistic::Iqm: return iqm(scores);
        case Statistic::Mean: return mean(scores);
        case Statistic::Median: return median(scores);
        case Statistic::OptimalityGap: return optimality_gap(scores);
    }
    throw std::invalid_argument("unknown statistic");
}

Interval bootstrap_ci(const RunMatrix& matrix, Statistic stat, int n_resamples, double level, std::uint64_t seed) {
    if (matrix.tasks.empty() || matrix.seeds.empty()) throw std::invalid_argument("bootstrap: empty matrix");
    if (n_resamples < 1) throw std::invalid_argument("bootstrap: need resamples");
    if (level <= 0.0 || level >= 1.0) throw std::invalid_argument("bootstrap: level must be in (0,1)");
    Rng rng = make_rng(seed, 0xb007);
    const std::size_t n_seeds = matrix.seeds.size();
    std::uniform_int_distribution<std::size_t> pick(0, n_seeds - 1);
    std::vector<double> stats(n_resamples);
    std::vector<double> pooled;
    pooled.reserve(matrix.tasks.size() * n_seeds);
    for (int r = 0; r < n_resamples; ++r) {
        pooled.clear();
        for (const auto& row : matrix.scores)
            for (std::size_t s = 0; s < n_seeds; ++s) pooled.push_back(row[pick(rng)]);
        stats[r] = evaluate_statistic(stat, pooled);
    }
    std::sort(stats.begin(), stats.end());
    const double alpha = (1.0 - level) / 2.0;
    auto percentile = [&](double q) {
        const double pos = q * (n_resamples - 1);
        const std::size_t i = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(i);
        return (i + 1 < stats.size()) ? stats[i] * (1.0 - frac) + stats[i + 1] * frac : stats[i];
    };
    return {percentile(alpha), percentile(1.0 - alpha)};
}

}  // namespace urlab::analysis
