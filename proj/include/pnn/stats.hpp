#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "pnn/error.hpp"
#include "pnn/special.hpp"

namespace pnn {

/// A labelled group of observations (test error percentages).
struct Sample {
    std::string label;
    std::vector<double> values;
};

/// Outcome of a nonparametric hypothesis test.
struct TestResult {
    double statistic = 0.0;
    double p_value = 0.0;
    std::string method;      // e.g. "mann-whitney-u normal-approx continuity tie-corrected"
    double df = 0.0;         // chi-square tests only
    bool tie_corrected = false;
    bool exact = false;
    bool continuity = false;
    // Secondary values callers sometimes want.
    double statistic_other = 0.0;    // U of the second sample
    double statistic_uncorrected = 0.0; // H before tie correction
};

/// Midranks: tied values get the average of the rank positions they
/// occupy. Ranks are 1-based; their sum is always N(N+1)/2.
inline std::vector<double> ranks_with_ties(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j) + 1.0; // average of positions i..j, 1-based
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
        i = j + 1;
    }
    return ranks;
}

namespace detail {

// Sum of t^3 - t over tie groups of the pooled sample.
inline double tie_term(const std::vector<double>& pooled) {
    std::map<double, std::size_t> counts;
    for (double v : pooled) ++counts[v];
    double s = 0.0;
    for (const auto& [v, t] : counts) {
        (void)v;
        if (t > 1) s += static_cast<double>(t) * t * t - static_cast<double>(t);
    }
    return s;
}

// Advances c to the next k-combination of {0..n-1} in lexicographic order.
inline bool next_combination(std::vector<std::size_t>& c, std::size_t n) {
    const std::size_t k = c.size();
    for (std::size_t i = k; i-- > 0;) {
        if (c[i] < n - k + i) {
            ++c[i];
            for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
            return true;
        }
    }
    return false;
}

} // namespace detail

/// Kruskal-Wallis H test over k >= 2 groups. The reported statistic is
/// tie-corrected (the uncorrected value is kept alongside); the p-value
/// comes from the chi-square survival function with k-1 degrees of
/// freedom.
inline TestResult kruskal_wallis(const std::vector<Sample>& groups) {
    if (groups.size() < 2) throw ConfigError("kruskal_wallis: need at least 2 groups");
    std::vector<double> pooled;
    for (const auto& g : groups) {
        if (g.values.empty())
            throw ConfigError("kruskal_wallis: group '" + g.label + "' is empty");
        pooled.insert(pooled.end(), g.values.begin(), g.values.end());
    }
    const double N = static_cast<double>(pooled.size());
    const std::vector<double> ranks = ranks_with_ties(pooled);

    double h = 0.0;
    std::size_t offset = 0;
    for (const auto& g : groups) {
        double r = 0.0;
        for (std::size_t i = 0; i < g.values.size(); ++i) r += ranks[offset + i];
        offset += g.values.size();
        h += r * r / static_cast<double>(g.values.size());
    }
    h = 12.0 / (N * (N + 1.0)) * h - 3.0 * (N + 1.0);

    const double ties = detail::tie_term(pooled);
    const double denom = 1.0 - ties / (N * N * N - N);
    if (denom <= 0.0)
        throw StatError("kruskal_wallis: all observations identical (tie correction degenerate)");

    TestResult res;
    res.statistic_uncorrected = h;
    res.statistic = h / denom;
    res.tie_corrected = ties > 0.0;
    res.df = static_cast<double>(groups.size() - 1);
    res.p_value = chi_square_sf(res.statistic, res.df);
    res.method = res.tie_corrected ? "kruskal-wallis tie-corrected chi-square"
                                   : "kruskal-wallis chi-square";
    return res;
}

enum class MwMethod { normal_approx, exact };

/// Mann-Whitney U test (two-sided). The reported statistic is U of the
/// first sample: sum over pairs of [x > y] + 0.5 [x == y].
///
/// normal_approx (default): continuity-corrected z with tie-corrected
/// variance. exact: full enumeration of all C(N, n1) group assignments,
/// available for N <= 14.
inline TestResult mann_whitney_u(const Sample& x, const Sample& y,
                                 MwMethod method = MwMethod::normal_approx) {
    if (x.values.empty() || y.values.empty())
        throw ConfigError("mann_whitney_u: empty sample");
    const std::size_t n1 = x.values.size();
    const std::size_t n2 = y.values.size();
    const std::size_t N = n1 + n2;

    std::vector<double> pooled = x.values;
    pooled.insert(pooled.end(), y.values.begin(), y.values.end());
    const std::vector<double> ranks = ranks_with_ties(pooled);

    double rank_sum_x = 0.0;
    for (std::size_t i = 0; i < n1; ++i) rank_sum_x += ranks[i];
    const double u_x = rank_sum_x - 0.5 * static_cast<double>(n1) * (n1 + 1);
    const double u_y = static_cast<double>(n1) * n2 - u_x;

    TestResult res;
    res.statistic = u_x;
    res.statistic_other = u_y;

    if (method == MwMethod::exact) {
        if (N > 14)
            throw ConfigError("mann_whitney_u: exact mode limited to N <= 14");
        // Enumerate every assignment of n1 pooled ranks to the first group.
        std::vector<std::size_t> pick(n1);
        std::iota(pick.begin(), pick.end(), std::size_t{0});
        std::size_t total = 0, le = 0, ge = 0;
        do {
            double rs = 0.0;
            for (std::size_t i : pick) rs += ranks[i];
            const double u = rs - 0.5 * static_cast<double>(n1) * (n1 + 1);
            ++total;
            if (u <= u_x) ++le;
            if (u >= u_x) ++ge;
        } while (detail::next_combination(pick, N));
        const double p_le = static_cast<double>(le) / static_cast<double>(total);
        const double p_ge = static_cast<double>(ge) / static_cast<double>(total);
        res.p_value = std::min(1.0, 2.0 * std::min(p_le, p_ge));
        res.exact = true;
        res.method = "mann-whitney-u exact-enumeration";
        return res;
    }

    const double mu = 0.5 * static_cast<double>(n1) * n2;
    const double ties = detail::tie_term(pooled);
    const double var = static_cast<double>(n1) * n2 / 12.0 *
                       ((N + 1.0) - ties / (static_cast<double>(N) * (N - 1.0)));
    if (var <= 0.0)
        throw StatError("mann_whitney_u: tie-corrected variance is zero (all values identical)");
    const double diff = u_x - mu;
    const double cc = diff > 0.0 ? 0.5 : (diff < 0.0 ? -0.5 : 0.0);
    const double z = (diff - cc) / std::sqrt(var);
    res.p_value = std::min(1.0, 2.0 * normal_sf(std::fabs(z)));
    res.continuity = true;
    res.tie_corrected = ties > 0.0;
    res.method = res.tie_corrected
                     ? "mann-whitney-u normal-approx continuity tie-corrected"
                     : "mann-whitney-u normal-approx continuity";
    return res;
}

/// Mean, trimmed mean (single lowest and highest removed), and median.
struct Descriptive {
    double mean = 0.0;
    double trimmed_mean = 0.0;
    double median = 0.0;
};

inline Descriptive descriptive(const std::vector<double>& values) {
    if (values.empty()) throw ConfigError("descriptive: empty sample");
    if (values.size() < 3)
        throw ConfigError("descriptive: trimmed mean needs at least 3 values");
    Descriptive d;
    d.mean = std::accumulate(values.begin(), values.end(), 0.0) /
             static_cast<double>(values.size());
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    d.trimmed_mean = std::accumulate(sorted.begin() + 1, sorted.end() - 1, 0.0) /
                     static_cast<double>(sorted.size() - 2);
    const std::size_t n = sorted.size();
    d.median = (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    return d;
}

/// Systematic sampling of the seed space: the population [0, population_max]
/// is divided into `strata` strata of width k = population_max / strata and
/// the seeds are the k-multiples i*k for i = 1..strata (0 excluded so all
/// seeds are distinct and nonzero). Returns the first `take`.
inline std::vector<std::uint32_t> systematic_seeds(std::uint32_t population_max,
                                                   std::uint32_t strata,
                                                   std::uint32_t take) {
    if (strata == 0 || take == 0 || take > strata)
        throw ConfigError("systematic_seeds: need strata >= take >= 1");
    const std::uint32_t k = population_max / strata;
    if (k == 0) throw ConfigError("systematic_seeds: stratum width is zero");
    std::vector<std::uint32_t> seeds;
    seeds.reserve(take);
    for (std::uint32_t i = 1; i <= take; ++i)
        seeds.push_back(i * k);
    return seeds;
}

} // namespace pnn
