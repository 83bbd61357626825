// SPDX-License-Identifier: Apache-2.0
//! \file pam/oracle.hpp
//! Exact small-instance references for the solver: the generator
//! exponential, the waiting-time integral along a jump path, and the
//! Feynman-Kac path expansion built from it.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <thread>
#include <vector>

#include "pam/error.hpp"
#include "pam/generator.hpp"

namespace pam {

struct OracleSolution {
    double log_mass = 0.0;
    std::vector<double> weights; //!< lexicographic site order, unit sum
};

inline constexpr std::size_t kOracleMaxSites = 200;

//! exp(tA) 1_0 for the Dirichlet generator A of the field's ball.
//!
//! With mu = max(2d, 2d - min xi) the shifted matrix P = A + mu I is
//! entrywise nonnegative, so the Taylor series and the squarings below
//! involve no cancellation. The squaring phase carries a log scale factor,
//! so large t cannot overflow.
inline OracleSolution dense_exponential_oracle(const PotentialField& field, double t)
{
    if (field.size() > kOracleMaxSites) {
        throw ResourceCapError("dense oracle is limited to " + std::to_string(kOracleMaxSites) + " sites");
    }
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw DomainError("oracle time must be finite and nonnegative");
    }
    const GeneratorOperator op(field);
    const std::size_t n = op.size();
    const Count origin = lex_rank(LatticeSite::origin(field.dim()), field.radius());
    OracleSolution out;
    out.weights.assign(n, 0.0);
    if (t == 0.0) {
        out.weights[origin] = 1.0;
        return out;
    }
    const auto xi = op.potential();
    const double two_d = 2.0 * field.dim();
    const double mu = std::max(two_d, two_d - *std::min_element(xi.begin(), xi.end()));

    // M = t P / 2^s with ||M||_1 <= 1/2.
    std::vector<double> p(n * n, 0.0);
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        p[i * n + i] = op.diagonal()[i] + mu;
        for (const auto j : op.neighbours_of(i)) {
            if (j != GeneratorOperator::kOutside) {
                p[i * n + static_cast<std::size_t>(j)] = 1.0;
            }
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            col += p[i * n + j];
        }
        norm = std::max(norm, col);
    }
    int s = 0;
    while (t * norm / std::ldexp(1.0, s) > 0.5) {
        ++s;
    }
    const double scale = t / std::ldexp(1.0, s);
    for (auto& v : p) {
        v *= scale;
    }
    const double m_norm = norm * scale;

    auto matmul = [n](const std::vector<double>& a, const std::vector<double>& b) {
        std::vector<double> c(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < n; ++k) {
                const double aik = a[i * n + k];
                if (aik == 0.0) {
                    continue;
                }
                for (std::size_t j = 0; j < n; ++j) {
                    c[i * n + j] += aik * b[k * n + j];
                }
            }
        }
        return c;
    };

    // Taylor series; the remainder after term K is at most
    // ||M||^{K+1}/(K+1)! / (1 - ||M||/(K+2)), compared with the identity part.
    std::vector<double> e(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        e[i * n + i] = 1.0;
    }
    std::vector<double> term = e;
    double bound = 1.0;
    for (int k = 1; k < 60; ++k) {
        term = matmul(term, p);
        for (auto& v : term) {
            v /= k;
        }
        for (std::size_t i = 0; i < n * n; ++i) {
            e[i] += term[i];
        }
        bound *= m_norm / (k + 1);
        if (bound / (1.0 - m_norm / (k + 2)) <= 1e-17) {
            break;
        }
    }
    double log_scale = 0.0;
    for (int j = 0; j < s; ++j) {
        e = matmul(e, e);
        log_scale *= 2.0;
        const double c = *std::max_element(e.begin(), e.end());
        for (auto& v : e) {
            v /= c;
        }
        log_scale += std::log(c);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out.weights[i] = e[i * n + origin];
        sum += out.weights[i];
    }
    for (auto& v : out.weights) {
        v /= sum;
    }
    out.log_mass = -mu * t + log_scale + std::log(sum);
    return out;
}

namespace detail {

// Coefficients of the exponential divided difference at nonnegative
// nodes y: after j + 1 nodes, b_k = h_k(y_0..y_j) / (k + j)!, where h_k is
// the complete homogeneous symmetric polynomial. Their sum is exp[y_0..y_j].
class ExpDividedDifference {
  public:
    explicit ExpDividedDifference(std::size_t terms) : terms_(terms) {}

    // First node.
    void start(double y, std::vector<double>& b) const
    {
        b.resize(terms_);
        b[0] = 1.0;
        for (std::size_t k = 1; k < terms_; ++k) {
            b[k] = b[k - 1] * y / static_cast<double>(k);
        }
    }

    // Appends node y to a coefficient vector built from m nodes.
    void add(const std::vector<double>& prev, double y, std::size_t m, std::vector<double>& next) const
    {
        next.resize(terms_);
        next[0] = prev[0] / static_cast<double>(m);
        for (std::size_t k = 1; k < terms_; ++k) {
            next[k] = (prev[k] + y * next[k - 1]) / static_cast<double>(m + k);
        }
    }

    [[nodiscard]] static double sum(const std::vector<double>& b)
    {
        double s = 0.0;
        for (auto it = b.rbegin(); it != b.rend(); ++it) {
            s += *it;
        }
        return s;
    }

    //! Number of terms so that, for nodes in [0, y_max], the neglected part
    //! of the series is below 1e-17 of the retained part.
    static std::size_t terms_for(double y_max)
    {
        if (y_max > 600.0) {
            throw NumericalError("waiting-time integral: node spread times t exceeds 600");
        }
        // Each neglected term is at most y_max^k / (k! n!) while the sum is
        // at least 1/n!; sum the Poisson-like tail directly.
        double term = 1.0;
        std::size_t k = 0;
        while (true) {
            ++k;
            term *= y_max / static_cast<double>(k);
            if (static_cast<double>(k) > y_max && term / (1.0 - y_max / static_cast<double>(k + 1)) <= 1e-17) {
                return k + 1;
            }
            if (y_max == 0.0) {
                return 1;
            }
        }
    }

  private:
    std::size_t terms_;
};

} // namespace detail

//! Integral over {t_i >= 0, sum t_i < t} of
//! exp(sum_{i<n} t_i eta_i + (t - sum t_i) eta_n), i.e. the n-th divided
//! difference of s -> e^{ts} at the nodes eta. Confluent nodes need no
//! special case: the series below is a sum of nonnegative terms.
inline double simplex_integral(std::span<const double> etas, double t)
{
    if (etas.empty()) {
        throw DomainError("waiting-time integral needs at least one node");
    }
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw DomainError("waiting-time integral needs finite t > 0");
    }
    for (const double e : etas) {
        if (!std::isfinite(e)) {
            throw DomainError("waiting-time integral needs finite nodes");
        }
    }
    const auto [lo_it, hi_it] = std::minmax_element(etas.begin(), etas.end());
    const double c = *lo_it;
    const detail::ExpDividedDifference dd(detail::ExpDividedDifference::terms_for(t * (*hi_it - c)));
    std::vector<double> b;
    std::vector<double> next;
    dd.start(t * (etas[0] - c), b);
    for (std::size_t j = 1; j < etas.size(); ++j) {
        dd.add(b, t * (etas[j] - c), j, next);
        std::swap(b, next);
    }
    const auto n = static_cast<double>(etas.size() - 1);
    return std::exp(n * std::log(t) + t * c) * detail::ExpDividedDifference::sum(b);
}

//! Checks simplex_integral <= e^{t eta_k} prod_{i != k} (eta_k - eta_i)^{-1}
//! where eta_k is the unique maximum.
inline bool uppb_bound_check(std::span<const double> etas, double t)
{
    const auto it = std::max_element(etas.begin(), etas.end());
    const auto k = static_cast<std::size_t>(it - etas.begin());
    double log_bound = t * *it;
    for (std::size_t i = 0; i < etas.size(); ++i) {
        if (i == k) {
            continue;
        }
        if (!(etas[i] < *it)) {
            throw DomainError("upper bound check needs a unique maximum");
        }
        log_bound -= std::log(*it - etas[i]);
    }
    return std::log(simplex_integral(etas, t)) <= log_bound;
}

//! P(Poisson(lambda) > n).
inline double poisson_tail_above(double lambda, std::int64_t n)
{
    if (n < 0) {
        return 1.0;
    }
    if (lambda == 0.0) {
        return 0.0;
    }
    auto log_pmf = [lambda](double k) { return k * std::log(lambda) - lambda - std::lgamma(k + 1.0); };
    if (static_cast<double>(n) + 1.0 > lambda) {
        double s = 0.0;
        for (std::int64_t k = n + 1;; ++k) {
            const double term = std::exp(log_pmf(static_cast<double>(k)));
            s += term;
            if (term <= s * 1e-17 || term == 0.0) {
                return s;
            }
        }
    }
    double s = 0.0;
    for (std::int64_t k = 0; k <= n; ++k) {
        s += std::exp(log_pmf(static_cast<double>(k)));
    }
    return std::max(0.0, 1.0 - s);
}

struct PathSumOptions {
    double prune_target = 0.0;        //!< 0 disables pruning
    double max_paths = 1e10;          //!< enumeration budget
    bool parallel = true;
};

struct PathSumResult {
    std::vector<double> values;  //!< u(t, z) per site, lexicographic order
    double tail_bound = 0.0;     //!< certified bound on the omitted mass per site
    std::uint64_t paths = 0;
};

//! Feynman-Kac expansion of u(t, .) over all in-box paths from the origin
//! with at most max_jumps jumps. A path visiting y_0..y_n contributes
//! e^{-2dt} times the waiting-time integral at eta_i = xi(y_i).
inline PathSumResult path_sum_fk_all(const PotentialField& field, double t, int max_jumps,
                                     const PathSumOptions& opt = {})
{
    if (!(t > 0.0) || max_jumps < 0) {
        throw DomainError("path sum needs t > 0 and max_jumps >= 0");
    }
    const int d = field.dim();
    const int deg = 2 * d;
    if (std::pow(static_cast<double>(deg), max_jumps) > opt.max_paths) {
        throw ResourceCapError("path enumeration exceeds the budget");
    }
    const GeneratorOperator op(field);
    const auto xi = op.potential();
    const auto [lo_it, hi_it] = std::minmax_element(xi.begin(), xi.end());
    const double c = *lo_it;
    const double max_xi = *hi_it;
    const detail::ExpDividedDifference dd(detail::ExpDividedDifference::terms_for(t * (max_xi - c)));
    const double log_pre = -static_cast<double>(deg) * t + t * c;
    const double log_t = std::log(t);
    const double walk_rate = deg * t;

    // Bound on everything below a pruned prefix of length m.
    std::vector<double> subtree(static_cast<std::size_t>(max_jumps) + 2, 0.0);
    for (int m = 0; m <= max_jumps + 1; ++m) {
        subtree[m] = std::exp(t * max_xi - m * std::log(static_cast<double>(deg))) *
                     poisson_tail_above(walk_rate, m - 1);
    }

    const std::size_t n = op.size();
    const auto origin = static_cast<std::int32_t>(lex_rank(LatticeSite::origin(d), field.radius()));

    struct Worker {
        std::vector<double> values;
        double pruned = 0.0;
        std::uint64_t paths = 0;
        std::vector<std::vector<double>> b;
    };

    auto contribute = [&](Worker& wk, std::int32_t site, int depth) {
        const double s = detail::ExpDividedDifference::sum(wk.b[static_cast<std::size_t>(depth)]);
        wk.values[static_cast<std::size_t>(site)] += std::exp(log_pre + depth * log_t) * s;
        ++wk.paths;
    };

    // Depth-first from a path of length `depth` ending at `site`.
    auto descend = [&](auto&& self, Worker& wk, std::int32_t site, int depth) -> void {
        contribute(wk, site, depth);
        if (depth == max_jumps) {
            return;
        }
        if (opt.prune_target > 0.0 && subtree[depth + 1] < 1e-3 * opt.prune_target) {
            // Every in-box continuation is dropped; bound them all.
            for (const auto nb : op.neighbours_of(static_cast<std::size_t>(site))) {
                if (nb != GeneratorOperator::kOutside) {
                    wk.pruned += subtree[depth + 1];
                }
            }
            return;
        }
        for (const auto nb : op.neighbours_of(static_cast<std::size_t>(site))) {
            if (nb == GeneratorOperator::kOutside) {
                continue;
            }
            dd.add(wk.b[depth], t * (xi[nb] - c), static_cast<std::size_t>(depth) + 1, wk.b[depth + 1]);
            self(self, wk, nb, depth + 1);
        }
    };

    auto make_worker = [&] {
        Worker wk;
        wk.values.assign(n, 0.0);
        wk.b.resize(static_cast<std::size_t>(max_jumps) + 1);
        dd.start(t * (xi[origin] - c), wk.b[0]);
        return wk;
    };

    Worker root = make_worker();
    contribute(root, origin, 0);
    std::vector<Worker> branches;
    const auto first = op.neighbours_of(static_cast<std::size_t>(origin));
    if (max_jumps > 0) {
        for (std::size_t k = 0; k < first.size(); ++k) {
            branches.push_back(make_worker());
        }
        auto run = [&](std::size_t k) {
            if (first[k] == GeneratorOperator::kOutside) {
                return;
            }
            Worker& wk = branches[k];
            dd.add(wk.b[0], t * (xi[first[k]] - c), 1, wk.b[1]);
            descend(descend, wk, first[k], 1);
        };
        if (opt.parallel) {
            std::vector<std::thread> pool;
            for (std::size_t k = 0; k < first.size(); ++k) {
                pool.emplace_back(run, k);
            }
            for (auto& th : pool) {
                th.join();
            }
        }
        else {
            for (std::size_t k = 0; k < first.size(); ++k) {
                run(k);
            }
        }
    }
    // Fixed reduction order: root, then branches by direction.
    PathSumResult out;
    out.values = std::move(root.values);
    out.paths = root.paths;
    double pruned = 0.0;
    for (const auto& wk : branches) {
        for (std::size_t i = 0; i < n; ++i) {
            out.values[i] += wk.values[i];
        }
        out.paths += wk.paths;
        pruned += wk.pruned;
    }
    out.tail_bound = std::exp(t * max_xi) * poisson_tail_above(walk_rate, max_jumps) + pruned;
    return out;
}

struct PathSumValue {
    double value = 0.0;
    double tail_bound = 0.0;
};

//! u(t, z) from the truncated path expansion.
inline PathSumValue path_sum_fk(const PotentialField& field, double t, const LatticeSite& z, int max_jumps,
                                const PathSumOptions& opt = {})
{
    const auto all = path_sum_fk_all(field, t, max_jumps, opt);
    return {all.values[field.index_of(z)], all.tail_bound};
}

} // namespace pam
