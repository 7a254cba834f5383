#pragma once

// Reference computations used by the tests. Each one is written from the
// definition, with no code shared with the library under test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace oracle {

// Box on a quarter-pixel lattice: coordinates are integers / 4.
struct QBox {
    int x1, y1, x2, y2;
};

// IoU by counting lattice cells covered by each box.
inline double raster_iou(const QBox& a, const QBox& b) {
    const int lo_x = std::min(a.x1, b.x1), hi_x = std::max(a.x2, b.x2);
    const int lo_y = std::min(a.y1, b.y1), hi_y = std::max(a.y2, b.y2);
    long long inter = 0, uni = 0;
    for (int y = lo_y; y < hi_y; ++y)
        for (int x = lo_x; x < hi_x; ++x) {
            const bool in_a = x >= a.x1 && x < a.x2 && y >= a.y1 && y < a.y2;
            const bool in_b = x >= b.x1 && x < b.x2 && y >= b.y1 && y < b.y2;
            inter += in_a && in_b;
            uni += in_a || in_b;
        }
    return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

// 101-point interpolated AP by direct enumeration: for every recall level,
// scan every rank cutoff and keep the best precision reaching that recall.
inline double brute_ap(const std::vector<bool>& tp_in_rank_order, std::size_t n_gt) {
    if (n_gt == 0) return 0.0;
    const std::size_t n = tp_in_rank_order.size();
    double total = 0.0;
    for (int level = 0; level <= 100; ++level) {
        const double r = level / 100.0;
        double best = 0.0;
        for (std::size_t k = 1; k <= n; ++k) {
            std::size_t tp = 0;
            for (std::size_t i = 0; i < k; ++i) tp += tp_in_rank_order[i] ? 1 : 0;
            const double recall = static_cast<double>(tp) / static_cast<double>(n_gt);
            const double precision = static_cast<double>(tp) / static_cast<double>(k);
            if (recall >= r - 1e-12) best = std::max(best, precision);
        }
        total += best;
    }
    return total / 101.0;
}

// Area under the ROC, Mann-Whitney form: P(trojan < benign) + 0.5 P(tie).
inline double mann_whitney_auc(const std::vector<double>& benign, const std::vector<double>& trojan) {
    double wins = 0.0;
    for (double t : trojan)
        for (double b : benign) wins += t < b ? 1.0 : (t == b ? 0.5 : 0.0);
    return wins / (static_cast<double>(benign.size()) * static_cast<double>(trojan.size()));
}

// Regularized upper incomplete gamma Q(a, x), series / continued fraction.
inline double gamma_q(double a, double x) {
    if (x <= 0.0) return 1.0;
    const double gln = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int n = 0; n < 1000; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
    }
    double b = x + 1.0 - a, c = 1.0 / 1e-300, d = 1.0 / b, h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - gln) * h;
}

// Upper-tail p-value of a chi-square statistic with df degrees of freedom.
inline double chi2_pvalue(double stat, double df) { return gamma_q(0.5 * df, 0.5 * stat); }

// Goodness of fit of independent per-cell occupancy counts against a common
// Bernoulli rate p over `trials` draws: each cell contributes its own
// two-category term, so df equals the number of cells.
inline double occupancy_chi2(const std::vector<long long>& counts, long long trials, double p) {
    double stat = 0.0;
    const double e1 = p * static_cast<double>(trials);
    const double e0 = static_cast<double>(trials) - e1;
    for (long long o : counts) {
        const double d = static_cast<double>(o) - e1;
        stat += d * d / e1 + d * d / e0;
    }
    return stat;
}

// Average ranks (ties share the mean rank), then Pearson on the ranks.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            double less = 0, equal = 0;
            for (double w : v) {
                less += w < v[i];
                equal += w == v[i];
            }
            r[i] = less + (equal + 1.0) / 2.0;
        }
        return r;
    };
    const auto rx = ranks(x), ry = ranks(y);
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += rx[i] / n, my += ry[i] / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Relative path -> bytes for every regular file under root.
inline std::map<std::string, std::string> tree_bytes(const std::filesystem::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[e.path().lexically_relative(root).generic_string()] = slurp(e.path());
    return out;
}

}  // namespace oracle
