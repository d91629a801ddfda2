#include "eyesal/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>

#include "eyesal/error.hpp"

namespace eyesal {

LmmDesign make_normalized_design(std::span<const double> response, std::span<const DesignColumn> columns,
                                 std::vector<std::string> groups) {
    const auto n = response.size();
    if (groups.size() != n) throw ValidationError("group labels and response differ in length");
    if (n < 2) throw ValidationError("design needs at least two rows");

    auto mean_sd = [](std::span<const double> v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        return std::pair{mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
    };

    LmmDesign d;
    d.groups = std::move(groups);
    const auto [ym, ysd] = mean_sd(response);
    d.response_mean = ym;
    d.response_sd = ysd > 0.0 ? ysd : 1.0;
    d.response.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) d.response(static_cast<Eigen::Index>(i)) = (response[i] - ym) / d.response_sd;

    d.fixed.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(columns.size() + 1));
    d.fixed.col(0).setOnes();
    d.column_names.push_back("intercept");
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const auto& col = columns[c];
        if (col.values.size() != n) throw ValidationError("column '" + col.name + "' has the wrong length");
        const auto [m, sd] = mean_sd(col.values);
        const double scale = (col.binary || sd == 0.0) ? 1.0 : sd;
        for (std::size_t i = 0; i < n; ++i) {
            d.fixed(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c + 1)) = (col.values[i] - m) / scale;
        }
        d.column_names.push_back(col.name);
    }
    return d;
}

namespace {

struct GroupSums {
    std::vector<std::string> labels;
    std::vector<std::size_t> group_of_row;
    std::vector<double> n;            // rows per group
    std::vector<Eigen::VectorXd> s;   // X_j' 1
    std::vector<double> ysum;         // 1' y_j
    Eigen::MatrixXd xtx;
    Eigen::VectorXd xty;
    double yty = 0.0;
};

GroupSums accumulate(const LmmDesign& d) {
    GroupSums g;
    std::map<std::string, std::size_t> index;
    for (const auto& label : d.groups) index.emplace(label, 0);
    for (auto& [label, i] : index) {
        i = g.labels.size();
        g.labels.push_back(label);
    }
    const auto p = d.fixed.cols();
    const auto k = g.labels.size();
    g.n.assign(k, 0.0);
    g.s.assign(k, Eigen::VectorXd::Zero(p));
    g.ysum.assign(k, 0.0);
    g.group_of_row.resize(d.groups.size());
    for (Eigen::Index r = 0; r < d.fixed.rows(); ++r) {
        const auto j = index.at(d.groups[static_cast<std::size_t>(r)]);
        g.group_of_row[static_cast<std::size_t>(r)] = j;
        g.n[j] += 1.0;
        g.s[j] += d.fixed.row(r).transpose();
        g.ysum[j] += d.response(r);
    }
    g.xtx = d.fixed.transpose() * d.fixed;
    g.xty = d.fixed.transpose() * d.response;
    g.yty = d.response.squaredNorm();
    return g;
}

struct GlsSolution {
    Eigen::VectorXd beta;
    Eigen::MatrixXd a;       // X' H^-1 X
    double rss = 0.0;        // y' H^-1 y - c' beta
    double log_det_h = 0.0;  // log |I + theta Z Z'|
    double log_det_a = 0.0;
};

GlsSolution solve_gls(const GroupSums& g, double theta) {
    GlsSolution sol;
    sol.a = g.xtx;
    Eigen::VectorXd c = g.xty;
    double q = g.yty;
    for (std::size_t j = 0; j < g.labels.size(); ++j) {
        const double w = theta / (1.0 + theta * g.n[j]);
        sol.a.noalias() -= w * g.s[j] * g.s[j].transpose();
        c.noalias() -= (w * g.ysum[j]) * g.s[j];
        q -= w * g.ysum[j] * g.ysum[j];
        sol.log_det_h += std::log1p(theta * g.n[j]);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(sol.a);
    sol.beta = ldlt.solve(c);
    sol.rss = std::max(q - c.dot(sol.beta), 0.0);
    sol.log_det_a = ldlt.vectorD().array().log().sum();
    return sol;
}

double log_reml_of(const GlsSolution& sol, double n, double p) {
    const double dof = n - p;
    return -0.5 * (sol.log_det_h + sol.log_det_a + dof * std::log(2.0 * std::numbers::pi * sol.rss / dof) + dof);
}

void check_rank(const LmmDesign& d) {
    const auto p = d.fixed.cols();
    if (d.fixed.rows() <= p) throw NumericError("design has no residual degrees of freedom");
    const double scale = std::max(1.0, d.fixed.cwiseAbs().maxCoeff());
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> full(d.fixed);
    full.setThreshold(1e-10);
    if (full.rank() == p) return;

    auto name_of = [&](Eigen::Index c) {
        return c < static_cast<Eigen::Index>(d.column_names.size()) ? d.column_names[static_cast<std::size_t>(c)]
                                                                    : "column " + std::to_string(c);
    };
    std::vector<std::string> collinear;
    std::vector<Eigen::Index> kept_index;
    Eigen::MatrixXd kept(d.fixed.rows(), 0);
    for (Eigen::Index c = 0; c < p; ++c) {
        Eigen::MatrixXd trial(d.fixed.rows(), kept.cols() + 1);
        trial << kept, d.fixed.col(c);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(trial);
        qr.setThreshold(1e-10);
        const bool zero_col = d.fixed.col(c).cwiseAbs().maxCoeff() <= 1e-12 * scale;
        if (zero_col) {
            collinear.push_back(name_of(c) + " (all zero)");
        } else if (qr.rank() < trial.cols()) {
            const Eigen::VectorXd coef = kept.colPivHouseholderQr().solve(d.fixed.col(c));
            std::string with;
            for (Eigen::Index k = 0; k < coef.size(); ++k) {
                if (std::abs(coef(k)) > 1e-8) with += (with.empty() ? "" : ", ") + name_of(kept_index[static_cast<std::size_t>(k)]);
            }
            collinear.push_back(name_of(c) + " (combination of " + with + ")");
        } else {
            kept = std::move(trial);
            kept_index.push_back(c);
        }
    }
    std::string names;
    for (const auto& nm : collinear) names += (names.empty() ? "" : "; ") + nm;
    throw NumericError("rank-deficient fixed-effect design; collinear columns: " + names);
}

}  // namespace

double profiled_log_reml(const LmmDesign& design, double theta) {
    const auto g = accumulate(design);
    return log_reml_of(solve_gls(g, theta), static_cast<double>(design.fixed.rows()),
                       static_cast<double>(design.fixed.cols()));
}

LmmFit fit_random_intercept_lmm(const LmmDesign& design, const LmmOptions& options) {
    const auto n_rows = design.fixed.rows();
    if (design.response.size() != n_rows || static_cast<Eigen::Index>(design.groups.size()) != n_rows) {
        throw ValidationError("design columns differ in length");
    }
    check_rank(design);

    const auto g = accumulate(design);
    const double n = static_cast<double>(n_rows);
    const double p = static_cast<double>(design.fixed.cols());
    auto criterion = [&](double theta) { return log_reml_of(solve_gls(g, theta), n, p); };

    LmmFit fit;
    fit.column_names = design.column_names;
    fit.group_labels = g.labels;

    const auto ols = solve_gls(g, 0.0);
    const double rss_scale = std::max(g.yty, 1.0);
    double theta = 0.0;
    if (ols.rss <= 1e-24 * rss_scale) {
        // Exact fit: no residual variance to apportion.
        fit.boundary = true;
        fit.converged = true;
    } else if (options.fixed_theta) {
        theta = *options.fixed_theta;
        if (!(theta >= 0.0)) throw ValidationError("fixed theta must be >= 0");
        fit.converged = true;
        fit.boundary = theta == 0.0;
    } else if (g.labels.size() < 2) {
        // A single group's intercept is not separable from the fixed intercept.
        fit.boundary = true;
        fit.converged = true;
    } else {
        constexpr double inv_phi = 0.6180339887498949;
        double lo = options.log_theta_min;
        double hi = options.log_theta_max;
        double x1 = hi - inv_phi * (hi - lo);
        double x2 = lo + inv_phi * (hi - lo);
        double f1 = criterion(std::exp(x1));
        double f2 = criterion(std::exp(x2));
        double best = std::max(f1, f2);
        double best_x = f1 >= f2 ? x1 : x2;
        int it = 0;
        while (hi - lo > options.tolerance && it < options.max_iterations) {
            if (f1 >= f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = criterion(std::exp(x1));
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = criterion(std::exp(x2));
            }
            ++it;
            if (f1 > best) {
                best = f1;
                best_x = x1;
            }
            if (f2 > best) {
                best = f2;
                best_x = x2;
            }
            fit.criterion_trace.push_back(best);
        }
        fit.iterations = it;
        fit.converged = hi - lo <= options.tolerance;
        theta = std::exp(best_x);
        if (criterion(0.0) >= best) {
            theta = 0.0;
            fit.boundary = true;
        }
    }

    const auto sol = solve_gls(g, theta);
    const double dof = n - p;
    fit.theta = theta;
    fit.beta = sol.beta;
    fit.sigma_e2 = std::max(sol.rss / dof, std::numeric_limits<double>::min());
    fit.sigma_b2 = theta * fit.sigma_e2;
    fit.log_reml = sol.rss > 0.0 ? log_reml_of(sol, n, p) : std::numeric_limits<double>::infinity();

    const Eigen::MatrixXd cov = fit.sigma_e2 * sol.a.ldlt().solve(Eigen::MatrixXd::Identity(sol.a.rows(), sol.a.cols()));
    fit.se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    fit.t_values = fit.beta.cwiseQuotient(fit.se);
    fit.p_values.resize(fit.beta.size());
    for (Eigen::Index i = 0; i < fit.beta.size(); ++i) fit.p_values(i) = normal_two_sided_p(fit.t_values(i));

    const Eigen::VectorXd resid = design.response - design.fixed * fit.beta;
    fit.random_intercepts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.labels.size()));
    for (Eigen::Index r = 0; r < n_rows; ++r) {
        fit.random_intercepts(static_cast<Eigen::Index>(g.group_of_row[static_cast<std::size_t>(r)])) += resid(r);
    }
    for (std::size_t j = 0; j < g.labels.size(); ++j) {
        fit.random_intercepts(static_cast<Eigen::Index>(j)) *= theta / (1.0 + theta * g.n[j]);
    }
    return fit;
}

Eigen::VectorXd conditional_residuals(const LmmDesign& design, const LmmFit& fit) {
    Eigen::VectorXd r = design.response - design.fixed * fit.beta;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        const auto& label = design.groups[static_cast<std::size_t>(i)];
        const auto it = std::lower_bound(fit.group_labels.begin(), fit.group_labels.end(), label);
        if (it == fit.group_labels.end() || *it != label) throw ValidationError("group '" + label + "' not in fit");
        r(i) -= fit.random_intercepts(it - fit.group_labels.begin());
    }
    return r;
}

std::vector<double> compute_vif(const Eigen::MatrixXd& predictors) {
    const auto k = predictors.cols();
    if (k < 2) throw ValidationError("VIF needs at least two predictor columns");
    const Eigen::MatrixXd centered = predictors.rowwise() - predictors.colwise().mean();

    std::vector<double> vif(static_cast<std::size_t>(k));
    for (Eigen::Index j = 0; j < k; ++j) {
        const Eigen::VectorXd y = centered.col(j);
        Eigen::MatrixXd others(centered.rows(), k - 1);
        for (Eigen::Index c = 0, o = 0; c < k; ++c) {
            if (c != j) others.col(o++) = centered.col(c);
        }
        const double tss = y.squaredNorm();
        if (tss == 0.0) {
            vif[static_cast<std::size_t>(j)] = std::numeric_limits<double>::infinity();
            continue;
        }
        const Eigen::MatrixXd gram = others.transpose() * others;
        const Eigen::VectorXd cross = others.transpose() * y;
        const Eigen::VectorXd coef = gram.colPivHouseholderQr().solve(cross);
        const Eigen::VectorXd resid = y - others * coef;
        const double r2 = std::max(0.0, 1.0 - resid.squaredNorm() / tss);
        vif[static_cast<std::size_t>(j)] =
            r2 >= 1.0 - 1e-12 ? std::numeric_limits<double>::infinity() : 1.0 / (1.0 - r2);
    }
    return vif;
}

std::optional<double> pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("pearson_r: inputs differ in length");
    if (x.size() < 2) throw ValidationError("pearson_r: need at least two values");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

MeanCi mean_ci(std::span<const double> values, double level) {
    if (values.size() < 2) throw ValidationError("mean_ci: need at least two values");
    if (!(level > 0.0 && level < 1.0)) throw ValidationError("mean_ci: level must lie in (0, 1)");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    const boost::math::students_t dist(n - 1.0);
    const double t = boost::math::quantile(boost::math::complement(dist, (1.0 - level) / 2.0));
    return {mean, t * sd / std::sqrt(n)};
}

std::string format_mean_ci(const MeanCi& ci) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f (%.3f)", ci.mean, ci.half_width);
    return buf;
}

double normal_two_sided_p(double t) { return std::erfc(std::abs(t) / std::numbers::sqrt2); }

}  // namespace eyesal
