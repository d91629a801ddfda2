#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace eyesal {

/// Response, fixed-effect design and grouping for a random-intercept model.
/// Column 0 of `fixed` is conventionally the intercept.
struct LmmDesign {
    Eigen::VectorXd response;
    Eigen::MatrixXd fixed;
    std::vector<std::string> column_names;
    std::vector<std::string> groups;  // one label per row

    // Scale of the original response, for mapping residuals back.
    double response_mean = 0.0;
    double response_sd = 1.0;
};

struct DesignColumn {
    std::string name;
    std::vector<double> values;
    bool binary = false;
};

/// Builds a design with an intercept column followed by `columns`.
/// The response and continuous columns are z-standardized (sample SD);
/// binary columns are centered only.
LmmDesign make_normalized_design(std::span<const double> response, std::span<const DesignColumn> columns,
                                 std::vector<std::string> groups);

struct LmmOptions {
    double log_theta_min = -12.0;
    double log_theta_max = 12.0;
    double tolerance = 1e-8;
    int max_iterations = 500;
    /// Fit at this variance ratio instead of estimating it.
    std::optional<double> fixed_theta;
};

struct LmmFit {
    std::vector<std::string> column_names;
    Eigen::VectorXd beta;
    Eigen::VectorXd se;
    Eigen::VectorXd t_values;
    /// Two-sided p-values from the normal approximation to t.
    Eigen::VectorXd p_values;
    double sigma_e2 = 0.0;
    double sigma_b2 = 0.0;
    double theta = 0.0;  // sigma_b2 / sigma_e2
    double log_reml = 0.0;
    bool converged = false;
    /// Variance ratio estimated at zero (singular fit).
    bool boundary = false;
    int iterations = 0;
    /// Best profiled REML value after each optimizer iteration.
    std::vector<double> criterion_trace;

    std::vector<std::string> group_labels;  // sorted
    Eigen::VectorXd random_intercepts;      // conditional modes, same order
};

/// REML fit of y = X b + u_group + e with a single random intercept.
/// The variance ratio is found by golden-section search on log(theta);
/// for each theta the GLS solution uses per-group closed forms.
/// Throws NumericError naming the collinear columns when X is rank deficient.
LmmFit fit_random_intercept_lmm(const LmmDesign& design, const LmmOptions& options = {});

/// The fixed-effect-only profiled REML log-likelihood at variance ratio theta.
double profiled_log_reml(const LmmDesign& design, double theta);

/// y - X beta - u_group for each row, on the design's (normalized) scale.
Eigen::VectorXd conditional_residuals(const LmmDesign& design, const LmmFit& fit);

/// Variance inflation factor of each column of `predictors` (no intercept
/// column; one is implied). Perfectly collinear columns give +infinity.
std::vector<double> compute_vif(const Eigen::MatrixXd& predictors);

/// Pearson product-moment correlation; empty when either input is constant.
std::optional<double> pearson_r(std::span<const double> x, std::span<const double> y);

struct MeanCi {
    double mean = 0.0;
    double half_width = 0.0;
};

/// Mean and t-based confidence half-width using the sample SD.
MeanCi mean_ci(std::span<const double> values, double level = 0.95);

/// "mean (half-width)" with two and three decimals, e.g. "0.92 (0.034)".
std::string format_mean_ci(const MeanCi& ci);

/// Two-sided normal-approximation p-value for a t statistic.
double normal_two_sided_p(double t);

}  // namespace eyesal
