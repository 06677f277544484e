#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stakemkt/panel.hpp"

namespace stakemkt {

enum class Stage { OLS, FirstStage, SecondStage };
enum class ErrorType { Classical, HC0, HC1 };

struct RegressionResult {
    Stage stage = Stage::OLS;
    ErrorType errors = ErrorType::Classical;
    std::vector<std::string> names;
    Eigen::VectorXd coef;
    Eigen::VectorXd se;
    Eigen::VectorXd tstat;
    double r_squared = 0.0;
    std::size_t n_obs = 0;
    int df_residual = 0;
    // Wald F of the stated hypothesis: all non-intercept coefficients for OLS
    // and the second stage, the excluded instruments for a first stage.
    double f_statistic = 0.0;
    int f_df1 = 0, f_df2 = 0;
    std::string f_hypothesis;
    bool weak_instruments = false;  // first stage only: F below 10

    int coef_index(const std::string& name) const;  // -1 when absent
    double coef_of(const std::string& name) const;  // throws when absent
};

// Ordinary least squares with classical or heteroskedasticity-robust
// standard errors. X must have full column rank and more rows than columns;
// rank failures name the collinear columns.
RegressionResult ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                     const std::vector<std::string>& names, ErrorType errors = ErrorType::HC1);

struct TslsResult {
    std::vector<RegressionResult> first_stages;  // one per endogenous regressor
    RegressionResult second_stage;
    bool weak_instruments = false;  // any first-stage F below 10
};

// Two-stage least squares. X carries all structural regressors (including
// the endogenous ones), `endogenous` selects them by column index into X, and
// Z holds the excluded instruments. First stages regress each endogenous
// column on [Z, exogenous X]; the second stage swaps in fitted values and
// reports standard errors from the structural residual y - X*beta.
TslsResult tsls(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                const std::vector<std::string>& names, const std::vector<int>& endogenous,
                const Eigen::MatrixXd& Z, const std::vector<std::string>& z_names,
                ErrorType errors = ErrorType::HC1);

// Full paper-style pipeline on a panel: OLS, and when the spec names
// instruments, the first stage(s) and the 2SLS stage.
struct EstimationReport {
    ModelSpec spec;
    RegressionResult ols;
    std::vector<RegressionResult> first_stages;
    RegressionResult second_stage;
    bool has_iv = false;
    bool weak_instruments = false;
    std::size_t n_obs = 0;
};

EstimationReport estimate(const Panel& panel, const ModelSpec& spec);

}  // namespace stakemkt
