#include "stakemkt/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stakemkt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kWeakInstrumentF = 10.0;

int intercept_column(const Eigen::MatrixXd& X) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        if ((X.col(j).array() == 1.0).all()) return static_cast<int>(j);
    }
    return -1;
}

void check_rank(const Eigen::MatrixXd& X, const std::vector<std::string>& names) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() == X.cols()) return;
    std::string msg = "design matrix is rank deficient; collinear column(s):";
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index j = qr.rank(); j < X.cols(); ++j) {
        msg += " " + names[static_cast<std::size_t>(perm[j])];
    }
    throw std::invalid_argument(msg);
}

Eigen::MatrixXd sandwich(const Eigen::MatrixXd& bread, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& residuals, ErrorType errors,
                         double classical_sigma2, Eigen::Index df) {
    switch (errors) {
        case ErrorType::Classical:
            return classical_sigma2 * bread;
        case ErrorType::HC0:
        case ErrorType::HC1: {
            const Eigen::MatrixXd meat =
                X.transpose() * residuals.array().square().matrix().asDiagonal() * X;
            Eigen::MatrixXd V = bread * meat * bread;
            if (errors == ErrorType::HC1) {
                V *= static_cast<double>(X.rows()) / static_cast<double>(df);
            }
            return V;
        }
    }
    return bread;
}

double wald_f(const Eigen::VectorXd& beta, const Eigen::MatrixXd& V,
              const std::vector<int>& restricted) {
    const Eigen::Index q = static_cast<Eigen::Index>(restricted.size());
    if (q == 0) return kNaN;
    Eigen::VectorXd b(q);
    Eigen::MatrixXd Vr(q, q);
    for (Eigen::Index i = 0; i < q; ++i) {
        b[i] = beta[restricted[static_cast<std::size_t>(i)]];
        for (Eigen::Index j = 0; j < q; ++j) {
            Vr(i, j) = V(restricted[static_cast<std::size_t>(i)],
                         restricted[static_cast<std::size_t>(j)]);
        }
    }
    return b.dot(Vr.ldlt().solve(b)) / static_cast<double>(q);
}

struct FitInput {
    Stage stage;
    ErrorType errors;
    std::vector<int> hypothesis;  // coefficient indices for the reported F
    std::string hypothesis_label;
};

// Shared core: beta from the regressor matrix `Xb`, residuals (and therefore
// sigma^2, R^2) from the structural matrix `Xr`. OLS passes the same matrix
// twice; the 2SLS second stage passes fitted values as Xb and the original
// regressors as Xr.
RegressionResult fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& Xb,
                     const Eigen::MatrixXd& Xr, const std::vector<std::string>& names,
                     const FitInput& in) {
    const Eigen::Index n = Xb.rows();
    const Eigen::Index k = Xb.cols();
    if (y.size() != n) throw std::invalid_argument("regression: y and X row counts differ");
    if (names.size() != static_cast<std::size_t>(k)) {
        throw std::invalid_argument("regression: one name per column required");
    }
    if (n <= k) throw std::invalid_argument("regression: need more observations than columns");
    check_rank(Xb, names);

    RegressionResult res;
    res.stage = in.stage;
    res.errors = in.errors;
    res.names = names;
    res.n_obs = static_cast<std::size_t>(n);
    res.df_residual = static_cast<int>(n - k);

    const Eigen::MatrixXd XtX = Xb.transpose() * Xb;
    const Eigen::MatrixXd bread = XtX.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    res.coef = XtX.ldlt().solve(Xb.transpose() * y);

    const Eigen::VectorXd e = y - Xr * res.coef;
    const double ssr = e.squaredNorm();
    const double sigma2 = ssr / static_cast<double>(n - k);
    const Eigen::MatrixXd V = sandwich(bread, Xb, e, in.errors, sigma2, n - k);

    res.se.resize(k);
    res.tstat.resize(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        res.se[j] = std::sqrt(std::max(0.0, V(j, j)));
        res.tstat[j] = (res.se[j] > 0.0) ? res.coef[j] / res.se[j] : kNaN;
    }

    const int ic = intercept_column(Xr);
    const double sst = (ic >= 0) ? (y.array() - y.mean()).square().sum()
                                 : y.array().square().sum();
    res.r_squared = (sst > 0.0) ? 1.0 - ssr / sst : kNaN;

    res.f_statistic = wald_f(res.coef, V, in.hypothesis);
    res.f_df1 = static_cast<int>(in.hypothesis.size());
    res.f_df2 = static_cast<int>(n - k);
    res.f_hypothesis = in.hypothesis_label;
    return res;
}

std::vector<int> all_but_intercept(const Eigen::MatrixXd& X) {
    const int ic = intercept_column(X);
    std::vector<int> idx;
    for (int j = 0; j < static_cast<int>(X.cols()); ++j) {
        if (j != ic) idx.push_back(j);
    }
    return idx;
}

}  // namespace

int RegressionResult::coef_index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return static_cast<int>(i);
    }
    return -1;
}

double RegressionResult::coef_of(const std::string& name) const {
    const int i = coef_index(name);
    if (i < 0) throw std::invalid_argument("no coefficient named '" + name + "'");
    return coef[i];
}

RegressionResult ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                     const std::vector<std::string>& names, ErrorType errors) {
    FitInput in{Stage::OLS, errors, all_but_intercept(X), "overall"};
    return fit(y, X, X, names, in);
}

TslsResult tsls(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                const std::vector<std::string>& names, const std::vector<int>& endogenous,
                const Eigen::MatrixXd& Z, const std::vector<std::string>& z_names,
                ErrorType errors) {
    if (endogenous.empty()) throw std::invalid_argument("tsls: no endogenous columns given");
    if (Z.cols() < static_cast<Eigen::Index>(endogenous.size())) {
        throw std::invalid_argument("tsls: under-identified (fewer instruments than endogenous)");
    }
    if (Z.rows() != X.rows()) throw std::invalid_argument("tsls: Z and X row counts differ");

    std::vector<bool> is_endog(static_cast<std::size_t>(X.cols()), false);
    for (int j : endogenous) {
        if (j < 0 || j >= static_cast<int>(X.cols())) {
            throw std::invalid_argument("tsls: endogenous column index out of range");
        }
        is_endog[static_cast<std::size_t>(j)] = true;
    }

    // First-stage design: excluded instruments first, exogenous columns after.
    const Eigen::Index q = Z.cols();
    Eigen::Index n_exog = 0;
    for (bool b : is_endog) n_exog += b ? 0 : 1;
    Eigen::MatrixXd W(X.rows(), q + n_exog);
    std::vector<std::string> w_names = z_names;
    W.leftCols(q) = Z;
    Eigen::Index wc = q;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        if (is_endog[static_cast<std::size_t>(j)]) continue;
        W.col(wc++) = X.col(j);
        w_names.push_back(names[static_cast<std::size_t>(j)]);
    }

    std::vector<int> z_idx(static_cast<std::size_t>(q));
    for (Eigen::Index i = 0; i < q; ++i) z_idx[static_cast<std::size_t>(i)] = static_cast<int>(i);

    TslsResult result;
    Eigen::MatrixXd Xhat = X;
    for (int j : endogenous) {
        FitInput in{Stage::FirstStage, errors, z_idx, "instrument relevance"};
        RegressionResult fs = fit(X.col(j), W, W, w_names, in);
        fs.weak_instruments = fs.f_statistic < kWeakInstrumentF;
        result.weak_instruments = result.weak_instruments || fs.weak_instruments;
        Xhat.col(j) = W * fs.coef;
        result.first_stages.push_back(std::move(fs));
    }

    FitInput in{Stage::SecondStage, errors, all_but_intercept(X), "overall"};
    result.second_stage = fit(y, Xhat, X, names, in);
    result.second_stage.weak_instruments = result.weak_instruments;
    return result;
}

EstimationReport estimate(const Panel& panel, const ModelSpec& spec) {
    const DesignData d = transform(panel, spec);
    const ErrorType errors = spec.robust ? ErrorType::HC1 : ErrorType::Classical;

    EstimationReport report;
    report.spec = spec;
    report.n_obs = static_cast<std::size_t>(d.y.size());
    report.ols = ols(d.y, d.X, d.x_names, errors);

    if (!spec.instruments.empty()) {
        if (spec.endogenous.empty()) {
            throw std::invalid_argument(
                "model spec: instruments given but no endogenous regressors named");
        }
        std::vector<int> endog_idx;
        for (const std::string& name : spec.endogenous) {
            bool found = false;
            for (std::size_t j = 0; j < d.x_names.size(); ++j) {
                if (d.x_names[j] == name) {
                    endog_idx.push_back(static_cast<int>(j));
                    found = true;
                    break;
                }
            }
            if (!found) {
                throw std::invalid_argument("model spec: endogenous '" + name +
                                            "' is not among the regressors");
            }
        }
        TslsResult iv = tsls(d.y, d.X, d.x_names, endog_idx, d.Z, d.z_names, errors);
        report.first_stages = std::move(iv.first_stages);
        report.second_stage = std::move(iv.second_stage);
        report.has_iv = true;
        report.weak_instruments = iv.weak_instruments;
    }
    return report;
}

}  // namespace stakemkt
