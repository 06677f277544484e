#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stakemkt {

// Civil date with ISO-8601 week arithmetic (no timezone concerns: the panel
// is daily).
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    static Date parse(const std::string& iso);  // strict YYYY-MM-DD
    std::string to_string() const;
    long day_number() const;  // days since 1970-01-01
    int weekday() const;      // 0 = Monday .. 6 = Sunday
    // ISO week key: week-based year * 100 + week number, e.g. 202049.
    int iso_week_key() const;

    auto operator<=>(const Date&) const = default;
};

// Date-indexed numeric panel. NaN marks a missing cell; rows containing any
// missing value are listed in flagged_rows.
struct Panel {
    std::vector<Date> dates;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> values;  // column-major
    std::vector<std::size_t> flagged_rows;

    std::size_t rows() const { return dates.size(); }
    int column_index(const std::string& name) const;  // -1 when absent
    const std::vector<double>& column(const std::string& name) const;
};

// CSV with a "date,<col>,<col>,..." header, ISO dates, strictly increasing.
// Parse failures throw with 1-based line numbers.
Panel load_panel(std::istream& in);
Panel load_panel_file(const std::string& path);

// Collapses the panel to ISO-week means of levels. Weeks keyed by
// (week-based year, week number); the week's date is its first observed day.
Panel aggregate_weekly(const Panel& panel);

// One regression term: a column, optionally lagged by `lag` periods and/or
// log-transformed (log applied after the lag shift).
struct Term {
    std::string column;
    int lag = 0;
    bool log = false;

    std::string name() const;
    // Grammar: column | log(term) | lag(term, k). E.g. "log(lag(gas_fees,7))".
    static Term parse(const std::string& text);
};

struct ModelSpec {
    Term response;
    std::vector<Term> regressors;   // exogenous controls (and endogenous columns)
    std::vector<Term> instruments;  // empty for plain OLS
    std::vector<std::string> endogenous;  // regressor names treated as endogenous
    bool intercept = true;
    bool weekly = false;
    bool robust = true;
};

// Aligned design matrices: logs and lags applied, the first max-lag rows
// dropped, and an intercept column prepended when requested.
struct DesignData {
    Eigen::VectorXd y;
    std::string y_name;
    Eigen::MatrixXd X;
    std::vector<std::string> x_names;
    Eigen::MatrixXd Z;  // zero columns when no instruments
    std::vector<std::string> z_names;
};

DesignData transform(const Panel& panel, const ModelSpec& spec);

}  // namespace stakemkt
