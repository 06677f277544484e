#include "stakemkt/panel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace stakemkt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
    static constexpr int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return lengths[m - 1];
}

// Hinnant's days_from_civil / civil_from_days.
long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097L + static_cast<long>(doe) - 719468L;
}

Date civil_from_days(long z) {
    z += 719468L;
    const long era = (z >= 0 ? z : z - 146096L) / 146097L;
    const unsigned doe = static_cast<unsigned>(z - era * 146097L);
    const unsigned yoe = (doe - doe / 1460u + doe / 36524u - doe / 146096u) / 365u;
    const long y = static_cast<long>(yoe) + era * 400L;
    const unsigned doy = doe - (365u * yoe + yoe / 4u - yoe / 100u);
    const unsigned mp = (5u * doy + 2u) / 153u;
    const unsigned d = doy - (153u * mp + 2u) / 5u + 1u;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

std::string trimmed(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(trimmed(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

Date Date::parse(const std::string& iso) {
    const std::string s = trimmed(iso);
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
        throw std::invalid_argument("expected ISO date YYYY-MM-DD, got '" + s + "'");
    }
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
            throw std::invalid_argument("expected ISO date YYYY-MM-DD, got '" + s + "'");
        }
    }
    Date date;
    date.year = std::stoi(s.substr(0, 4));
    date.month = std::stoi(s.substr(5, 2));
    date.day = std::stoi(s.substr(8, 2));
    if (date.month < 1 || date.month > 12 || date.day < 1 ||
        date.day > days_in_month(date.year, date.month)) {
        throw std::invalid_argument("invalid calendar date '" + s + "'");
    }
    return date;
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

long Date::day_number() const { return days_from_civil(year, month, day); }

int Date::weekday() const {
    const long dn = day_number();
    return static_cast<int>(((dn % 7) + 7 + 3) % 7);  // 1970-01-01 was a Thursday
}

int Date::iso_week_key() const {
    const long thursday = day_number() - weekday() + 3;
    const Date th = civil_from_days(thursday);
    const long jan1 = days_from_civil(th.year, 1, 1);
    const int week = static_cast<int>((thursday - jan1) / 7) + 1;
    return th.year * 100 + week;
}

int Panel::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return static_cast<int>(i);
    }
    return -1;
}

const std::vector<double>& Panel::column(const std::string& name) const {
    const int i = column_index(name);
    if (i < 0) throw std::invalid_argument("panel has no column '" + name + "'");
    return values[static_cast<std::size_t>(i)];
}

Panel load_panel(std::istream& in) {
    Panel panel;
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) throw std::runtime_error("panel: empty input");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_csv_line(line);
    if (header.empty() || header[0] != "date") {
        throw std::runtime_error("panel line 1: header must start with 'date'");
    }
    panel.columns.assign(header.begin() + 1, header.end());
    for (const std::string& name : panel.columns) {
        if (name.empty()) throw std::runtime_error("panel line 1: empty column name");
    }
    panel.values.resize(panel.columns.size());

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trimmed(line).empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != panel.columns.size() + 1) {
            throw std::runtime_error("panel line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(panel.columns.size() + 1) + " cells, got " +
                                     std::to_string(cells.size()));
        }
        Date date;
        try {
            date = Date::parse(cells[0]);
        } catch (const std::exception& e) {
            throw std::runtime_error("panel line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!panel.dates.empty() && !(panel.dates.back() < date)) {
            throw std::runtime_error("panel line " + std::to_string(line_no) +
                                     ": dates must be strictly increasing");
        }
        bool missing = false;
        for (std::size_t c = 0; c < panel.columns.size(); ++c) {
            const std::string& cell = cells[c + 1];
            if (cell.empty() || cell == "NA" || cell == "nan") {
                panel.values[c].push_back(kNaN);
                missing = true;
                continue;
            }
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0') {
                throw std::runtime_error("panel line " + std::to_string(line_no) +
                                         ": cannot parse value '" + cell + "' in column '" +
                                         panel.columns[c] + "'");
            }
            panel.values[c].push_back(v);
        }
        if (missing) panel.flagged_rows.push_back(panel.dates.size());
        panel.dates.push_back(date);
    }
    return panel;
}

Panel load_panel_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open panel file '" + path + "'");
    return load_panel(in);
}

Panel aggregate_weekly(const Panel& panel) {
    Panel weekly;
    weekly.columns = panel.columns;
    weekly.values.resize(panel.columns.size());

    // dates are strictly increasing, so week keys appear in contiguous runs
    std::size_t r = 0;
    while (r < panel.rows()) {
        const int key = panel.dates[r].iso_week_key();
        std::size_t end = r;
        while (end < panel.rows() && panel.dates[end].iso_week_key() == key) ++end;
        weekly.dates.push_back(panel.dates[r]);
        bool missing = false;
        for (std::size_t c = 0; c < panel.columns.size(); ++c) {
            double sum = 0.0;
            std::size_t n = 0;
            bool any_nan = false;
            for (std::size_t i = r; i < end; ++i) {
                const double v = panel.values[c][i];
                if (std::isnan(v)) {
                    any_nan = true;
                } else {
                    sum += v;
                    ++n;
                }
            }
            if (any_nan || n == 0) {
                weekly.values[c].push_back(kNaN);
                missing = true;
            } else {
                weekly.values[c].push_back(sum / static_cast<double>(n));
            }
        }
        if (missing) weekly.flagged_rows.push_back(weekly.dates.size() - 1);
        r = end;
    }
    return weekly;
}

std::string Term::name() const {
    std::string n = column;
    if (lag > 0) n += "_lag" + std::to_string(lag);
    if (log) n = "log_" + n;
    return n;
}

Term Term::parse(const std::string& text) {
    const std::string s = trimmed(text);
    if (s.empty()) throw std::invalid_argument("empty regression term");
    if (s.rfind("log(", 0) == 0 && s.back() == ')') {
        Term t = parse(s.substr(4, s.size() - 5));
        t.log = true;
        return t;
    }
    if (s.rfind("lag(", 0) == 0 && s.back() == ')') {
        const std::string inner = s.substr(4, s.size() - 5);
        const std::size_t comma = inner.rfind(',');
        if (comma == std::string::npos) {
            throw std::invalid_argument("lag(...) needs a period count: '" + s + "'");
        }
        Term t = parse(inner.substr(0, comma));
        const std::string k = trimmed(inner.substr(comma + 1));
        char* end = nullptr;
        const long lag = std::strtol(k.c_str(), &end, 10);
        if (end == k.c_str() || *end != '\0' || lag < 0) {
            throw std::invalid_argument("bad lag count '" + k + "' in '" + s + "'");
        }
        t.lag += static_cast<int>(lag);
        return t;
    }
    if (s.find('(') != std::string::npos || s.find(')') != std::string::npos) {
        throw std::invalid_argument("cannot parse regression term '" + s + "'");
    }
    Term t;
    t.column = s;
    return t;
}

namespace {

Eigen::VectorXd term_series(const Panel& panel, const Term& term, int max_lag) {
    const int ci = panel.column_index(term.column);
    if (ci < 0) throw std::invalid_argument("model references unknown column '" + term.column + "'");
    const std::vector<double>& col = panel.values[static_cast<std::size_t>(ci)];
    const std::size_t n = panel.rows();
    const std::size_t m = n - static_cast<std::size_t>(max_lag);
    Eigen::VectorXd out(static_cast<Eigen::Index>(m));
    for (std::size_t r = 0; r < m; ++r) {
        const std::size_t src = r + static_cast<std::size_t>(max_lag - term.lag);
        double v = col[src];
        if (std::isnan(v)) {
            throw std::invalid_argument("column '" + term.column + "' is missing a value at row " +
                                        std::to_string(src + 1) + " (" +
                                        panel.dates[src].to_string() + ")");
        }
        if (term.log) {
            if (!(v > 0.0)) {
                throw std::invalid_argument("log of non-positive value in column '" + term.column +
                                            "' at row " + std::to_string(src + 1) + " (" +
                                            panel.dates[src].to_string() + ")");
            }
            v = std::log(v);
        }
        out[static_cast<Eigen::Index>(r)] = v;
    }
    return out;
}

}  // namespace

DesignData transform(const Panel& raw, const ModelSpec& spec) {
    const Panel panel = spec.weekly ? aggregate_weekly(raw) : raw;

    int max_lag = spec.response.lag;
    for (const Term& t : spec.regressors) max_lag = std::max(max_lag, t.lag);
    for (const Term& t : spec.instruments) max_lag = std::max(max_lag, t.lag);
    if (panel.rows() <= static_cast<std::size_t>(max_lag)) {
        throw std::invalid_argument("panel too short for the requested lags");
    }
    const Eigen::Index m = static_cast<Eigen::Index>(panel.rows()) - max_lag;

    DesignData d;
    d.y = term_series(panel, spec.response, max_lag);
    d.y_name = spec.response.name();

    const Eigen::Index k = static_cast<Eigen::Index>(spec.regressors.size()) +
                           (spec.intercept ? 1 : 0);
    d.X.resize(m, k);
    Eigen::Index col = 0;
    if (spec.intercept) {
        d.X.col(col).setOnes();
        d.x_names.push_back("const");
        ++col;
    }
    for (const Term& t : spec.regressors) {
        d.X.col(col++) = term_series(panel, t, max_lag);
        d.x_names.push_back(t.name());
    }

    d.Z.resize(m, static_cast<Eigen::Index>(spec.instruments.size()));
    for (Eigen::Index zc = 0; zc < d.Z.cols(); ++zc) {
        d.Z.col(zc) = term_series(panel, spec.instruments[static_cast<std::size_t>(zc)], max_lag);
        d.z_names.push_back(spec.instruments[static_cast<std::size_t>(zc)].name());
    }
    return d;
}

}  // namespace stakemkt
