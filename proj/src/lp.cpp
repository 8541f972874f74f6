#include "solpol/lp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

namespace solpol::lp {

std::size_t LinearProgram::add_var(double lo, double hi, double cost) {
    objective.push_back(cost);
    lower.push_back(lo);
    upper.push_back(hi);
    return objective.size() - 1;
}

std::size_t LinearProgram::add_le(const std::vector<std::pair<std::size_t, double>>& terms, double rhs) {
    const std::size_t row = ineq_rhs.size();
    for (const auto& [col, v] : terms) ineq.push_back({row, col, v});
    ineq_rhs.push_back(rhs);
    return row;
}

std::size_t LinearProgram::add_eq(const std::vector<std::pair<std::size_t, double>>& terms, double rhs) {
    const std::size_t row = eq_rhs.size();
    for (const auto& [col, v] : terms) eq.push_back({row, col, v});
    eq_rhs.push_back(rhs);
    return row;
}

namespace {

void validate_triplets(const std::vector<Triplet>& ts, std::size_t rows, std::size_t cols, const char* name) {
    std::vector<std::pair<std::size_t, std::size_t>> keys;
    keys.reserve(ts.size());
    for (const auto& t : ts) {
        if (t.row >= rows || t.col >= cols)
            throw std::invalid_argument(std::string(name) + " triplet index out of range");
        if (!std::isfinite(t.value)) throw std::invalid_argument(std::string(name) + " triplet is not finite");
        keys.emplace_back(t.row, t.col);
    }
    std::sort(keys.begin(), keys.end());
    const auto dup = std::adjacent_find(keys.begin(), keys.end());
    if (dup != keys.end())
        throw std::invalid_argument(std::string(name) + " has duplicate triplet (" + std::to_string(dup->first) + "," +
                                    std::to_string(dup->second) + ")");
}

}  // namespace

void LinearProgram::validate() const {
    const std::size_t n = num_vars();
    if (lower.size() != n || upper.size() != n) throw std::invalid_argument("bound vectors must match objective length");
    for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(objective[j])) throw std::invalid_argument("objective coefficient is not finite");
        if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j] || lower[j] == kInf ||
            upper[j] == -kInf)
            throw std::invalid_argument("invalid bounds for variable " + std::to_string(j));
    }
    for (double b : ineq_rhs)
        if (!std::isfinite(b)) throw std::invalid_argument("inequality rhs is not finite");
    for (double b : eq_rhs)
        if (!std::isfinite(b)) throw std::invalid_argument("equality rhs is not finite");
    validate_triplets(ineq, num_ineq(), n, "inequality");
    validate_triplets(eq, num_eq(), n, "equality");
}

std::string to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::Unbounded: return "unbounded";
    }
    return "unknown";
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kDropTol = 1e-12;
constexpr int kDegenerateRunBeforeBland = 50;
constexpr std::size_t kRefreshInterval = 100;

class Simplex {
public:
    Simplex(const LinearProgram& lp, const SolveOptions& opt)
        : opt_(opt), n_(lp.num_vars()), m_ub_(lp.num_ineq()), m_(lp.num_ineq() + lp.num_eq()), cols_(n_ + m_) {
        tab_.assign(m_ * cols_, 0.0);
        rhs_.assign(m_, 0.0);
        lo_.assign(cols_, 0.0);
        hi_.assign(cols_, 0.0);
        cost_.assign(cols_, 0.0);
        x_.assign(cols_, 0.0);
        basis_.assign(m_, 0);
        pos_.assign(cols_, -1);
        dead_.assign(cols_, false);

        for (const auto& t : lp.ineq) at(t.row, t.col) = t.value;
        for (const auto& t : lp.eq) at(m_ub_ + t.row, t.col) = t.value;
        for (std::size_t i = 0; i < m_ub_; ++i) rhs_[i] = lp.ineq_rhs[i];
        for (std::size_t i = 0; i < lp.num_eq(); ++i) rhs_[m_ub_ + i] = lp.eq_rhs[i];

        for (std::size_t j = 0; j < n_; ++j) {
            lo_[j] = lp.lower[j];
            hi_[j] = lp.upper[j];
            cost_[j] = -lp.objective[j];  // internal form minimizes
            x_[j] = std::clamp(0.0, lo_[j], hi_[j]);
            if (lo_[j] == hi_[j]) dead_[j] = true;  // fixed columns never enter
        }
        for (std::size_t i = 0; i < m_; ++i) {
            const std::size_t c = n_ + i;
            at(i, c) = 1.0;
            lo_[c] = 0.0;
            hi_[c] = i < m_ub_ ? kInf : 0.0;  // slack or artificial
            basis_[i] = c;
            pos_[c] = static_cast<long>(i);
        }
    }

    LpSolution run() {
        crash_equalities();
        recompute_basics();
        // Retired trailing columns (equality artificials) are never read again.
        while (active_ > 0 && dead_[active_ - 1] && pos_[active_ - 1] < 0) --active_;

        const std::size_t cap = opt_.max_iterations ? opt_.max_iterations : 50 * (m_ + cols_) + 1000;
        std::size_t iter = 0;
        int degenerate_run = 0;
        std::size_t since_refresh = 0;
        bool d_valid = false;
        std::vector<double> ceff(cols_), last_ceff(cols_);
        for (;; ++iter) {
            if (iter > cap) throw std::runtime_error("simplex iteration limit exceeded");
            const bool phase1 = effective_costs(ceff);
            bool fresh = false;
            if (!d_valid || since_refresh >= kRefreshInterval || !reprice_changes(ceff, last_ceff)) {
                price(ceff, d_);
                d_valid = fresh = true;
                since_refresh = 0;
            }
            last_ceff.swap(ceff);
            const bool bland = degenerate_run >= kDegenerateRunBeforeBland;
            long enter = -1;
            int dir = 0;
            double best = 0.0;
            for (std::size_t j = 0; j < active_; ++j) {
                if (pos_[j] >= 0 || dead_[j]) continue;
                int dj_dir = 0;
                if (d_[j] < -opt_.optimality_tol && x_[j] < hi_[j]) dj_dir = 1;
                else if (d_[j] > opt_.optimality_tol && x_[j] > lo_[j]) dj_dir = -1;
                if (dj_dir == 0) continue;
                const double score = std::abs(d_[j]);
                if (enter < 0 || (!bland && score > best)) {
                    enter = static_cast<long>(j);
                    dir = dj_dir;
                    best = score;
                    if (bland) break;
                }
            }
            if (enter < 0) {
                if (!fresh) {
                    d_valid = false;  // confirm optimality on freshly computed reduced costs
                    continue;
                }
                if (phase1) return finish(Status::Infeasible, iter, d_);
                return finish(Status::Optimal, iter, d_);
            }
            const Step step = ratio_test(static_cast<std::size_t>(enter), dir, phase1, bland);
            if (step.unbounded) {
                if (phase1) throw std::runtime_error("simplex: unbounded phase-1 direction");
                return finish(Status::Unbounded, iter, d_);
            }
            apply(static_cast<std::size_t>(enter), dir, step);
            ++since_refresh;
            degenerate_run = step.t <= 1e-12 ? degenerate_run + 1 : 0;
        }
    }

private:
    struct Step {
        double t = 0.0;
        long row = -1;  // -1 means bound flip of the entering variable
        double target = 0.0;
        bool unbounded = false;
    };

    double& at(std::size_t i, std::size_t j) { return tab_[i * cols_ + j]; }
    double at(std::size_t i, std::size_t j) const { return tab_[i * cols_ + j]; }

    bool below(std::size_t c) const { return x_[c] < lo_[c] - opt_.tol; }
    bool above(std::size_t c) const { return x_[c] > hi_[c] + opt_.tol; }

    static int range_class(double lo, double hi) {
        return static_cast<int>(std::isinf(lo)) + static_cast<int>(std::isinf(hi));
    }

    // Replace each equality artificial by a structural column, preferring the widest bounds.
    void crash_equalities() {
        for (std::size_t r = m_ub_; r < m_; ++r) {
            double row_max = 0.0;
            for (std::size_t j = 0; j < n_; ++j) row_max = std::max(row_max, std::abs(at(r, j)));
            if (row_max == 0.0) continue;
            long pick = -1;
            int pick_class = -1;
            double pick_range = -1.0, pick_abs = 0.0;
            for (std::size_t j = 0; j < n_; ++j) {
                const double a = std::abs(at(r, j));
                if (pos_[j] >= 0 || dead_[j] || a < 1e-3 * row_max) continue;
                const int cls = range_class(lo_[j], hi_[j]);
                const double range = cls ? kInf : hi_[j] - lo_[j];
                const bool better = cls > pick_class ||
                                    (cls == pick_class && (range > pick_range || (range == pick_range && a > pick_abs)));
                if (pick < 0 || better) {
                    pick = static_cast<long>(j);
                    pick_class = cls;
                    pick_range = range;
                    pick_abs = a;
                }
            }
            if (pick < 0) continue;
            const std::size_t leaving = basis_[r];
            pivot(r, static_cast<std::size_t>(pick), true);
            retire(leaving);
        }
    }

    void recompute_basics() {
        std::vector<double> xb(rhs_);
        for (std::size_t j = 0; j < cols_; ++j) {
            if (pos_[j] >= 0 || x_[j] == 0.0) continue;
            for (std::size_t i = 0; i < m_; ++i) xb[i] -= at(i, j) * x_[j];
        }
        for (std::size_t i = 0; i < m_; ++i) x_[basis_[i]] = xb[i];
    }

    // Phase-1 costs (+-1 on out-of-bound basics) when any basic is infeasible, else the true costs.
    bool effective_costs(std::vector<double>& c) const {
        std::fill(c.begin(), c.end(), 0.0);
        bool phase1 = false;
        for (std::size_t i = 0; i < m_; ++i) {
            const std::size_t b = basis_[i];
            if (below(b)) { c[b] = -1.0; phase1 = true; }
            else if (above(b)) { c[b] = 1.0; phase1 = true; }
        }
        if (!phase1) c = cost_;
        return phase1;
    }

    // Applies cost changes to d_ in place; false when so many basic costs moved that a full price is cheaper.
    bool reprice_changes(const std::vector<double>& c, const std::vector<double>& prev) {
        changed_.clear();
        for (std::size_t j = 0; j < active_; ++j) {
            if (c[j] == prev[j]) continue;
            if (pos_[j] >= 0) changed_.push_back(j);
            if (changed_.size() > m_ / 4 + 1) return false;
        }
        for (std::size_t j = 0; j < active_; ++j)
            if (pos_[j] < 0) d_[j] += c[j] - prev[j];
        for (std::size_t j : changed_) {
            const double delta = c[j] - prev[j];
            const double* row = &tab_[static_cast<std::size_t>(pos_[j]) * cols_];
            for (std::size_t k = 0; k < active_; ++k) d_[k] -= delta * row[k];
            d_[j] = 0.0;
        }
        return true;
    }

    void price(const std::vector<double>& c, std::vector<double>& d) const {
        d = c;
        for (std::size_t i = 0; i < m_; ++i) {
            const double cb = c[basis_[i]];
            if (cb == 0.0) continue;
            const double* row = &tab_[i * cols_];
            for (std::size_t j = 0; j < active_; ++j) d[j] -= cb * row[j];
        }
    }

    Step ratio_test(std::size_t j, int dir, bool phase1, bool bland) const {
        Step s;
        const double own = dir > 0 ? hi_[j] - x_[j] : x_[j] - lo_[j];
        double best_t = kInf, best_alpha = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            const double alpha = at(i, j);
            if (std::abs(alpha) <= kPivotTol) continue;
            const std::size_t c = basis_[i];
            const double delta = -dir * alpha;  // rate of change of this basic variable
            double t = kInf, target = 0.0;
            if (delta < 0.0) {
                if (phase1 && above(c)) { t = (x_[c] - hi_[c]) / -delta; target = hi_[c]; }
                else if (!below(c) && lo_[c] > -kInf) { t = std::max(0.0, x_[c] - lo_[c]) / -delta; target = lo_[c]; }
            } else {
                if (phase1 && below(c)) { t = (lo_[c] - x_[c]) / delta; target = lo_[c]; }
                else if (!above(c) && hi_[c] < kInf) { t = std::max(0.0, hi_[c] - x_[c]) / delta; target = hi_[c]; }
            }
            if (t == kInf) continue;
            bool take = false;
            if (t < best_t - 1e-12) take = true;
            else if (t <= best_t + 1e-12) {
                take = bland ? c < basis_[static_cast<std::size_t>(s.row)] : std::abs(alpha) > best_alpha;
            }
            if (take) {
                best_t = t;
                best_alpha = std::abs(alpha);
                s.row = static_cast<long>(i);
                s.target = target;
            }
        }
        if (own <= best_t) {
            if (own == kInf) {
                s.unbounded = true;
                return s;
            }
            s.t = own;
            s.row = -1;
            return s;
        }
        s.t = best_t;
        return s;
    }

    void apply(std::size_t j, int dir, const Step& s) {
        if (s.t > 0.0) {
            x_[j] += dir * s.t;
            for (std::size_t i = 0; i < m_; ++i) {
                const double alpha = at(i, j);
                if (alpha != 0.0) x_[basis_[i]] -= dir * alpha * s.t;
            }
        }
        if (s.row < 0) {
            x_[j] = dir > 0 ? hi_[j] : lo_[j];
            return;
        }
        const auto r = static_cast<std::size_t>(s.row);
        const std::size_t leaving = basis_[r];
        x_[leaving] = s.target;
        pivot(r, j, false);
        const double dj = d_[j];
        const double* prow = &tab_[r * cols_];
        for (std::size_t c : nz_) d_[c] -= dj * prow[c];
        d_[j] = 0.0;
        retire(leaving);
    }

    void retire(std::size_t leaving) {
        if (lo_[leaving] == hi_[leaving]) dead_[leaving] = true;
    }

    void pivot(std::size_t r, std::size_t j, bool with_rhs) {
        double* prow = &tab_[r * cols_];
        const double inv = 1.0 / prow[j];
        nz_.clear();
        for (std::size_t c = 0; c < active_; ++c) {
            if (prow[c] == 0.0) continue;
            prow[c] *= inv;
            if (std::abs(prow[c]) < kDropTol || (dead_[c] && pos_[c] < 0)) {
                prow[c] = 0.0;
                continue;
            }
            nz_.push_back(c);
        }
        prow[j] = 1.0;
        if (with_rhs) rhs_[r] *= inv;
        for (std::size_t k = 0; k < m_; ++k) {
            if (k == r) continue;
            double* row = &tab_[k * cols_];
            const double f = row[j];
            if (f == 0.0) continue;
            for (std::size_t c : nz_) row[c] -= f * prow[c];
            row[j] = 0.0;
            if (with_rhs) rhs_[k] -= f * rhs_[r];
        }
        pos_[basis_[r]] = -1;
        basis_[r] = j;
        pos_[j] = static_cast<long>(r);
    }

    LpSolution finish(Status status, std::size_t iter, const std::vector<double>& d) const {
        LpSolution sol;
        sol.status = status;
        sol.iterations = iter;
        if (status != Status::Optimal) return sol;
        sol.x.resize(n_);
        double obj = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
            sol.x[j] = std::clamp(x_[j], lo_[j], hi_[j]);
            obj -= cost_[j] * sol.x[j];
        }
        sol.objective_value = obj;
        for (std::size_t j = 0; j < cols_; ++j) {
            if (pos_[j] >= 0 || dead_[j]) continue;
            sol.min_reduced_cost = std::min(sol.min_reduced_cost, std::abs(d[j]));
        }
        sol.dual_degenerate = sol.min_reduced_cost < opt_.degenerate_tol;
        return sol;
    }

    SolveOptions opt_;
    std::size_t n_, m_ub_, m_, cols_, active_ = cols_;
    std::vector<double> tab_, rhs_, lo_, hi_, cost_, x_, d_;
    std::vector<std::size_t> basis_;
    std::vector<long> pos_;
    std::vector<bool> dead_;
    std::vector<std::size_t> nz_, changed_;
};

}  // namespace

LpSolution solve(const LinearProgram& lp, const SolveOptions& options) {
    lp.validate();
    if (!(options.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    Simplex simplex(lp, options);
    return simplex.run();
}

LpSolution solve(const LinearProgram& lp, double tol) {
    SolveOptions opt;
    opt.tol = tol;
    return solve(lp, opt);
}

std::vector<Violation> check_feasibility(const LinearProgram& lp, const std::vector<double>& x, double tol) {
    if (x.size() != lp.num_vars()) throw std::invalid_argument("point dimension does not match program");
    std::vector<Violation> out;
    std::vector<double> ub(lp.num_ineq(), 0.0), eq(lp.num_eq(), 0.0);
    for (const auto& t : lp.ineq) ub[t.row] += t.value * x[t.col];
    for (const auto& t : lp.eq) eq[t.row] += t.value * x[t.col];
    for (std::size_t i = 0; i < ub.size(); ++i) {
        const double v = ub[i] - lp.ineq_rhs[i];
        if (v > tol) out.push_back({ConstraintKind::Inequality, i, v});
    }
    for (std::size_t i = 0; i < eq.size(); ++i) {
        const double v = std::abs(eq[i] - lp.eq_rhs[i]);
        if (v > tol) out.push_back({ConstraintKind::Equality, i, v});
    }
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (lp.lower[j] - x[j] > tol) out.push_back({ConstraintKind::LowerBound, j, lp.lower[j] - x[j]});
        if (x[j] - lp.upper[j] > tol) out.push_back({ConstraintKind::UpperBound, j, x[j] - lp.upper[j]});
    }
    return out;
}

void write_text(const LinearProgram& lp, std::ostream& os) {
    const auto num = [](double v) {
        if (v == kInf) return std::string("inf");
        if (v == -kInf) return std::string("-inf");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    os << "vars " << lp.num_vars() << " ineq " << lp.num_ineq() << " eq " << lp.num_eq() << "\n";
    os << "objective\n";
    for (std::size_t j = 0; j < lp.num_vars(); ++j) os << j << ' ' << num(lp.objective[j]) << "\n";
    os << "bounds\n";
    for (std::size_t j = 0; j < lp.num_vars(); ++j) os << j << ' ' << num(lp.lower[j]) << ' ' << num(lp.upper[j]) << "\n";
    os << "ineq\n";
    for (const auto& t : lp.ineq) os << t.row << ' ' << t.col << ' ' << num(t.value) << "\n";
    for (std::size_t i = 0; i < lp.num_ineq(); ++i) os << "rhs " << i << ' ' << num(lp.ineq_rhs[i]) << "\n";
    os << "eq\n";
    for (const auto& t : lp.eq) os << t.row << ' ' << t.col << ' ' << num(t.value) << "\n";
    for (std::size_t i = 0; i < lp.num_eq(); ++i) os << "rhs " << i << ' ' << num(lp.eq_rhs[i]) << "\n";
}

}  // namespace solpol::lp
