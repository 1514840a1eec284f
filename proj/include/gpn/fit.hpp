#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "gpn/anchors.hpp"
#include "gpn/common.hpp"
#include "gpn/eval.hpp"
#include "gpn/geometry.hpp"
#include "gpn/kl_loss.hpp"
#include "gpn/raster.hpp"

namespace gpn {

enum class ParamSpace {
    raw,             // (mu_x, mu_y, ln sigma_l, ln sigma_s, theta)
    anchor_encoded,  // (tx, ty, tw, th, t_tan) against a given anchor
};

struct FitConfig {
    double learning_rate = 0.1;
    int max_iters = 500;
    double convergence_eps = 1e-12;  // stop when a step improves less
    ParamSpace space = ParamSpace::raw;
    std::optional<Anchor> anchor;  // required for anchor_encoded
    int trace_iou_cells = 64;      // per-step IoU resolution; 0 disables
    int final_iou_cells = 256;
};

/// One accepted descent step. iou is -1 when per-step IoU is disabled.
struct FitStep {
    double loss;
    Ellipse ellipse;
    double iou;
};

struct FitTrace {
    std::vector<FitStep> steps;  // accepted iterations, oldest first
    double initial_loss = 0.0;
    double final_loss = 0.0;
    Ellipse final_ellipse;
    double final_iou = 0.0;
    bool converged = false;
    int iterations = 0;

    FitTrace() : final_ellipse(0.0, 0.0, 1.0, 1.0, 0.0) {}
};

/// Loss blew past the divergence limit; carries what was computed so far.
class optimization_diverged : public error {
public:
    optimization_diverged(const std::string& msg, FitTrace trace_)
        : error(msg), trace(std::move(trace_)) {}

    FitTrace trace;
};

namespace detail {

inline constexpr double kDivergenceLimit = 1e6;
inline constexpr double kArmijoC = 1e-4;
inline constexpr int kMaxHalvings = 60;

using State = std::array<double, 5>;

struct DescentProblem {
    std::function<double(const State&)> loss;
    std::function<State(const State&)> grad;
    std::function<State(State)> renormalize;
    std::function<Ellipse(const State&)> to_ellipse;
};

inline void validate_fit_config(const FitConfig& cfg) {
    if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
        throw invalid_input("learning_rate must be positive");
    }
    if (cfg.max_iters < 0) {
        throw invalid_input("max_iters must be >= 0");
    }
    if (!(cfg.convergence_eps >= 0.0) ||
        !std::isfinite(cfg.convergence_eps)) {
        throw invalid_input("convergence_eps must be >= 0");
    }
    if (cfg.trace_iou_cells != 0 && cfg.trace_iou_cells < 64) {
        throw invalid_input("trace_iou_cells must be 0 or >= 64");
    }
    if (cfg.final_iou_cells < 64) {
        throw invalid_input("final_iou_cells must be >= 64");
    }
}

/// Gradient descent with halving backtracking under the Armijo rule.
/// Trial states that fail ellipse construction count as rejected steps.
/// The loss sequence is strictly decreasing; stopping happens on the
/// improvement threshold, a vanished gradient, an exhausted line search,
/// or the iteration budget.
inline FitTrace descend(const DescentProblem& prob, State state,
                        const Ellipse& target, const FitConfig& cfg) {
    validate_fit_config(cfg);
    FitTrace trace;
    double cur_loss = prob.loss(state);
    trace.initial_loss = cur_loss;
    trace.final_loss = cur_loss;
    trace.final_ellipse = prob.to_ellipse(state);
    if (cur_loss > kDivergenceLimit) {
        trace.final_iou =
            ellipse_iou(trace.final_ellipse, target, cfg.final_iou_cells);
        throw optimization_diverged("initial loss exceeds divergence limit",
                                    trace);
    }
    bool converged = cur_loss <= cfg.convergence_eps;

    for (int k = 1; !converged && k <= cfg.max_iters; ++k) {
        const State g = prob.grad(state);
        const double gg = g[0] * g[0] + g[1] * g[1] + g[2] * g[2] +
                          g[3] * g[3] + g[4] * g[4];
        if (gg == 0.0) {
            converged = true;
            break;
        }
        double alpha = cfg.learning_rate;
        bool accepted = false;
        State trial = state;
        double trial_loss = cur_loss;
        for (int h = 0; h < kMaxHalvings; ++h, alpha *= 0.5) {
            State cand;
            for (int i = 0; i < 5; ++i) cand[i] = state[i] - alpha * g[i];
            cand = prob.renormalize(cand);
            double cand_loss;
            try {
                cand_loss = prob.loss(cand);
            } catch (const degenerate_ellipse&) {
                continue;
            } catch (const degenerate_covariance&) {
                continue;
            }
            if (cand_loss <= cur_loss - kArmijoC * alpha * gg) {
                trial = cand;
                trial_loss = cand_loss;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // No measurable descent left at machine-scale steps.
            converged = true;
            break;
        }
        const double improvement = cur_loss - trial_loss;
        state = trial;
        cur_loss = trial_loss;
        trace.iterations = k;
        const Ellipse e = prob.to_ellipse(state);
        const double step_iou =
            cfg.trace_iou_cells > 0
                ? ellipse_iou(e, target, cfg.trace_iou_cells)
                : -1.0;
        trace.steps.push_back({cur_loss, e, step_iou});
        if (cur_loss > kDivergenceLimit) {
            trace.final_loss = cur_loss;
            trace.final_ellipse = e;
            trace.final_iou = ellipse_iou(e, target, cfg.final_iou_cells);
            throw optimization_diverged("loss exceeded divergence limit",
                                        trace);
        }
        if (improvement < cfg.convergence_eps) {
            converged = true;
        }
    }
    trace.final_loss = cur_loss;
    trace.final_ellipse = prob.to_ellipse(state);
    trace.final_iou =
        ellipse_iou(trace.final_ellipse, target, cfg.final_iou_cells);
    trace.converged = converged;
    return trace;
}

}  // namespace detail

/// Fits a proposal to the target by descending the KL divergence with its
/// analytic gradient. In raw space the axes move in log-space (positivity
/// without projection) and theta is renormalized each step; in encoded
/// space the five anchor-relative parameters move under the chain rule.
inline FitTrace fit_kl(const Ellipse& target, const Ellipse& init,
                       const FitConfig& cfg = {}) {
    detail::validate_fit_config(cfg);
    detail::DescentProblem prob;
    if (cfg.space == ParamSpace::raw) {
        const auto to_ellipse = [](const detail::State& s) {
            return Ellipse(s[0], s[1], std::exp(s[2]), std::exp(s[3]), s[4]);
        };
        prob.to_ellipse = to_ellipse;
        prob.loss = [target, to_ellipse](const detail::State& s) {
            return kl_divergence(target, to_ellipse(s));
        };
        prob.grad = [target, to_ellipse](const detail::State& s) {
            const Ellipse p = to_ellipse(s);
            const ParamGradient g = kl_gradient(target, p);
            return detail::State{g.d_mu_x, g.d_mu_y, g.d_sigma_l * p.sigma_l,
                                 g.d_sigma_s * p.sigma_s, g.d_theta};
        };
        prob.renormalize = [](detail::State s) {
            s[4] = normalize_angle(s[4]);
            return s;
        };
        return detail::descend(
            prob,
            {init.mu_x, init.mu_y, std::log(init.sigma_l),
             std::log(init.sigma_s), init.theta},
            target, cfg);
    }

    if (!cfg.anchor.has_value()) {
        throw invalid_input("anchor_encoded space requires an anchor");
    }
    const Anchor anchor = *cfg.anchor;
    const auto to_ellipse = [anchor](const detail::State& s) {
        return decode({s[0], s[1], s[2], s[3], s[4]}, anchor);
    };
    prob.to_ellipse = to_ellipse;
    prob.loss = [target, to_ellipse](const detail::State& s) {
        return kl_divergence(target, to_ellipse(s));
    };
    prob.grad = [target, to_ellipse, anchor](const detail::State& s) {
        const Ellipse p = to_ellipse(s);
        const ParamGradient g = kl_gradient(target, p);
        const double dtheta_dtan = 1.0 / (1.0 + s[4] * s[4]);
        return detail::State{g.d_mu_x * anchor.w, g.d_mu_y * anchor.h,
                             g.d_sigma_l * p.sigma_l, g.d_sigma_s * p.sigma_s,
                             g.d_theta * dtheta_dtan};
    };
    prob.renormalize = [](detail::State s) { return s; };
    const EncodedEllipse enc = encode(init, anchor);
    return detail::descend(prob, {enc.tx, enc.ty, enc.tw, enc.th, enc.t_tan},
                           target, cfg);
}

/// Baseline fitter: descends the smoothed-L1 regression loss between the
/// encoded proposal and the encoded target over the five anchor-relative
/// parameters. (The parameter space is always the encoded one; cfg.space
/// is ignored here.)
inline FitTrace fit_regression(const Ellipse& target, const Ellipse& init,
                               const Anchor& anchor,
                               const FitConfig& cfg = {}) {
    detail::validate_fit_config(cfg);
    const EncodedEllipse tgt = encode(target, anchor);
    detail::DescentProblem prob;
    prob.to_ellipse = [anchor](const detail::State& s) {
        return decode({s[0], s[1], s[2], s[3], s[4]}, anchor);
    };
    prob.loss = [tgt](const detail::State& s) {
        return rpn_regression_loss({s[0], s[1], s[2], s[3], s[4]}, tgt);
    };
    prob.grad = [tgt](const detail::State& s) {
        return detail::State{smoothed_l1_derivative(s[0], tgt.tx),
                             smoothed_l1_derivative(s[1], tgt.ty),
                             smoothed_l1_derivative(s[2], tgt.tw),
                             smoothed_l1_derivative(s[3], tgt.th),
                             smoothed_l1_derivative(s[4], tgt.t_tan)};
    };
    prob.renormalize = [](detail::State s) { return s; };
    const EncodedEllipse enc = encode(init, anchor);
    return detail::descend(prob, {enc.tx, enc.ty, enc.tw, enc.th, enc.t_tan},
                           target, cfg);
}

/// Anchor-grid and fitting budget for the KL-vs-regression experiment.
/// Both fitters descend the same encoded parameter space from the same
/// anchor and init with the same budget and learning rate, so the only
/// difference is the loss itself. The default iteration cap is
/// deliberately detector-scale (a detector head gets one shot, not an
/// unbounded optimization), which is where the two losses separate.
struct CompareConfig {
    FitConfig fit;
    double image_w = 512.0;
    double image_h = 512.0;
    double stride = 8.0;
    std::vector<double> scales = {16.0, 24.0, 32.0, 48.0, 96.0};
    std::vector<double> ratios = {1.0};
    int n_threads = 1;

    CompareConfig() {
        fit.learning_rate = 0.05;
        fit.max_iters = 15;
        fit.trace_iou_cells = 0;
        fit.space = ParamSpace::anchor_encoded;  // anchor set per target
    }
};

/// Per-target outcome of the two fitters from the shared init.
struct CompareRow {
    Ellipse target;
    Anchor anchor;
    Ellipse init;
    Ellipse kl_final;
    Ellipse reg_final;
    double target_aspect = 1.0;
    double kl_iou = 0.0;
    double reg_iou = 0.0;
    double kl_loss = 0.0;
    double reg_loss = 0.0;
    int kl_iters = 0;
    int reg_iters = 0;
    bool kl_converged = false;
    bool reg_converged = false;
    bool kl_diverged = false;
    bool reg_diverged = false;
    double kl_angle_err_deg = 0.0;
    double reg_angle_err_deg = 0.0;
};

struct AngleErrorBin {
    double aspect_lo = 0.0;
    double aspect_hi = 0.0;
    int count = 0;
    double kl_median_deg = 0.0;
    double reg_median_deg = 0.0;
    double kl_mean_deg = 0.0;
    double reg_mean_deg = 0.0;
};

struct CompareSummary {
    int n = 0;
    int n_diverged = 0;  // rows where either fitter diverged (excluded below)
    double kl_mean_iou = 0.0;
    double reg_mean_iou = 0.0;
    double kl_median_iou = 0.0;
    double reg_median_iou = 0.0;
    // Fractions reaching IoU >= 0.5, 0.7, 0.9, in that order.
    std::array<double, 3> kl_frac_at = {0.0, 0.0, 0.0};
    std::array<double, 3> reg_frac_at = {0.0, 0.0, 0.0};
    double kl_mean_iters = 0.0;
    double reg_mean_iters = 0.0;
    std::vector<AngleErrorBin> angle_bins;
};

struct CompareReport {
    std::vector<CompareRow> rows;  // in target order
    CompareSummary summary;
};

inline const std::array<double, 3> kIouFractions = {0.5, 0.7, 0.9};
inline const std::vector<double> kAspectBinEdges = {1.0, 1.2, 1.5, 2.0, 3.0};

namespace detail {

inline double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const size_t m = v.size();
    return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

}  // namespace detail

/// Runs fit_kl and fit_regression on every target from the same init: the
/// inscribed circle of the target's argmax anchor (lowest index on ties).
/// Diverged fits flag the row and drop it from the aggregates. Rows are
/// produced in target order and the result is independent of n_threads.
inline CompareReport compare(const std::vector<Ellipse>& targets,
                             const CompareConfig& cfg = {}) {
    if (targets.empty()) {
        throw invalid_input("compare requires at least one target");
    }
    if (cfg.n_threads < 1) {
        throw invalid_input("n_threads must be >= 1");
    }
    detail::validate_fit_config(cfg.fit);
    const std::vector<Anchor> grid = generate_anchor_grid(
        cfg.image_w, cfg.image_h, cfg.stride, cfg.scales, cfg.ratios);

    const auto run_one = [&](const Ellipse& target) {
        const Box tb = ellipse_bbox(target);
        double best = -1.0;
        size_t best_i = 0;
        for (size_t i = 0; i < grid.size(); ++i) {
            const double iou = box_iou(grid[i].box(), tb);
            if (iou > best) {
                best = iou;
                best_i = i;
            }
        }
        const Anchor anchor = grid[best_i];
        const double r = 0.5 * std::min(anchor.w, anchor.h);
        const Ellipse init(anchor.cx, anchor.cy, r, r, 0.0);
        FitConfig fc = cfg.fit;
        if (fc.space == ParamSpace::anchor_encoded) fc.anchor = anchor;

        CompareRow row{target, anchor,          init,
                       init /*kl_final*/, init /*reg_final*/};
        row.target_aspect = aspect_ratio(target);
        try {
            const FitTrace t = fit_kl(target, init, fc);
            row.kl_final = t.final_ellipse;
            row.kl_iou = t.final_iou;
            row.kl_loss = t.final_loss;
            row.kl_iters = t.iterations;
            row.kl_converged = t.converged;
        } catch (const optimization_diverged& e) {
            row.kl_diverged = true;
            row.kl_final = e.trace.final_ellipse;
            row.kl_loss = e.trace.final_loss;
        }
        try {
            const FitTrace t = fit_regression(target, init, anchor, fc);
            row.reg_final = t.final_ellipse;
            row.reg_iou = t.final_iou;
            row.reg_loss = t.final_loss;
            row.reg_iters = t.iterations;
            row.reg_converged = t.converged;
        } catch (const optimization_diverged& e) {
            row.reg_diverged = true;
            row.reg_final = e.trace.final_ellipse;
            row.reg_loss = e.trace.final_loss;
        }
        row.kl_angle_err_deg = angle_error_deg(row.kl_final, target);
        row.reg_angle_err_deg = angle_error_deg(row.reg_final, target);
        return row;
    };

    std::vector<std::optional<CompareRow>> slots(targets.size());
    if (cfg.n_threads == 1 || targets.size() < 2) {
        for (size_t i = 0; i < targets.size(); ++i) {
            slots[i] = run_one(targets[i]);
        }
    } else {
        std::atomic<size_t> next{0};
        const auto worker = [&] {
            while (true) {
                const size_t i = next.fetch_add(1);
                if (i >= targets.size()) break;
                slots[i] = run_one(targets[i]);
            }
        };
        std::vector<std::thread> pool;
        const int n = std::min<int>(cfg.n_threads,
                                    static_cast<int>(targets.size()));
        pool.reserve(n);
        for (int t = 0; t < n; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    CompareReport report;
    report.rows.reserve(targets.size());
    for (auto& s : slots) report.rows.push_back(std::move(*s));

    CompareSummary& sum = report.summary;
    sum.n = static_cast<int>(report.rows.size());
    std::vector<double> kl_ious, reg_ious;
    double kl_iters = 0.0, reg_iters = 0.0;
    int ok = 0;
    for (const CompareRow& r : report.rows) {
        if (r.kl_diverged || r.reg_diverged) {
            ++sum.n_diverged;
            continue;
        }
        ++ok;
        kl_ious.push_back(r.kl_iou);
        reg_ious.push_back(r.reg_iou);
        kl_iters += r.kl_iters;
        reg_iters += r.reg_iters;
        for (size_t q = 0; q < kIouFractions.size(); ++q) {
            sum.kl_frac_at[q] += r.kl_iou >= kIouFractions[q] ? 1.0 : 0.0;
            sum.reg_frac_at[q] += r.reg_iou >= kIouFractions[q] ? 1.0 : 0.0;
        }
    }
    if (ok > 0) {
        for (double v : kl_ious) sum.kl_mean_iou += v;
        for (double v : reg_ious) sum.reg_mean_iou += v;
        sum.kl_mean_iou /= ok;
        sum.reg_mean_iou /= ok;
        sum.kl_median_iou = detail::median_of(kl_ious);
        sum.reg_median_iou = detail::median_of(reg_ious);
        for (size_t q = 0; q < kIouFractions.size(); ++q) {
            sum.kl_frac_at[q] /= ok;
            sum.reg_frac_at[q] /= ok;
        }
        sum.kl_mean_iters = kl_iters / ok;
        sum.reg_mean_iters = reg_iters / ok;
    }

    // Angle-error table binned by target aspect: consecutive edge pairs,
    // then a final catch-all bin above the last edge.
    for (size_t b = 0; b + 1 <= kAspectBinEdges.size(); ++b) {
        AngleErrorBin bin;
        bin.aspect_lo = kAspectBinEdges[b];
        bin.aspect_hi = b + 1 < kAspectBinEdges.size()
                            ? kAspectBinEdges[b + 1]
                            : std::numeric_limits<double>::infinity();
        std::vector<double> kl_err, reg_err;
        for (const CompareRow& r : report.rows) {
            if (r.kl_diverged || r.reg_diverged) continue;
            if (r.target_aspect >= bin.aspect_lo &&
                r.target_aspect < bin.aspect_hi) {
                kl_err.push_back(r.kl_angle_err_deg);
                reg_err.push_back(r.reg_angle_err_deg);
            }
        }
        bin.count = static_cast<int>(kl_err.size());
        if (bin.count > 0) {
            double km = 0.0, rm = 0.0;
            for (double v : kl_err) km += v;
            for (double v : reg_err) rm += v;
            bin.kl_mean_deg = km / bin.count;
            bin.reg_mean_deg = rm / bin.count;
            bin.kl_median_deg = detail::median_of(kl_err);
            bin.reg_median_deg = detail::median_of(reg_err);
        }
        sum.angle_bins.push_back(bin);
    }
    return report;
}

}  // namespace gpn
