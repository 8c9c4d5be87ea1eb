#include "bwp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bwp {

namespace {

// Piecewise-constant count paths for one class (or all classes pooled when
// cls_mask == 0), replayed from the event log.
struct CountPath {
    std::vector<double> times;   // event times, increasing
    std::vector<double> counts;  // count immediately after times[i]
};

CountPath replay(const Trajectory& traj, std::uint32_t cls_mask) {
    CountPath path;
    path.times.reserve(traj.events.size());
    path.counts.reserve(traj.events.size());
    double n = 0.0;
    for (const auto& e : traj.events) {
        if (cls_mask == 0 || e.cls == cls_mask)
            n += e.kind == EventKind::Arrival ? 1.0 : -1.0;
        path.times.push_back(e.time);
        path.counts.push_back(n);
    }
    return path;
}

// Integral of the count path over [a, b].
double integrate_counts(const CountPath& path, double a, double b) {
    double acc = 0.0;
    double level = 0.0;
    double t = 0.0;
    for (std::size_t i = 0; i < path.times.size(); ++i) {
        const double next = path.times[i];
        const double lo = std::max(a, t), hi = std::min(b, next);
        if (hi > lo) acc += level * (hi - lo);
        level = path.counts[i];
        t = next;
        if (t >= b) break;
    }
    if (t < b) acc += level * (b - std::max(a, t));
    return acc;
}

} // namespace

DensityEstimate ergodic_density(const Trajectory& traj, double area, std::uint32_t cls_mask,
                                double warmup, double window, double bias_factor,
                                int batches) {
    if (!(bias_factor > 0.0))
        throw std::invalid_argument("ergodic_density: bias factor must be > 0");
    if (!(window > 0.0)) throw std::invalid_argument("ergodic_density: window must be > 0");
    if (warmup + window > traj.final_time + 1e-12)
        throw std::invalid_argument("ergodic_density: window exceeds trajectory span");
    if (batches < 2) throw std::invalid_argument("ergodic_density: need >= 2 batches");

    DensityEstimate est;
    est.window_start = warmup;
    est.window_end = warmup + window;
    est.bias_factor = bias_factor;
    est.batches = batches;

    const CountPath path = replay(traj, cls_mask);
    std::size_t events_in_window = 0;
    for (double t : path.times)
        if (t >= warmup && t <= warmup + window) ++events_in_window;
    if (events_in_window < static_cast<std::size_t>(batches)) est.warning = true;

    const double bt = window / batches;
    std::vector<double> means(batches);
    double total = 0.0;
    for (int b = 0; b < batches; ++b) {
        means[b] = integrate_counts(path, warmup + b * bt, warmup + (b + 1) * bt) / bt;
        total += means[b];
    }
    const double mean = total / batches;
    double var = 0.0;
    for (double m : means) var += (m - mean) * (m - mean);
    var /= double(batches - 1);

    est.density = bias_factor * mean / area;
    est.std_error = bias_factor * std::sqrt(var / batches) / area;
    return est;
}

std::map<std::uint32_t, StayingSeries> staying_times(const Trajectory& traj) {
    std::map<std::uint32_t, StayingSeries> out;
    std::map<std::uint32_t, std::pair<double, std::uint64_t>> acc; // sum, count
    for (const auto& e : traj.events) {
        if (e.kind != EventKind::Departure) continue;
        auto& a = acc[e.cls];
        a.first += e.staying_time;
        a.second += 1;
        out[e.cls].emplace_back(e.time, a.first / double(a.second));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Regression and t quantiles

namespace {

// Regularized incomplete beta by Lentz's continued fraction.
double betacf(double a, double b, double x) {
    const int kMaxIter = 300;
    const double kEps = 3e-14, kFpMin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

double betainc(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, int df) {
    const double x = df / (df + t * t);
    const double tail = 0.5 * betainc(df / 2.0, 0.5, x);
    return t > 0.0 ? 1.0 - tail : tail;
}

} // namespace

double student_t_quantile(double p, int df) {
    if (df < 1) throw std::invalid_argument("student_t_quantile: df must be >= 1");
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("student_t_quantile: p must be in (0, 1)");
    if (p == 0.5) return 0.0;
    double lo = -1e3, hi = 1e3;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (student_t_cdf(mid, df) < p) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

RegressionResult linear_regression(const std::vector<std::pair<double, double>>& points) {
    const std::size_t n = points.size();
    if (n < 3) throw std::invalid_argument("linear_regression: need >= 3 points");
    double sx = 0.0, sy = 0.0;
    for (const auto& [x, y] : points) {
        sx += x;
        sy += y;
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : points) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    RegressionResult r;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    double ss_res = 0.0;
    for (const auto& [x, y] : points) {
        const double e = y - (r.intercept + r.slope * x);
        ss_res += e * e;
    }
    r.df = int(n) - 2;
    r.slope_se = std::sqrt(ss_res / r.df / sxx);
    return r;
}

std::pair<double, double> RegressionResult::slope_ci(double confidence) const {
    const double t = student_t_quantile(0.5 + confidence / 2.0, df);
    return {slope - t * slope_se, slope + t * slope_se};
}

StabilityVerdict classify_stability(const Trajectory& traj,
                                    const StabilitySettings& settings) {
    if (traj.final_time < settings.min_span)
        throw std::invalid_argument("classify_stability: trajectory shorter than min_span");

    StabilityVerdict out;
    const double half = traj.final_time / 2.0;

    // Pooled running average restarted at the half-way point, so the early
    // small-population transient does not leak into the regression.
    std::vector<std::pair<double, double>> points;
    double sum = 0.0;
    std::uint64_t count = 0;
    for (const auto& e : traj.events) {
        if (e.kind != EventKind::Departure || e.time < half) continue;
        sum += e.staying_time;
        ++count;
        points.emplace_back(e.time, sum / double(count));
    }
    const int B = settings.batches;
    if (points.size() < std::size_t(2 * B)) {
        out.verdict = StabilityVerdict::Kind::Inconclusive;
        return out;
    }

    // Equal-count batches tame the autocorrelation of the running mean.
    std::vector<std::pair<double, double>> batch_points;
    const std::size_t per = points.size() / B;
    for (int b = 0; b < B; ++b) {
        const std::size_t lo = b * per;
        const std::size_t hi = (b == B - 1) ? points.size() : lo + per;
        double tx = 0.0, ty = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            tx += points[i].first;
            ty += points[i].second;
        }
        batch_points.emplace_back(tx / double(hi - lo), ty / double(hi - lo));
    }
    const RegressionResult reg = linear_regression(batch_points);
    const auto [lo, hi] = reg.slope_ci(settings.confidence);
    out.slope = reg.slope;
    out.ci_low = lo;
    out.ci_high = hi;

    if (lo > 0.0) out.verdict = StabilityVerdict::Kind::Unstable;
    else if (lo <= 0.0 && hi >= 0.0 && traj.max_count < settings.stable_max_count)
        out.verdict = StabilityVerdict::Kind::Stable;
    else out.verdict = StabilityVerdict::Kind::Inconclusive;

    // Per-class slopes, for the per-class plots.
    std::map<std::uint32_t, std::vector<std::pair<double, double>>> per_cls;
    std::map<std::uint32_t, std::pair<double, std::uint64_t>> acc;
    for (const auto& e : traj.events) {
        if (e.kind != EventKind::Departure || e.time < half) continue;
        auto& a = acc[e.cls];
        a.first += e.staying_time;
        a.second += 1;
        per_cls[e.cls].emplace_back(e.time, a.first / double(a.second));
    }
    for (const auto& [cls, series] : per_cls) {
        ClassSlope cs;
        cs.cls = cls;
        cs.departures = series.size();
        if (series.size() >= std::size_t(2 * B)) {
            std::vector<std::pair<double, double>> bp;
            const std::size_t per_c = series.size() / B;
            for (int b = 0; b < B; ++b) {
                const std::size_t blo = b * per_c;
                const std::size_t bhi = (b == B - 1) ? series.size() : blo + per_c;
                double tx = 0.0, ty = 0.0;
                for (std::size_t i = blo; i < bhi; ++i) {
                    tx += series[i].first;
                    ty += series[i].second;
                }
                bp.emplace_back(tx / double(bhi - blo), ty / double(bhi - blo));
            }
            const RegressionResult r = linear_regression(bp);
            const auto [clo, chi] = r.slope_ci(settings.confidence);
            cs.slope = r.slope;
            cs.ci_low = clo;
            cs.ci_high = chi;
        }
        out.per_class.push_back(cs);
    }
    return out;
}

} // namespace bwp
