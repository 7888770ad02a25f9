#include "cellhandler.hpp"

#include <cmath>
#include <limits>

namespace cellwise::cellhandler {

Vector criterion_values(const larpath::LarPath& path) {
    const Index d = path.dim();
    Vector c(d);
    double running = 0.0;
    for (Index k = d; k >= 1; --k) {
        if (k <= path.forced_count) {
            c(k - 1) = std::numeric_limits<double>::infinity();
            continue;
        }
        running = std::max(running, path.steps[k].delta);
        c(k - 1) = running;
    }
    return c;
}

Vector RowTrace::imputed(Index m) const {
    Vector out = z;
    const Vector& theta = path.steps[m].theta;
    for (Index a = 0; a < m; ++a) {
        const Index j = path.order[a];
        const double base = missing[j] ? mu(j) : z(j);
        out(j) = base - theta(a) * sd(j);
    }
    return out;
}

RowTrace trace_row(const Vector& z, const CovModel& model) {
    const Index d = model.dim();
    if (z.size() != d) fail(ErrorKind::Input, "row length does not match the model dimension");
    RowTrace t;
    t.z = z;
    t.mu = model.mu;
    t.sd = model.sd;
    t.missing.assign(static_cast<size_t>(d), false);

    Vector zs(d);
    std::vector<Index> forced;
    for (Index j = 0; j < d; ++j) {
        if (std::isnan(z(j))) {
            t.missing[j] = true;
            forced.push_back(j);
            zs(j) = 0.0;
        } else if (!std::isfinite(z(j))) {
            fail(ErrorKind::Input, "row has infinite entries");
        } else {
            zs(j) = (z(j) - model.mu(j)) / model.sd(j);
        }
    }
    const Vector zero = Vector::Zero(d);
    const Vector w = larpath::huber_weights(zs, zero, Vector::Ones(d));
    const auto pair = larpath::build_design(zs, zero, model.corr_inv_root, w);
    t.path = larpath::lar_trace(pair, forced);

    const Vector by_position = criterion_values(t.path);
    t.criteria.resize(d);
    for (Index k = 0; k < d; ++k) t.criteria(t.path.order[k]) = by_position(k);
    return t;
}

Index flagged_prefix_length(const RowTrace& trace, double q) {
    Index m = 0;
    while (m < trace.dim() && trace.criteria(trace.path.order[m]) > q) ++m;
    return m;
}

RowDetection detect_prefix(const RowTrace& trace, Index m) {
    const Index d = trace.dim();
    RowDetection out;
    out.criteria = trace.criteria;
    out.path_order = trace.path.order;
    out.missing = trace.missing;
    out.flagged.assign(trace.path.order.begin(), trace.path.order.begin() + m);
    out.imputed = trace.imputed(m);
    out.residuals = Vector::Zero(d);
    for (Index j : out.flagged) {
        if (trace.missing[j]) continue;
        const double diff = trace.z(j) - out.imputed(j);
        const double sign = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
        out.residuals(j) = sign * std::sqrt(trace.criteria(j));
    }
    return out;
}

RowDetection handle_row(const Vector& z, const CovModel& model, double q) {
    if (!(q > 0.0)) fail(ErrorKind::Input, "cutoff must be positive");
    const auto trace = trace_row(z, model);
    return detect_prefix(trace, flagged_prefix_length(trace, q));
}

const char* to_string(DomainLabel label) {
    switch (label) {
        case DomainLabel::None: return "none";
        case DomainLabel::First: return "first";
        case DomainLabel::Second: return "second";
        case DomainLabel::Both: return "both";
    }
    return "?";
}

std::vector<DomainPoint> flag_domain_scan(const CovModel& model, const GridSpec& grid, double q) {
    if (model.dim() != 2) fail(ErrorKind::Input, "domain scan requires a bivariate model");
    if (grid.steps1 < 1 || grid.steps2 < 1) fail(ErrorKind::Input, "domain scan grid needs at least one point");
    auto coord = [](double lo, double hi, int steps, int i) {
        return steps == 1 ? lo : lo + (hi - lo) * i / (steps - 1);
    };
    std::vector<DomainPoint> out;
    out.reserve(static_cast<size_t>(grid.steps1) * grid.steps2);
    for (int a = 0; a < grid.steps1; ++a) {
        for (int b = 0; b < grid.steps2; ++b) {
            Vector z(2);
            z << coord(grid.lo1, grid.hi1, grid.steps1, a), coord(grid.lo2, grid.hi2, grid.steps2, b);
            const auto det = handle_row(z, model, q);
            bool first = false, second = false;
            for (Index j : det.flagged) (j == 0 ? first : second) = true;
            DomainLabel label = first ? (second ? DomainLabel::Both : DomainLabel::First)
                                      : (second ? DomainLabel::Second : DomainLabel::None);
            out.push_back({z(0), z(1), label});
        }
    }
    return out;
}

}  // namespace cellwise::cellhandler
