#include "simulation.hpp"

#include <cmath>
#include <limits>

namespace cellwise::simulation {

const char* to_string(Variant v) {
    switch (v) {
        case Variant::TrueModel: return "true_model";
        case Variant::Initial: return "initial";
        case Variant::Di: return "di";
    }
    return "?";
}

const char* to_string(CovKind k) { return k == CovKind::A09 ? "a09" : "randcorr"; }

Replication generate(const SimConfig& config, int rep) {
    if (config.d < 1 || config.n < 1) fail(ErrorKind::Input, "simulation sizes must be positive");
    const auto r = static_cast<std::uint64_t>(rep);
    SymMatrix sigma;
    if (config.model == CovKind::A09) {
        sigma = evalkit::gen_a09(config.d);
    } else {
        Rng mrng = Rng::substream(config.seed, r, Stream::Matrix);
        sigma = evalkit::gen_randcorr(config.d, mrng, config.randcorr_eta);
    }
    Rng drng = Rng::substream(config.seed, r, Stream::Data);
    DataTable clean(evalkit::gen_gaussian(config.n, sigma, drng));
    auto spec = config.contamination;
    spec.seed = config.seed;
    spec.replication = r;
    return {sigma, evalkit::contaminate(clean, sigma, spec)};
}

evalkit::CellMask flag_mask(const std::vector<estimator::FlaggedCell>& cells, Index n, Index d) {
    evalkit::CellMask m = evalkit::CellMask::Constant(n, d, false);
    for (const auto& c : cells)
        if (!c.missing) m(c.row, c.col) = true;
    return m;
}

std::vector<SimRecord> run(const SimConfig& config) {
    if (config.reps < 1) fail(ErrorKind::Input, "reps must be positive");
    estimator::validate(config.di);
    std::vector<SimRecord> out;
    const Index n = config.n;
    const Index d = config.d;
    for (int rep = 0; rep < config.reps; ++rep) {
        const auto data = generate(config, rep);
        const auto& x = data.sample.data;
        const auto& truth = data.sample.truth;

        const auto true_model = CovModel::make(Vector::Zero(d), data.sigma);
        estimator::DetectOptions oracle{config.di.quantile, std::nullopt, std::nullopt};
        SimRecord t{rep, Variant::TrueModel,
                    evalkit::score_flags(flag_mask(estimator::detect_cells(x, true_model, oracle), n, d), truth), 0.0,
                    true, 0};
        out.push_back(t);

        const auto fit = estimator::di_estimate(x, config.di);
        if (static_cast<Index>(fit.kept.size()) != d)
            fail(ErrorKind::Shape, "simulation data lost columns during screening");
        estimator::DetectOptions init_opts{config.di.quantile, config.di.max_col_frac, fit.scaler};
        const auto init_cells = estimator::detect_cells(x, fit.initial, init_opts);
        out.push_back({rep, Variant::Initial, evalkit::score_flags(flag_mask(init_cells, n, d), truth),
                       evalkit::discrepancy(fit.initial.sigma, data.sigma), true, 0});
        out.push_back({rep, Variant::Di, evalkit::score_flags(flag_mask(fit.cells, n, d), truth),
                       evalkit::discrepancy(fit.model.sigma, data.sigma), fit.converged, fit.iterations});
    }
    return out;
}

std::vector<SimSummary> summarize(const std::vector<SimRecord>& records) {
    std::vector<SimSummary> out;
    for (Variant v : {Variant::TrueModel, Variant::Initial, Variant::Di}) {
        SimSummary s;
        s.variant = v;
        int nr = 0, np = 0;
        double recall = 0, precision = 0, f = 0, disc = 0;
        for (const auto& r : records) {
            if (r.variant != v) continue;
            ++s.reps;
            if (r.score.recall_defined) {
                recall += r.score.recall;
                ++nr;
            }
            if (r.score.precision_defined) {
                precision += r.score.precision;
                ++np;
            }
            f += r.score.f_score;
            disc += r.discrepancy;
        }
        if (s.reps == 0) continue;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        s.recall = nr ? recall / nr : nan;
        s.precision = np ? precision / np : nan;
        s.f_score = nr ? f / s.reps : nan;
        s.discrepancy = disc / s.reps;
        out.push_back(s);
    }
    return out;
}

}  // namespace cellwise::simulation
