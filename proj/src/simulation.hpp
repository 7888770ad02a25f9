#pragma once

// Seeded Monte Carlo harness: generate contaminated Gaussian data, run the
// estimators, and score flags and covariance discrepancies per replication.

#include <cstdint>
#include <vector>

#include "estimator.hpp"
#include "evalkit.hpp"

namespace cellwise::simulation {

enum class CovKind { A09, RandCorr };
enum class Variant { TrueModel, Initial, Di };

const char* to_string(Variant v);
const char* to_string(CovKind k);

struct SimConfig {
    CovKind model = CovKind::A09;
    Index d = 10;
    Index n = 100;
    evalkit::ContaminationSpec contamination;  // seed and replication are filled per run
    int reps = 10;
    std::uint64_t seed = 1;
    double randcorr_eta = 1.0;
    estimator::DiConfig di;
};

struct Replication {
    SymMatrix sigma;
    evalkit::Contaminated sample;
};

/// Data of replication rep; identical for identical (config, rep).
Replication generate(const SimConfig& config, int rep);

struct SimRecord {
    int rep = 0;
    Variant variant = Variant::Di;
    evalkit::ScoreReport score;
    double discrepancy = 0.0;  // D(estimate, truth)
    bool converged = true;
    int iterations = 0;
};

struct SimSummary {
    Variant variant = Variant::Di;
    double recall = 0.0;  // NaN when undefined in every replication
    double precision = 0.0;
    double f_score = 0.0;
    double discrepancy = 0.0;
    int reps = 0;
};

evalkit::CellMask flag_mask(const std::vector<estimator::FlaggedCell>& cells, Index n, Index d);

std::vector<SimRecord> run(const SimConfig& config);
std::vector<SimSummary> summarize(const std::vector<SimRecord>& records);

}  // namespace cellwise::simulation
