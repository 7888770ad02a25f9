#include <CLI11.hpp>
#include <cellwise/cellwise.h>

#include <iostream>

#include "commands.hpp"
#include "table_io.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Cellwise outlier detection and robust covariance estimation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(cw_version()));

    cli::EstimateArgs est;
    auto* e = app.add_subcommand("estimate", "Fit the detection-imputation estimator to a CSV table");
    e->add_option("input", est.input, "Input CSV (header row, NA or empty for missing)")->required();
    e->add_option("--out", est.out, "Output path prefix (default: input without extension)");
    e->add_option("--quantile", est.quantile, "Chi-squared(1) probability for the cell cutoff")->capture_default_str();
    e->add_option("--maxcol", est.max_col_frac, "Maximal fraction of flagged or missing cells per column")->capture_default_str();
    e->add_option("--max-iter", est.max_iter, "Iteration limit")->capture_default_str();
    e->add_option("--tol", est.tol, "Convergence tolerance")->capture_default_str();
    e->add_option("--initial", est.initial, "rank, diagonal or model=PATH")->capture_default_str();

    cli::DetectArgs det;
    auto* d = app.add_subcommand("detect", "Flag cells of a CSV table under a stored model");
    d->add_option("input", det.input, "Input CSV")->required();
    d->add_option("--model", det.model, "Model file written by estimate")->required();
    d->add_option("--quantile", det.quantile, "Cutoff probability (default: the model's setting, else 0.99)");
    d->add_option("--maxcol", det.max_col_frac, "Column cap fraction, 0 for none (default: the model's setting)");
    d->add_option("--out", det.out, "Report CSV (default: stdout)");

    cli::SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Monte Carlo run on contaminated Gaussian data");
    s->add_option("--model", sim.model, "a09 or randcorr")->capture_default_str();
    s->add_option("--d", sim.d, "Dimension")->capture_default_str();
    s->add_option("--n", sim.n, "Rows per replication")->capture_default_str();
    s->add_option("--eps", sim.eps, "Cellwise contamination fraction per column")->capture_default_str();
    s->add_option("--row-eps", sim.row_eps, "Fraction of replaced rows (row and mixed modes)")->capture_default_str();
    s->add_option("--gamma", sim.gamma, "Outlyingness magnitude")->capture_default_str();
    s->add_option("--mode", sim.mode, "cell, row or mixed")->capture_default_str();
    s->add_option("--reps", sim.reps, "Replications")->capture_default_str();
    s->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
    s->add_option("--quantile", sim.quantile, "Cutoff probability")->capture_default_str();
    s->add_option("--maxcol", sim.max_col_frac, "Column cap fraction")->capture_default_str();
    s->add_option("--max-iter", sim.max_iter, "Iteration limit")->capture_default_str();
    s->add_option("--tol", sim.tol, "Convergence tolerance")->capture_default_str();
    s->add_option("--initial", sim.initial, "rank or diagonal")->capture_default_str();
    s->add_option("--out", sim.out, "Output CSV (default: stdout)");
    s->add_option("--data-out", sim.data_out, "Write the first replication's data as CSV");
    s->add_option("--truth-out", sim.truth_out, "Write the first replication's contamination mask (1 = contaminated)");

    cli::CellmapArgs map;
    auto* c = app.add_subcommand("cellmap", "Grid of cell classes from a cell report");
    c->add_option("report", map.report, "Cell report CSV")->required();
    c->add_option("--data", map.data, "Data CSV that supplies the rows and columns");
    c->add_option("--rows", map.rows, "Number of data rows (without --data)");
    c->add_option("--columns", map.columns, "Column names in order (without --data)")->delimiter(',');
    c->add_option("--row-range", map.row_range, "Slice of rows FIRST:LAST, 1-based");
    c->add_option("--col-range", map.col_range, "Slice of columns FIRST:LAST, 1-based");
    c->add_option("--out", map.out, "Grid CSV (default: stdout)");
    c->add_option("--svg", map.svg, "Also write an SVG rendering");

    cli::DiscrepancyArgs dis;
    auto* q = app.add_subcommand("discrepancy", "Discrepancy of the covariance in model A relative to model B");
    q->add_option("a", dis.a, "Model file A")->required();
    q->add_option("b", dis.b, "Model file B")->required();
    q->add_option("--kind", dis.kind, "d, plus_inverse or abs_log")->capture_default_str();

    cli::PreprocessArgs pre;
    auto* p = app.add_subcommand("preprocess", "Log or centered log ratio transform of a CSV table");
    p->add_option("input", pre.input, "Input CSV")->required();
    p->add_flag("--clr", pre.clr, "Per-row centered log ratio");
    p->add_flag("--log", pre.log, "Natural log");
    p->add_option("--out", pre.out, "Output CSV (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::CallForVersion& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        app.exit(ex);
        return cli::kExitInput;
    }

    try {
        if (e->parsed()) return cli::run_estimate(est);
        if (d->parsed()) return cli::run_detect(det);
        if (s->parsed()) return cli::run_simulate(sim);
        if (c->parsed()) return cli::run_cellmap(map);
        if (q->parsed()) return cli::run_discrepancy(dis);
        if (p->parsed()) return cli::run_preprocess(pre);
    } catch (const cli::Failure& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return ex.code();
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 1;
}
