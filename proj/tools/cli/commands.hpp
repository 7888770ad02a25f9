#pragma once

#include <optional>
#include <string>
#include <vector>

namespace cli {

struct EstimateArgs {
    std::string input;
    std::string out;  // path prefix
    double quantile = 0.99;
    double max_col_frac = 0.25;
    int max_iter = 25;
    double tol = 1e-6;
    std::string initial = "rank";
};

struct DetectArgs {
    std::string input;
    std::string model;
    std::string out;  // empty: stdout
    std::optional<double> quantile;
    std::optional<double> max_col_frac;  // 0 disables the cap
};

struct SimulateArgs {
    std::string model = "a09";
    int d = 10;
    int n = 100;
    double eps = 0.2;
    double row_eps = 0.0;
    double gamma = 5.0;
    std::string mode = "cell";
    int reps = 10;
    unsigned long long seed = 1;
    double quantile = 0.99;
    double max_col_frac = 0.25;
    int max_iter = 25;
    double tol = 1e-6;
    std::string initial = "rank";
    std::string out;
    std::string data_out;   // first replication's data
    std::string truth_out;  // and its contamination mask
};

struct CellmapArgs {
    std::string report;
    std::string data;
    int rows = 0;
    std::vector<std::string> columns;
    std::string row_range;
    std::string col_range;
    std::string out;
    std::string svg;
};

struct DiscrepancyArgs {
    std::string a;
    std::string b;
    std::string kind = "d";
};

struct PreprocessArgs {
    std::string input;
    bool clr = false;
    bool log = false;
    std::string out;
};

int run_estimate(const EstimateArgs& args);
int run_detect(const DetectArgs& args);
int run_simulate(const SimulateArgs& args);
int run_cellmap(const CellmapArgs& args);
int run_discrepancy(const DiscrepancyArgs& args);
int run_preprocess(const PreprocessArgs& args);

}  // namespace cli
