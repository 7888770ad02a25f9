#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "handles.hpp"
#include "model_file.hpp"
#include "report.hpp"
#include "table_io.hpp"

namespace cli {

namespace {

using nlohmann::json;

void emit(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") std::cout << content;
    else write_file_atomic(path, content);
}

ModelPtr make_model(const std::vector<double>& mu, const std::vector<double>& sigma, const std::string& what) {
    cw_model* m = nullptr;
    check(cw_model_create(mu.size(), mu.data(), sigma.data(), &m), what);
    return ModelPtr(m);
}

/// Positions of wanted names in available; lists absent names in the error.
std::vector<size_t> match_columns(const std::vector<std::string>& wanted, const std::vector<std::string>& available,
                                  const std::string& what) {
    std::map<std::string, size_t> index;
    for (size_t j = 0; j < available.size(); ++j) index.emplace(available[j], j);
    std::vector<size_t> out;
    std::vector<std::string> absent;
    for (const auto& name : wanted) {
        auto it = index.find(name);
        if (it == index.end()) absent.push_back(name);
        else out.push_back(it->second);
    }
    if (!absent.empty()) {
        std::string msg = what + ": columns not found:";
        for (const auto& a : absent) msg += " '" + a + "'";
        throw Failure(kExitInput, msg);
    }
    return out;
}

/// Model file restricted and reordered to the given column names.
ModelFile restrict_model(const ModelFile& m, const std::vector<std::string>& names, const std::string& source) {
    const auto pos = match_columns(names, m.columns, source);
    ModelFile out = m;
    const size_t d = pos.size(), full = m.dim();
    out.columns = names;
    out.mu.assign(d, 0.0);
    out.sigma.assign(d * d, 0.0);
    for (size_t a = 0; a < d; ++a) {
        out.mu[a] = m.mu[pos[a]];
        for (size_t b = 0; b < d; ++b) out.sigma[a * d + b] = m.sigma[pos[a] * full + pos[b]];
    }
    auto pick = [&](const std::optional<std::vector<double>>& v) -> std::optional<std::vector<double>> {
        if (!v) return std::nullopt;
        std::vector<double> r;
        for (size_t p : pos) r.push_back((*v)[p]);
        return r;
    };
    out.locations = pick(m.locations);
    out.scales = pick(m.scales);
    return out;
}

std::vector<double> model_mu(const cw_model* m) {
    std::vector<double> v(cw_model_dim(m));
    cw_model_get_mu(m, v.data());
    return v;
}

std::vector<double> model_sigma(const cw_model* m) {
    const size_t d = cw_model_dim(m);
    std::vector<double> v(d * d);
    cw_model_get_sigma(m, v.data());
    return v;
}

void check_fraction(double v, const char* name, bool allow_zero = false) {
    if (!((allow_zero ? v >= 0.0 : v > 0.0) && v < 1.0))
        throw Failure(kExitInput, std::string(name) + " must lie in " + (allow_zero ? "[0, 1)" : "(0, 1)"));
}

cw_initial initial_kind(const std::string& spec, std::string& model_path) {
    if (spec == "rank") return CW_INITIAL_RANK;
    if (spec == "diagonal") return CW_INITIAL_DIAGONAL;
    if (spec.rfind("model=", 0) == 0 && spec.size() > 6) {
        model_path = spec.substr(6);
        return CW_INITIAL_EXTERNAL;
    }
    throw Failure(kExitInput, "--initial must be rank, diagonal or model=PATH");
}

}  // namespace

int run_estimate(const EstimateArgs& args) {
    check_fraction(args.quantile, "--quantile");
    check_fraction(args.max_col_frac, "--maxcol");
    const Table raw = read_table(args.input);
    if (raw.n == 0) throw Failure(kExitShape, args.input + ": no data rows");

    std::vector<int> status(raw.d);
    check(cw_screen_columns(raw.values.data(), raw.n, raw.d, args.max_col_frac, status.data()), "screening columns");
    std::vector<size_t> usable;
    std::vector<std::string> dropped, set_aside;
    for (size_t j = 0; j < raw.d; ++j) {
        if (status[j] == CW_COLUMN_ZERO_SCALE) {
            std::cerr << "warning: dropping column '" << raw.names[j] << "': zero median absolute deviation\n";
            dropped.push_back(raw.names[j]);
            continue;
        }
        if (status[j] == CW_COLUMN_TOO_MANY_MISSING) {
            std::cerr << "warning: setting column '" << raw.names[j] << "' aside: more than "
                      << format_double(args.max_col_frac) << " of its cells are missing\n";
            set_aside.push_back(raw.names[j]);
        }
        usable.push_back(j);
    }
    const Table data = raw.select(usable);

    cw_di_config cfg;
    cw_di_config_default(&cfg);
    cfg.quantile = args.quantile;
    cfg.max_col_frac = args.max_col_frac;
    cfg.max_iter = args.max_iter;
    cfg.tol = args.tol;
    std::string initial_path;
    cfg.initial = initial_kind(args.initial, initial_path);
    ModelPtr external;
    if (cfg.initial == CW_INITIAL_EXTERNAL) {
        const auto m = restrict_model(load_model(initial_path), data.names, initial_path);
        external = make_model(m.mu, m.sigma, initial_path);
        cfg.external = external.get();
    }

    cw_fit* fit_raw = nullptr;
    check(cw_estimate(data.values.data(), data.n, data.d, &cfg, &fit_raw), "estimate");
    FitPtr fit(fit_raw);

    const size_t kept_count = cw_fit_kept_count(fit.get());
    std::vector<size_t> kept(kept_count);
    cw_fit_kept_columns(fit.get(), kept.data());
    cw_model* model_raw = nullptr;
    check(cw_fit_model(fit.get(), &model_raw), "estimate");
    ModelPtr model(model_raw);

    ModelFile mf;
    for (size_t k : kept) mf.columns.push_back(data.names[k]);
    mf.mu = model_mu(model.get());
    mf.sigma = model_sigma(model.get());
    std::vector<double> loc(kept_count), scale(kept_count);
    cw_fit_scaler(fit.get(), loc.data(), scale.data());
    mf.locations = loc;
    mf.scales = scale;
    mf.quantile = args.quantile;
    mf.max_col_frac = args.max_col_frac;

    const int iterations = cw_fit_iterations(fit.get());
    const bool converged = cw_fit_converged(fit.get()) != 0;
    std::vector<double> history(static_cast<size_t>(iterations));
    cw_fit_history(fit.get(), history.data());
    const auto report = make_report(cw_fit_cells(fit.get()), data.names);
    size_t flagged = 0, missing = 0;
    for (const auto& r : report) (r.missing ? missing : flagged) += 1;

    mf.fit = {{"iterations", iterations},
              {"converged", converged},
              {"criterion_history", history},
              {"clipped_eigenvalues", cw_fit_clipped_eigenvalues(fit.get())},
              {"flagged_cells", flagged},
              {"missing_cells", missing},
              {"rows", data.n},
              {"dropped_columns", dropped},
              {"set_aside_columns", set_aside}};
    mf.provenance = {{"command", "estimate"},
                     {"input", args.input},
                     {"config",
                      {{"quantile", args.quantile},
                       {"max_col_frac", args.max_col_frac},
                       {"max_iter", args.max_iter},
                       {"tol", args.tol},
                       {"initial", args.initial}}},
                     {"library_version", cw_version()},
                     {"timestamp", utc_timestamp()}};

    std::string log = "# cellwise estimate input=" + args.input + " quantile=" + format_double(args.quantile) +
                      " max_col_frac=" + format_double(args.max_col_frac) + " max_iter=" +
                      std::to_string(args.max_iter) + " tol=" + format_double(args.tol) + " initial=" + args.initial +
                      "\niteration,criterion\n";
    for (size_t t = 0; t < history.size(); ++t) log += std::to_string(t + 1) + "," + format_double(history[t]) + "\n";

    const std::string prefix = args.out.empty() ? std::filesystem::path(args.input).replace_extension().string() : args.out;
    write_file_atomic(prefix + ".model.json", to_json_text(mf));
    write_file_atomic(prefix + ".cells.csv", render_report(report, args.quantile, args.max_col_frac));
    write_file_atomic(prefix + ".iterations.csv", log);

    std::cout << "rows: " << data.n << "\ncolumns used: " << kept_count << " of " << raw.d << "\niterations: " << iterations
              << "\nconverged: " << (converged ? "yes" : "no") << "\nflagged cells: " << flagged
              << "\nmissing cells: " << missing << "\nmodel: " << prefix << ".model.json\nreport: " << prefix
              << ".cells.csv\n";
    if (!converged) {
        std::cerr << "error: no convergence within " << args.max_iter << " iterations (last criterion "
                  << format_double(history.empty() ? NAN : history.back()) << ")\n";
        return kExitConvergence;
    }
    return 0;
}

int run_detect(const DetectArgs& args) {
    const ModelFile mf = load_model(args.model);
    const Table raw = read_table(args.input);
    const auto pos = match_columns(mf.columns, raw.names, args.input + " vs model " + args.model);
    std::set<std::string> in_model(mf.columns.begin(), mf.columns.end());
    for (const auto& name : raw.names)
        if (!in_model.count(name)) std::cerr << "warning: ignoring column '" << name << "' (not in the model)\n";
    const Table data = raw.select(pos);

    const double quantile = args.quantile.value_or(mf.quantile.value_or(0.99));
    check_fraction(quantile, "--quantile");
    std::optional<double> cap = args.max_col_frac ? args.max_col_frac : mf.max_col_frac;
    if (cap) {
        check_fraction(*cap, "--maxcol", true);
        if (*cap == 0.0) cap.reset();
    }
    const auto model = make_model(mf.mu, mf.sigma, args.model);
    cw_detect_options opt;
    cw_detect_options_default(&opt);
    opt.quantile = quantile;
    opt.max_col_frac = cap.value_or(0.0);
    if (mf.locations && mf.scales) {
        opt.locations = mf.locations->data();
        opt.scales = mf.scales->data();
    }
    cw_cells* cells_raw = nullptr;
    check(cw_detect(model.get(), data.values.data(), data.n, data.d, &opt, &cells_raw), "detect");
    CellsPtr cells(cells_raw);
    emit(args.out, render_report(make_report(cells.get(), data.names), quantile, cap));
    return 0;
}

int run_simulate(const SimulateArgs& args) {
    cw_sim_config cfg;
    cw_sim_config_default(&cfg);
    if (args.model == "a09") cfg.model = CW_COV_A09;
    else if (args.model == "randcorr") cfg.model = CW_COV_RANDCORR;
    else throw Failure(kExitInput, "--model must be a09 or randcorr");
    if (args.mode == "cell") cfg.mode = CW_CONTAM_CELL;
    else if (args.mode == "row") cfg.mode = CW_CONTAM_ROW;
    else if (args.mode == "mixed") cfg.mode = CW_CONTAM_MIXED;
    else throw Failure(kExitInput, "--mode must be cell, row or mixed");
    if (args.d < 1 || args.n < 1 || args.reps < 1) throw Failure(kExitInput, "--d, --n and --reps must be positive");
    if (args.eps < 0 || args.row_eps < 0 || args.eps + args.row_eps > 1 || args.gamma < 0)
        throw Failure(kExitInput, "fractions must be nonnegative with --eps + --row-eps <= 1, and --gamma >= 0");
    if (cfg.mode == CW_CONTAM_ROW && args.row_eps <= 0) throw Failure(kExitInput, "--mode row needs --row-eps > 0");
    check_fraction(args.quantile, "--quantile");
    check_fraction(args.max_col_frac, "--maxcol");
    cfg.d = static_cast<size_t>(args.d);
    cfg.n = static_cast<size_t>(args.n);
    cfg.eps = args.eps;
    cfg.row_eps = args.row_eps;
    cfg.gamma = args.gamma;
    cfg.reps = args.reps;
    cfg.seed = args.seed;
    cfg.di.quantile = args.quantile;
    cfg.di.max_col_frac = args.max_col_frac;
    cfg.di.max_iter = args.max_iter;
    cfg.di.tol = args.tol;
    std::string unused;
    cfg.di.initial = initial_kind(args.initial, unused);
    if (cfg.di.initial == CW_INITIAL_EXTERNAL) throw Failure(kExitInput, "simulate supports --initial rank or diagonal");

    cw_sim* sim_raw = nullptr;
    check(cw_simulate(&cfg, &sim_raw), "simulate");
    SimPtr sim(sim_raw);

    static const char* variants[] = {"true_model", "initial", "di"};
    std::string out = "# cellwise simulate model=" + args.model + " d=" + std::to_string(args.d) +
                      " n=" + std::to_string(args.n) + " eps=" + format_double(args.eps) +
                      " row_eps=" + format_double(args.row_eps) + " gamma=" + format_double(args.gamma) +
                      " mode=" + args.mode + " reps=" + std::to_string(args.reps) + " seed=" + std::to_string(args.seed) +
                      " quantile=" + format_double(args.quantile) + " max_col_frac=" + format_double(args.max_col_frac) +
                      " max_iter=" + std::to_string(args.max_iter) + " tol=" + format_double(args.tol) +
                      " initial=" + args.initial + "\n";
    out += "rep,variant,recall,precision,f_score,discrepancy,n_true,n_flagged,n_hit,converged,iterations\n";
    for (size_t k = 0; k < cw_sim_count(sim.get()); ++k) {
        cw_sim_row r;
        cw_sim_get(sim.get(), k, &r);
        out += join_fields({std::to_string(r.rep + 1), variants[r.variant], format_double(r.recall),
                            format_double(r.precision), format_double(r.f_score), format_double(r.discrepancy),
                            std::to_string(r.n_true), std::to_string(r.n_flagged), std::to_string(r.n_hit),
                            std::to_string(r.converged), std::to_string(r.iterations)});
    }
    const double reps = args.reps;
    for (size_t k = 0; k < cw_sim_summary_count(sim.get()); ++k) {
        cw_sim_row r;
        cw_sim_summary(sim.get(), k, &r);
        out += join_fields({"mean", variants[r.variant], format_double(r.recall), format_double(r.precision),
                            format_double(r.f_score), format_double(r.discrepancy),
                            format_double(static_cast<double>(r.n_true) / reps),
                            format_double(static_cast<double>(r.n_flagged) / reps),
                            format_double(static_cast<double>(r.n_hit) / reps), std::to_string(r.converged),
                            format_double(r.iterations / reps)});
    }
    emit(args.out, out);

    if (!args.data_out.empty() || !args.truth_out.empty()) {
        Table t;
        t.n = cfg.n;
        t.d = cfg.d;
        for (size_t j = 0; j < t.d; ++j) t.names.push_back("V" + std::to_string(j + 1));
        t.values.resize(t.n * t.d);
        std::vector<int> truth(t.n * t.d);
        check(cw_simulate_data(&cfg, 0, t.values.data(), truth.data(), nullptr), "simulate");
        const std::string header = out.substr(0, out.find('\n') + 1);
        if (!args.data_out.empty()) {
            std::string text = header;
            write_table(text, t);
            write_file_atomic(args.data_out, text);
        }
        if (!args.truth_out.empty()) {
            for (size_t k = 0; k < truth.size(); ++k) t.values[k] = truth[k];
            std::string text = header;
            write_table(text, t);
            write_file_atomic(args.truth_out, text);
        }
    }
    return 0;
}

namespace {

struct Range {
    size_t lo;  // 0-based inclusive
    size_t hi;  // 0-based exclusive
};

Range parse_range(const std::string& spec, size_t extent, const char* what) {
    if (spec.empty()) return {0, extent};
    const auto colon = spec.find(':');
    double a = 0, b = 0;
    if (colon == std::string::npos || !parse_double(spec.substr(0, colon), a) || !parse_double(spec.substr(colon + 1), b) ||
        a < 1 || b < a || a != std::floor(a) || b != std::floor(b))
        throw Failure(kExitInput, std::string(what) + " must look like FIRST:LAST (1-based, inclusive)");
    if (b > static_cast<double>(extent))
        throw Failure(kExitInput, std::string(what) + " exceeds the table extent " + std::to_string(extent));
    return {static_cast<size_t>(a) - 1, static_cast<size_t>(b)};
}

std::string svg_color(const std::string& cls) {
    if (cls == "high") return "#d7191c";
    if (cls == "low") return "#2b83ba";
    if (cls == "missing") return "#ffffff";
    return "#ffffb2";
}

}  // namespace

int run_cellmap(const CellmapArgs& args) {
    const auto csv = read_csv(args.report);
    const auto report = parse_report(csv, args.report);
    size_t n = 0;
    std::vector<std::string> columns;
    if (!args.data.empty()) {
        const auto data = read_csv(args.data);
        n = data.rows.size();
        columns = data.header;
    } else {
        if (args.rows < 1 || args.columns.empty())
            throw Failure(kExitInput, "cellmap needs --data, or both --rows and --columns");
        n = static_cast<size_t>(args.rows);
        columns = args.columns;
    }
    std::map<std::string, size_t> col_index;
    for (size_t j = 0; j < columns.size(); ++j) col_index.emplace(columns[j], j);

    struct Cell {
        std::string cls = "regular";
        double residual = 0.0;
    };
    std::vector<Cell> grid(n * columns.size());
    for (const auto& r : report) {
        auto it = col_index.find(r.column);
        if (it == col_index.end()) throw Failure(kExitInput, args.report + ": unknown column '" + r.column + "'");
        if (r.row > n)
            throw Failure(kExitInput, args.report + ": row " + std::to_string(r.row) + " is outside 1.." + std::to_string(n));
        auto& c = grid[(r.row - 1) * columns.size() + it->second];
        c.residual = r.missing ? 0.0 : r.residual;
        c.cls = r.missing ? "missing" : (r.residual > 0 ? "high" : (r.residual < 0 ? "low" : "regular"));
    }
    const Range rows = parse_range(args.row_range, n, "--row-range");
    const Range cols = parse_range(args.col_range, columns.size(), "--col-range");

    std::string out = "# cellwise cellmap report=" + args.report + " rows=" + std::to_string(rows.lo + 1) + ":" +
                      std::to_string(rows.hi) + " cols=" + std::to_string(cols.lo + 1) + ":" + std::to_string(cols.hi) + "\n";
    out += "row,column,class,residual\n";
    for (size_t i = rows.lo; i < rows.hi; ++i)
        for (size_t j = cols.lo; j < cols.hi; ++j) {
            const auto& c = grid[i * columns.size() + j];
            out += join_fields({std::to_string(i + 1), quote_field(columns[j]), c.cls, format_double(c.residual)});
        }
    emit(args.out, out);

    if (!args.svg.empty()) {
        const int cell = 18, left = 60, top = 90;
        const size_t w = cols.hi - cols.lo, h = rows.hi - rows.lo;
        std::ostringstream svg;
        svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + cell * w + 10 << "\" height=\""
            << top + cell * h + 10 << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
        for (size_t j = 0; j < w; ++j) {
            std::string label = columns[cols.lo + j];
            for (auto* p : {"&", "<", ">"}) {
                size_t at = 0;
                const std::string rep = *p == '&' ? "&amp;" : (*p == '<' ? "&lt;" : "&gt;");
                while ((at = label.find(p, at)) != std::string::npos) {
                    label.replace(at, 1, rep);
                    at += rep.size();
                }
            }
            const int x = left + static_cast<int>(j) * cell + cell / 2;
            svg << "<text x=\"" << x << "\" y=\"" << top - 4 << "\" transform=\"rotate(-60 " << x << " " << top - 4
                << ")\">" << label << "</text>\n";
        }
        for (size_t i = 0; i < h; ++i) {
            svg << "<text x=\"" << left - 4 << "\" y=\"" << top + static_cast<int>(i) * cell + cell - 5
                << "\" text-anchor=\"end\">" << rows.lo + i + 1 << "</text>\n";
            for (size_t j = 0; j < w; ++j) {
                const auto& c = grid[(rows.lo + i) * columns.size() + cols.lo + j];
                const double opacity = c.cls == "high" || c.cls == "low" ? std::min(1.0, 0.35 + std::abs(c.residual) / 10.0) : 1.0;
                svg << "<rect x=\"" << left + static_cast<int>(j) * cell << "\" y=\"" << top + static_cast<int>(i) * cell
                    << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"" << svg_color(c.cls)
                    << "\" fill-opacity=\"" << format_double(std::round(opacity * 100) / 100)
                    << "\" stroke=\"#999999\" stroke-width=\"0.5\"/>\n";
            }
        }
        svg << "</svg>\n";
        write_file_atomic(args.svg, svg.str());
    }
    return 0;
}

int run_discrepancy(const DiscrepancyArgs& args) {
    cw_divergence kind;
    if (args.kind == "d") kind = CW_DIVERGENCE_D;
    else if (args.kind == "plus_inverse") kind = CW_DIVERGENCE_PLUS_INVERSE;
    else if (args.kind == "abs_log") kind = CW_DIVERGENCE_ABS_LOG;
    else throw Failure(kExitInput, "--kind must be d, plus_inverse or abs_log");
    const auto a = load_model(args.a);
    const auto b = load_model(args.b);
    if (a.dim() != b.dim())
        throw Failure(kExitInput, "dimension mismatch: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
    if (a.columns != b.columns) std::cerr << "warning: column names differ between the two models\n";
    double v = 0.0;
    check(cw_discrepancy(a.dim(), a.sigma.data(), b.sigma.data(), kind, &v), "discrepancy");
    std::cout << format_double(v) << "\n";
    return 0;
}

int run_preprocess(const PreprocessArgs& args) {
    if (args.clr == args.log) throw Failure(kExitInput, "choose exactly one of --clr and --log");
    Table t = read_table(args.input);
    std::vector<std::string> bad;
    for (size_t i = 0; i < t.n; ++i)
        for (size_t j = 0; j < t.d; ++j)
            if (t.at(i, j) <= 0.0 && bad.size() < 20)
                bad.push_back("row " + std::to_string(i + 1) + ", column '" + t.names[j] + "' (" + format_double(t.at(i, j)) + ")");
    if (!bad.empty()) {
        std::string msg = args.input + ": nonpositive cells cannot be log-transformed:";
        for (const auto& b : bad) msg += "\n  " + b;
        throw Failure(kExitInput, msg);
    }
    std::vector<double> out(t.values.size());
    if (!t.values.empty()) {
        if (args.clr) check(cw_clr_transform(t.values.data(), t.n, t.d, out.data()), args.input);
        else check(cw_log_transform(t.values.data(), t.n, t.d, out.data()), args.input);
    }
    t.values = std::move(out);
    std::string text = "# cellwise preprocess transform=" + std::string(args.clr ? "clr" : "log") + " input=" + args.input + "\n";
    write_table(text, t);
    emit(args.out, text);
    return 0;
}

}  // namespace cli
