#include "scbl/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <memory>
#include <ostream>
#include <sstream>

#include "scbl/acceptance.hpp"
#include "scbl/cache.hpp"
#include "scbl/config.hpp"
#include "scbl/expansion.hpp"
#include "scbl/io.hpp"
#include "scbl/model.hpp"
#include "scbl/operator.hpp"
#include "scbl/spectral.hpp"

namespace scbl {

namespace {

using nlohmann::json;

struct Run {
    Config cfg;
    std::filesystem::path out;
    int workers = 1;
    std::unique_ptr<ResultCache> cache = std::make_unique<ResultCache>();
    std::ostream* log = nullptr;

    LabOptions lab() {
        auto o = cfg.lab_options(workers);
        if (cache->enabled()) o.cache = {cache.get(), cfg.canonical({"geometry", "field", "potential", "phi", "engine"})};
        return o;
    }
    void write(const std::string& name, const std::string& text) {
        write_text_file(out / name, text);
        *log << "wrote " << (out / name).string() << "\n";
    }
};

std::string grid_text(const std::vector<int>& g) {
    std::string s;
    for (std::size_t i = 0; i < g.size(); ++i) s += (i ? "x" : "") + std::to_string(g[i]);
    return s;
}

std::string num(double x) { return format_number(x); }

int cmd_assemble(Run& run) {
    const auto problem = run.cfg.problem();
    const int p = run.cfg.op.p;
    const auto grid = run.cfg.op.grid.empty() ? lab_grid(problem, p, run.lab()) : run.cfg.op.grid;
    const auto op = assemble_hp(problem.geom, problem.field, problem.potential, p, grid);
    std::ostringstream triplets;
    write_triplets(op, triplets);
    run.write("operator.txt", triplets.str());
    const auto [lo, hi] = op.gershgorin();
    run.write("operator.json", dump_json({{"p", p},
                                           {"grid", grid},
                                           {"rank", op.rank},
                                           {"size", op.size()},
                                           {"nonzeros", op.matrix.nonZeros()},
                                           {"hermitian_defect", op.max_hermitian_defect()},
                                           {"gershgorin", {lo, hi}}}));
    return exit_ok;
}

int cmd_spectrum(Run& run) {
    const auto problem = run.cfg.problem();
    const int p = run.cfg.op.p;
    const auto grid = run.cfg.op.grid.empty() ? lab_grid(problem, p, run.lab()) : run.cfg.op.grid;
    const auto op = assemble_hp(problem.geom, problem.field, problem.potential, p, grid);
    const auto spec = dense_spectrum(op, run.cfg.op.vectors, run.cfg.engine_options(run.workers));
    std::vector<std::string> cols{"index", "value"};
    if (spec.has_vectors()) cols.push_back("residual");
    CsvTable table(cols);
    for (Eigen::Index k = 0; k < spec.values.size(); ++k) {
        std::vector<std::string> row{std::to_string(k), num(spec.values(k))};
        if (spec.has_vectors()) row.push_back(num(spec.residuals(k)));
        table.add_row(row);
    }
    run.write("spectrum.csv", table.str());
    run.write("spectrum.json", dump_json({{"p", p},
                                           {"grid", grid},
                                           {"size", op.size()},
                                           {"reduced_axes", spec.reduced_axes},
                                           {"largest_block", spec.largest_block},
                                           {"lowest", spec.values.size() ? spec.values(0) : 0.0},
                                           {"trace_phi", trace_of(spec.values, problem.phi)}}));
    return exit_ok;
}

json sweep_rows_json(const std::vector<SweepRow>& rows) {
    json out = json::array();
    for (const auto& r : rows)
        out.push_back({{"p", r.p},
                       {"value", r.value},
                       {"stderr", r.stderr_},
                       {"grid", r.grid},
                       {"check_value", r.check_value},
                       {"check_grid", r.check_grid},
                       {"grid_gap", r.grid_gap()}});
    return out;
}

void write_sweep(Run& run, const std::vector<SweepRow>& rows) {
    CsvTable table({"p", "T", "stderr", "grid", "check_T", "check_grid"});
    for (const auto& r : rows)
        table.add_row({std::to_string(r.p), num(r.value), num(r.stderr_), grid_text(r.grid), num(r.check_value),
                       grid_text(r.check_grid)});
    run.write("sweep.csv", table.str());
}

int cmd_trace_sweep(Run& run) {
    const auto problem = run.cfg.problem();
    const auto rows = trace_sweep(problem, run.cfg.sweep.p_list, run.lab());
    write_sweep(run, rows);
    run.write("traces.json", dump_json({{"method", method_name(run.cfg.engine.method)}, {"rows", sweep_rows_json(rows)}}));
    return exit_ok;
}

int cmd_fit_expansion(Run& run) {
    const auto problem = run.cfg.problem();
    const auto& ps = run.cfg.sweep.p_list;
    const int order = run.cfg.sweep.order;
    if (static_cast<int>(ps.size()) < order + 2)
        throw ConfigError("expansion_lab", "fit_half_power_expansion", "sweep.p_list needs at least j + 2 entries");
    const auto rows = trace_sweep(problem, ps, run.lab());
    std::vector<double> values;
    for (const auto& r : rows) values.push_back(r.value);
    const auto fit = fit_half_power_expansion(ps, values, order);
    const auto li = leading_integral(problem.geom, problem.field, problem.potential, problem.phi, run.cfg.sweep.leading_mesh);
    const double c0 = fit.coefficients(0);
    const double cap = run.cfg.sweep.residual_cap * std::abs(c0);
    write_sweep(run, rows);
    run.write("fit.json",
              dump_json({{"order", order},
                         {"p", ps},
                         {"observed", values},
                         {"coefficients", std::vector<double>(fit.coefficients.data(),
                                                              fit.coefficients.data() + fit.coefficients.size())},
                         {"standard_errors", std::vector<double>(fit.standard_errors.data(),
                                                                 fit.standard_errors.data() + fit.standard_errors.size())},
                         {"residual", fit.residual},
                         {"residual_cap", cap},
                         {"residual_ok", fit.residual <= cap},
                         {"condition", fit.condition},
                         {"leading_integral", li.value},
                         {"c0_rel_error", li.value != 0.0 ? std::abs(c0 - li.value) / std::abs(li.value) : std::abs(c0)}}));

    PlotSpec plot{"T(p) against p^(-1/2)", "p^(-1/2)", "T(p)", false, false, {}};
    PlotSeries data{"T(p)", {}, {}, true};
    for (const auto& r : rows) data.x.push_back(1.0 / std::sqrt(r.p)), data.y.push_back(r.value);
    PlotSeries line{"fit", {}, {}, false};
    const double x_hi = 1.0 / std::sqrt(ps.front());
    for (int k = 0; k <= 64; ++k) {
        const double x = x_hi * k / 64.0;
        double y = 0.0;
        for (int r = 0; r <= order; ++r) y += fit.coefficients(r) * std::pow(x, r);
        line.x.push_back(x), line.y.push_back(y);
    }
    PlotSeries lead{"leading integral", {0.0, x_hi}, {li.value, li.value}, false};
    plot.series = {data, line, lead};
    run.write("fit.svg", render_svg(plot));
    return exit_ok;
}

int cmd_model_f0(Run& run) {
    const auto problem = run.cfg.problem();
    const auto& geom = problem.geom;
    const int d = geom.dim, mesh = run.cfg.model.f0_mesh;

    std::vector<std::string> cols;
    for (int i = 0; i < d; ++i) cols.push_back("x" + std::to_string(i + 1));
    cols.insert(cols.end(), {"tr_f0", "frequencies"});
    CsvTable table(cols);
    std::vector<int> idx(d, 0);
    long long total = 1;
    for (int i = 0; i < d; ++i) total *= mesh;
    for (long long flat = 0; flat < total; ++flat) {
        long long rest = flat;
        std::vector<double> x(d);
        for (int i = d - 1; i >= 0; --i) {
            x[i] = geom.lengths[i] * static_cast<double>(rest % mesh) / mesh;
            rest /= mesh;
        }
        const auto data = model_point(problem.field, problem.potential, x);
        const double tr = f0_point(data, problem.phi).trace().real();
        std::vector<std::string> row;
        for (double v : x) row.push_back(num(v));
        row.push_back(num(tr));
        std::string freq;
        for (Eigen::Index j = 0; j < data.frequencies.size(); ++j) freq += (j ? " " : "") + num(data.frequencies(j));
        row.push_back(freq);
        table.add_row(row);
    }
    run.write("f0.csv", table.str());

    const auto& x0 = run.cfg.model.x0;
    const auto data = model_point(problem.field, problem.potential, x0);
    const ComplexMatrix f0 = f0_point(data, problem.phi);
    const ComplexMatrix numeric = model_kernel_numeric(data, problem.phi, RealVector::Zero(d), RealVector::Zero(d),
                                                       run.cfg.model_kernel_options(run.workers));
    const auto li = leading_integral(geom, problem.field, problem.potential, problem.phi, run.cfg.sweep.leading_mesh);
    const double scale = std::max(f0.cwiseAbs().maxCoeff(), 1e-300);
    run.write("f0.json", dump_json({{"x0", x0},
                                     {"frequencies", std::vector<double>(data.frequencies.data(),
                                                                         data.frequencies.data() + data.frequencies.size())},
                                     {"tr_f0", f0.trace().real()},
                                     {"model_kernel_origin", numeric.trace().real()},
                                     {"rel_error", (numeric - f0).cwiseAbs().maxCoeff() / scale},
                                     {"leading_integral", li.value},
                                     {"mesh", mesh}}));
    return exit_ok;
}

int cmd_kernel_compare(Run& run) {
    const auto problem = run.cfg.problem();
    const auto& kc = run.cfg.kernel;
    if (kc.pairs.empty()) throw ConfigError("cli", "kernel-compare", "kernel.pairs is empty");
    const int d = problem.geom.dim;
    std::vector<std::string> cols{"p"};
    for (int i = 0; i < d; ++i) cols.push_back("z" + std::to_string(i + 1));
    for (int i = 0; i < d; ++i) cols.push_back("zp" + std::to_string(i + 1));
    cols.insert(cols.end(), {"lhs_re", "lhs_im", "rhs_re", "rhs_im", "err", "abs_err", "s", "grid_gap"});
    CsvTable table(cols);
    json per_p = json::array();
    std::vector<std::vector<double>> errs(kc.pairs.size());
    std::vector<double> ps;
    for (int p : kc.p_list) {
        const auto cmp = rescaled_kernel_compare(problem, p, kc.x0, kc.pairs, kc.envelope, run.lab(),
                                                 run.cfg.model_kernel_options(run.workers));
        ps.push_back(p);
        for (std::size_t k = 0; k < cmp.pairs.size(); ++k) {
            const auto& pr = cmp.pairs[k];
            std::vector<std::string> row{std::to_string(p)};
            for (int i = 0; i < d; ++i) row.push_back(num(pr.z(i)));
            for (int i = 0; i < d; ++i) row.push_back(num(pr.z_prime(i)));
            row.insert(row.end(), {num(pr.lhs(0, 0).real()), num(pr.lhs(0, 0).imag()), num(pr.rhs(0, 0).real()),
                                   num(pr.rhs(0, 0).imag()), num(pr.error), num(pr.abs_error), num(pr.statistic),
                                   num(pr.grid_gap)});
            table.add_row(row);
            errs[k].push_back(pr.error);
        }
        per_p.push_back({{"p", p}, {"max_statistic", cmp.max_statistic}, {"swap_defect", cmp.swap_defect}});
    }
    json slopes = json::array();
    for (const auto& e : errs) {
        bool positive = ps.size() >= 2;
        for (double v : e) positive = positive && v > 0.0;
        slopes.push_back(positive ? json(loglog_slope(ps, e)) : json(nullptr));
    }
    run.write("kernel_compare.csv", table.str());
    run.write("kernel_compare.json",
              dump_json({{"x0", kc.x0}, {"envelope", kc.envelope}, {"per_p", per_p}, {"error_slopes", slopes}}));
    return exit_ok;
}

int cmd_decay_check(Run& run) {
    const auto problem = run.cfg.problem();
    const auto& dc = run.cfg.decay;
    const auto rep = offdiag_decay_check(problem, dc.p_list, dc.x, dc.x_prime, dc.epsilon, run.lab(), dc.threshold);
    CsvTable table({"p", "abs_kernel", "check_abs_kernel", "slope"});
    for (std::size_t k = 0; k < rep.p.size(); ++k)
        table.add_row({std::to_string(rep.p[k]), num(rep.abs_kernel[k]),
                       k < rep.check_abs_kernel.size() ? num(rep.check_abs_kernel[k]) : "", num(rep.slope)});
    run.write("decay.csv", table.str());
    run.write("decay.json", dump_json({{"p", rep.p},
                                        {"abs_kernel", rep.abs_kernel},
                                        {"check_abs_kernel", rep.check_abs_kernel},
                                        {"distance", rep.distance},
                                        {"slope", rep.slope},
                                        {"check_slope", rep.check_slope},
                                        {"threshold", rep.threshold},
                                        {"rapid", rep.rapid}}));
    PlotSpec plot{"|K(x, x')| against p", "p", "|K(x, x')|", true, true, {}};
    PlotSeries s{"rule grid", {}, rep.abs_kernel, true};
    for (int p : rep.p) s.x.push_back(p);
    plot.series.push_back(s);
    if (!rep.check_abs_kernel.empty()) plot.series.push_back({"refined grid", s.x, rep.check_abs_kernel, true});
    run.write("decay.svg", render_svg(plot));
    return exit_ok;
}

int cmd_verify_all(Run& run) {
    AcceptanceContext ctx;
    ctx.config_dir = run.cfg.origin.empty() ? std::filesystem::path(".") : run.cfg.origin;
    ctx.workers = run.workers;
    ctx.cache = run.cache->enabled() ? run.cache.get() : nullptr;
    ctx.seed = run.cfg.engine.seed;
    const auto results = run_acceptance(run.cfg.criteria, ctx, [&](const CriterionResult& r) {
        *run.log << "criterion " << r.id << " " << (r.passed ? "PASS" : "FAIL") << "  " << r.title << std::endl;
    });
    run.write("report.json", dump_json(acceptance_report(results)));
    return all_passed(results) ? exit_ok : exit_acceptance;
}

using Handler = int (*)(Run&);

Handler handler_for(const std::string& name) {
    if (name == "assemble") return cmd_assemble;
    if (name == "spectrum") return cmd_spectrum;
    if (name == "trace-sweep") return cmd_trace_sweep;
    if (name == "fit-expansion") return cmd_fit_expansion;
    if (name == "model-f0") return cmd_model_f0;
    if (name == "kernel-compare") return cmd_kernel_compare;
    if (name == "decay-check") return cmd_decay_check;
    if (name == "verify-all") return cmd_verify_all;
    return nullptr;
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"assemble",       "spectrum",    "trace-sweep", "fit-expansion",
                                                "model-f0",       "kernel-compare", "decay-check", "verify-all"};
    return names;
}

int run_command(const std::string& name, const CommandOptions& options, std::ostream& log, std::ostream& err) {
    const Handler handler = handler_for(name);
    if (!handler) {
        err << "unknown command " << name << "; expected one of:";
        for (const auto& n : command_names()) err << " " << n;
        err << "\n";
        return exit_config;
    }
    try {
        Run run;
        run.cfg = parse_config(options.config);
        if (options.seed) {
            run.cfg.engine.seed = *options.seed;
            run.cfg.document["engine"]["seed"] = *options.seed;
        }
        run.out = options.out ? *options.out : std::filesystem::path(run.cfg.output);
        run.workers = options.workers > 0 ? options.workers : default_workers();
        const std::string cache_dir = options.cache ? *options.cache : run.cfg.cache;
        if (!cache_dir.empty()) run.cache = std::make_unique<ResultCache>(cache_dir);
        run.log = &log;
        return handler(run);
    } catch (const ConfigError& e) {
        err << "config error [" << e.module() << "/" << e.operation() << "]: " << e.what() << "\n";
        return exit_config;
    } catch (const DomainError& e) {
        err << "invalid input [" << e.module() << "/" << e.operation() << "]: " << e.what() << "\n";
        return exit_config;
    } catch (const Error& e) {
        err << "numerical failure [" << e.module() << "/" << e.operation() << "]: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << "\n";
        return exit_numerical;
    }
}

}  // namespace scbl
