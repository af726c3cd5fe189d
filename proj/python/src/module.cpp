#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "scbl/acceptance.hpp"
#include "scbl/commands.hpp"
#include "scbl/config.hpp"
#include "scbl/expansion.hpp"
#include "scbl/io.hpp"
#include "scbl/linalg.hpp"
#include "scbl/model.hpp"
#include "scbl/operator.hpp"
#include "scbl/spectral.hpp"

namespace py = pybind11;
using namespace scbl;

namespace {

// JSON crosses the boundary as text; the Python side decodes it.
std::string to_text(const nlohmann::json& j) { return dump_json(j, 0); }

Config config_from(const std::string& text) { return parse_config_text(text); }

nlohmann::json sweep_rows(const std::vector<SweepRow>& rows) {
    auto out = nlohmann::json::array();
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

}  // namespace

PYBIND11_MODULE(_scbl, m) {
    m.doc() = "Bochner-Schrodinger operators on flat tori: spectra, traces and kernel expansions.";
    m.attr("__version__") = SCBL_VERSION;

    auto base = py::register_exception<Error>(m, "ScblError");
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

    m.def("normalize_config", [](const std::string& text) { return to_text(config_from(text).document); },
          py::arg("text"), "Validates a config and returns it with defaults filled in, as JSON text.");

    m.def(
        "operator_spectrum",
        [](const std::string& text, int p, std::vector<int> grid) {
            const Config cfg = config_from(text);
            const Problem pr = cfg.problem();
            if (grid.empty()) grid = resolved_grid(pr.geom, pr.field, p, cfg.engine.grid_factor);
            const auto op = assemble_hp(pr.geom, pr.field, pr.potential, p, grid);
            py::gil_scoped_release release;
            return hermitian_eigenvalues(ComplexMatrix(op.matrix));
        },
        py::arg("config"), py::arg("p"), py::arg("grid") = std::vector<int>{},
        "Ascending eigenvalues of the discretized operator.");

    m.def(
        "trace_sweep",
        [](const std::string& text, const std::vector<int>& p_list, int workers) {
            const Config cfg = config_from(text);
            std::vector<SweepRow> rows;
            {
                py::gil_scoped_release release;
                rows = trace_sweep(cfg.problem(), p_list, cfg.lab_options(workers));
            }
            return to_text(sweep_rows(rows));
        },
        py::arg("config"), py::arg("p_list"), py::arg("workers") = 1);

    m.def(
        "fit_expansion",
        [](const std::vector<int>& p, const std::vector<double>& values, int order) {
            const auto fit = fit_half_power_expansion(p, values, order);
            return py::dict(py::arg("coefficients") = fit.coefficients, py::arg("standard_errors") = fit.standard_errors,
                            py::arg("residual") = fit.residual, py::arg("condition") = fit.condition);
        },
        py::arg("p"), py::arg("values"), py::arg("order"));

    m.def(
        "leading_integral",
        [](const std::string& text, int mesh) {
            const Config cfg = config_from(text);
            const Problem pr = cfg.problem();
            return leading_integral(pr.geom, pr.field, pr.potential, pr.phi, mesh).value;
        },
        py::arg("config"), py::arg("mesh") = 16);

    m.def(
        "model_f0",
        [](const RealMatrix& skew, const std::string& text) {
            const Config cfg = config_from(text);
            auto data = b_eigenstructure(skew);
            attach_potential(data, ComplexMatrix::Zero(1, 1));
            return f0_point(data, cfg.problem().phi)(0, 0).real();
        },
        py::arg("skew"), py::arg("config"), "Leading coefficient for a constant field with zero potential.");

    m.def(
        "run_command",
        [](const std::string& name, const std::filesystem::path& config, std::optional<std::filesystem::path> out,
           int workers, std::optional<std::string> cache) {
            CommandOptions opt;
            opt.config = config;
            opt.out = std::move(out);
            opt.workers = workers;
            opt.cache = std::move(cache);
            std::ostringstream log, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = run_command(name, opt, log, err);
            }
            return py::make_tuple(code, log.str(), err.str());
        },
        py::arg("name"), py::arg("config"), py::arg("out") = py::none(), py::arg("workers") = 1,
        py::arg("cache") = py::none(), "Runs a CLI command; returns (exit_code, log, errors).");

    m.def(
        "run_criterion",
        [](int id, const std::filesystem::path& config_dir) {
            AcceptanceContext ctx;
            ctx.config_dir = config_dir;
            CriterionResult r;
            {
                py::gil_scoped_release release;
                r = run_criterion(id, ctx);
            }
            return to_text(acceptance_report({r}));
        },
        py::arg("id"), py::arg("config_dir"));

    m.def("command_names", &command_names);
}
