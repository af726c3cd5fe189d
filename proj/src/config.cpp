#include "scbl/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "scbl/io.hpp"

namespace scbl {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw ConfigError("cli", "parse_config", what); }

const char* type_word(const json& v) {
    if (v.is_boolean()) return "boolean";
    if (v.is_number_integer() || v.is_number_unsigned()) return "integer";
    if (v.is_number()) return "number";
    if (v.is_string()) return "string";
    if (v.is_array()) return "array";
    if (v.is_object()) return "object";
    return "null";
}

// Reads one object block, tracking which keys were consumed and writing
// defaults back so the filled document records them.
class Block {
public:
    Block(json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) fail("type mismatch at " + path_ + ": expected object, got " + type_word(node_));
    }

    bool has(const std::string& key) const { return node_.contains(key); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        if (!node_.contains(key)) fail("missing required field " + where(key));
        return node_.at(key);
    }

    json& child(const std::string& key) {
        seen_.insert(key);
        if (!node_.contains(key)) node_[key] = json::object();
        return node_[key];
    }

    double number(const std::string& key) { return as_number(raw(key), where(key)); }
    double number(const std::string& key, double fallback) {
        if (!has(key)) node_[key] = fallback;
        return number(key);
    }
    long long integer(const std::string& key) { return as_integer(raw(key), where(key)); }
    long long integer(const std::string& key, long long fallback) {
        if (!has(key)) node_[key] = fallback;
        return integer(key);
    }
    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) node_[key] = fallback;
        const auto& v = raw(key);
        if (!v.is_boolean()) fail("type mismatch at " + where(key) + ": expected boolean, got " + type_word(v));
        return v.get<bool>();
    }
    std::string text(const std::string& key, const std::string& fallback) {
        if (!has(key)) node_[key] = fallback;
        const auto& v = raw(key);
        if (!v.is_string()) fail("type mismatch at " + where(key) + ": expected string, got " + type_word(v));
        return v.get<std::string>();
    }
    std::vector<double> numbers(const std::string& key) { return as_numbers(raw(key), where(key)); }
    std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) {
        if (!has(key)) node_[key] = fallback;
        return numbers(key);
    }
    std::vector<int> integers(const std::string& key, const std::vector<int>& fallback) {
        if (!has(key)) node_[key] = fallback;
        const auto& v = raw(key);
        if (!v.is_array()) fail("type mismatch at " + where(key) + ": expected array, got " + type_word(v));
        std::vector<int> out;
        for (std::size_t i = 0; i < v.size(); ++i)
            out.push_back(static_cast<int>(as_integer(v[i], where(key) + "[" + std::to_string(i) + "]")));
        return out;
    }

    /// Keys accepted without being read here (validated elsewhere).
    void allow(const std::string& key) { seen_.insert(key); }

    void finish() const {
        for (auto it = node_.begin(); it != node_.end(); ++it)
            if (!seen_.count(it.key())) fail("unknown key " + it.key() + (path_.empty() ? "" : " in " + path_));
    }

    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    static double as_number(const json& v, const std::string& at) {
        if (!v.is_number()) fail("type mismatch at " + at + ": expected number, got " + type_word(v));
        return v.get<double>();
    }
    static long long as_integer(const json& v, const std::string& at) {
        if (!(v.is_number_integer() || v.is_number_unsigned()))
            fail("type mismatch at " + at + ": expected integer, got " + type_word(v));
        return v.get<long long>();
    }
    static std::vector<double> as_numbers(const json& v, const std::string& at) {
        if (!v.is_array()) fail("type mismatch at " + at + ": expected array, got " + type_word(v));
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], at + "[" + std::to_string(i) + "]"));
        return out;
    }

private:
    json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

// "B.12" -> (0, 1); indices are 1-based single digits.
std::pair<int, int> index_pair(const std::string& key, char letter, int dim, const std::string& at) {
    if (key.size() != 4 || key[0] != letter || key[1] != '.' || key[2] < '1' || key[2] > '9' || key[3] < '1' ||
        key[3] > '9')
        fail("unknown key " + key + " in " + at);
    const int i = key[2] - '1', j = key[3] - '1';
    if (i >= dim || j >= dim) fail("index out of range in " + at + "." + key);
    return {i, j};
}

std::vector<FourierMode> read_modes(const json& arr, int dim, const std::string& at) {
    if (!arr.is_array()) fail("type mismatch at " + at + ": expected array, got " + type_word(arr));
    std::vector<FourierMode> out;
    for (std::size_t n = 0; n < arr.size(); ++n) {
        json item = arr[n];
        Block b(item, at + "[" + std::to_string(n) + "]");
        FourierMode m;
        const auto& k = b.raw("k");
        if (!k.is_array() || static_cast<int>(k.size()) != dim)
            fail("type mismatch at " + b.where("k") + ": expected " + std::to_string(dim) + " integers");
        for (std::size_t i = 0; i < k.size(); ++i)
            m.k.push_back(static_cast<int>(Block::as_integer(k[i], b.where("k") + "[" + std::to_string(i) + "]")));
        m.amplitude = Complex(b.number("re", 0.0), b.number("im", 0.0));
        b.finish();
        out.push_back(std::move(m));
    }
    return out;
}

Family family_from(const std::string& name, const std::string& at) {
    if (name == "gaussian") return Family::gaussian;
    if (name == "gaussian_poly") return Family::gaussian_poly;
    if (name == "bump") return Family::bump;
    if (name == "exponential") return Family::exponential;
    fail("unknown family " + name + " at " + at);
}

TermSpec read_term(json& node, const std::string& at) {
    Block b(node, at);
    TermSpec t;
    const auto& fam = b.raw("family");
    if (!fam.is_string()) fail("type mismatch at " + b.where("family") + ": expected string, got " + type_word(fam));
    t.family = family_from(fam.get<std::string>(), b.where("family"));
    t.weight = b.number("weight", 1.0);
    switch (t.family) {
        case Family::gaussian_poly:
            t.degree = static_cast<int>(b.integer("degree", 0));
            [[fallthrough]];
        case Family::gaussian:
            t.center = b.number("center", 0.0);
            t.width = b.number("width", 1.0);
            break;
        case Family::bump:
            t.lower = b.number("lower");
            t.upper = b.number("upper");
            t.smoothness = static_cast<int>(b.integer("smoothness", 4));
            break;
        case Family::exponential:
            t.rate = b.number("rate", 1.0);
            break;
    }
    b.finish();
    return t;
}

std::vector<double> point_or_default(Block& b, const std::string& key, std::size_t dim) {
    auto v = b.numbers(key, std::vector<double>(dim, 0.0));
    if (v.size() != dim) fail("type mismatch at " + b.where(key) + ": expected " + std::to_string(dim) + " numbers");
    return v;
}

void check_p_list(const std::vector<int>& p, const std::string& at) {
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] < 1 || (i && p[i] <= p[i - 1])) fail(at + " must hold positive increasing integers");
}

}  // namespace

std::string Config::canonical(const std::vector<std::string>& blocks) const {
    json sub = json::object();
    for (const auto& b : blocks)
        if (document.contains(b)) sub[b] = document.at(b);
    return dump_json(sub, 0);
}

Problem Config::problem() const {
    Problem pr{geom, make_field(geom, field), make_potential(geom, potential), make_test_function(phi)};
    return pr;
}

EngineOptions Config::engine_options(int workers) const {
    EngineOptions e;
    e.dense_cap = engine.dense_cap;
    e.workers = workers;
    e.eig_column_limit = engine.eig_column_limit;
    e.series_tolerance = engine.series_tolerance;
    return e;
}

KpmOptions Config::kpm_options() const {
    KpmOptions k;
    k.order = engine.kpm_order;
    k.probes = engine.kpm_probes;
    k.seed = engine.seed;
    k.damping = engine.damping;
    return k;
}

LabOptions Config::lab_options(int workers) const {
    LabOptions o;
    o.grid_factor = engine.grid_factor;
    o.two_grids = engine.two_grids;
    o.method = engine.method;
    o.kpm = kpm_options();
    o.engine = engine_options(workers);
    return o;
}

ModelKernelOptions Config::model_kernel_options(int workers) const {
    ModelKernelOptions m;
    m.spacing = model.spacing;
    m.box_halfwidth = model.box_halfwidth;
    m.richardson = model.richardson;
    m.series_tolerance = engine.series_tolerance;
    m.workers = workers;
    return m;
}

Config parse_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open config " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

Config parse_config_text(const std::string& text, const std::filesystem::path& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(std::string("invalid JSON: ") + e.what());
    }
    return parse_config_json(doc, origin);
}

Config parse_config_json(const nlohmann::json& input, const std::filesystem::path& origin) {
    Config c;
    c.document = input;
    c.origin = origin;
    if (!c.document.is_object()) fail("config must be a JSON object");
    // typos are reported before the missing field they usually cause
    static const std::set<std::string> known = {"geometry", "field",  "potential", "phi",      "engine",
                                                "hs",       "sweep",  "model",     "kernel",   "decay",
                                                "operator", "acceptance", "output", "cache"};
    for (auto it = c.document.begin(); it != c.document.end(); ++it)
        if (!known.count(it.key())) fail("unknown key " + it.key());
    Block top(c.document, "");
    if (!top.has("geometry")) fail("missing required field geometry");
    if (!top.has("phi")) fail("missing required field phi");

    {
        Block g(top.child("geometry"), "geometry");
        const int d = static_cast<int>(g.integer("d"));
        const auto lengths = g.numbers("lengths");
        if (static_cast<int>(lengths.size()) != d) fail("geometry.lengths must have d entries");
        g.finish();
        try {
            c.geom = make_flat_torus(d, lengths);
        } catch (const DomainError& e) {
            fail(std::string("geometry: ") + e.what());
        }
    }
    const int d = c.geom.dim;

    {
        auto& node = top.child("field");
        Block f(node, "field");
        for (auto it = node.begin(); it != node.end(); ++it) {
            if (it.key() == "modes") continue;
            const auto [i, j] = index_pair(it.key(), 'B', d, "field");
            if (i == j) fail("field." + it.key() + " is a diagonal entry");
            f.allow(it.key());
            c.field.constants.push_back({i, j, Block::as_number(it.value(), "field." + it.key())});
        }
        if (f.has("modes")) {
            auto& modes = f.child("modes");
            Block m(modes, "field.modes");
            for (auto it = modes.begin(); it != modes.end(); ++it) {
                const auto [i, j] = index_pair(it.key(), 'B', d, "field.modes");
                if (i == j) fail("field.modes." + it.key() + " is a diagonal entry");
                m.allow(it.key());
                for (auto& mode : read_modes(it.value(), d, "field.modes." + it.key()))
                    c.field.perturbations.push_back({i, j, std::move(mode)});
            }
            m.finish();
        }
        f.finish();
    }

    {
        Block v(top.child("potential"), "potential");
        const int r = static_cast<int>(v.integer("rank", 1));
        if (r < 1) fail("potential.rank must be positive");
        c.potential.rank = r;
        c.potential.constant = ComplexMatrix::Zero(r, r);
        if (!v.has("constant")) v.child("constant") = 0.0;
        const auto& cst = v.raw("constant");
        if (cst.is_number()) {
            c.potential.constant = cst.get<double>() * ComplexMatrix::Identity(r, r);
        } else if (cst.is_array()) {
            if (static_cast<int>(cst.size()) != r) fail("potential.constant must be rank x rank");
            for (int a = 0; a < r; ++a) {
                const auto row = Block::as_numbers(cst[a], "potential.constant[" + std::to_string(a) + "]");
                if (static_cast<int>(row.size()) != r) fail("potential.constant must be rank x rank");
                for (int b = 0; b < r; ++b) c.potential.constant(a, b) = row[b];
            }
        } else {
            fail(std::string("type mismatch at potential.constant: expected number or array, got ") + type_word(cst));
        }
        if (v.has("constant_im")) {
            const auto& im = v.raw("constant_im");
            if (!im.is_array() || static_cast<int>(im.size()) != r) fail("potential.constant_im must be rank x rank");
            for (int a = 0; a < r; ++a) {
                const auto row = Block::as_numbers(im[a], "potential.constant_im[" + std::to_string(a) + "]");
                if (static_cast<int>(row.size()) != r) fail("potential.constant_im must be rank x rank");
                for (int b = 0; b < r; ++b) c.potential.constant(a, b) += Complex(0.0, row[b]);
            }
        }
        if (v.has("modes")) {
            auto& modes = v.child("modes");
            Block m(modes, "potential.modes");
            for (auto it = modes.begin(); it != modes.end(); ++it) {
                const auto [a, b] = index_pair(it.key(), 'V', r, "potential.modes");
                m.allow(it.key());
                for (auto& mode : read_modes(it.value(), d, "potential.modes." + it.key()))
                    c.potential.modes.push_back({a, b, std::move(mode)});
            }
            m.finish();
        }
        v.finish();
    }

    {
        auto& node = top.child("phi");
        if (!node.is_object()) fail(std::string("type mismatch at phi: expected object, got ") + type_word(node));
        if (node.contains("terms")) {
            Block p(node, "phi");
            auto& terms = p.child("terms");
            if (!terms.is_array() || terms.empty()) fail("phi.terms must be a non-empty array");
            for (std::size_t i = 0; i < terms.size(); ++i)
                c.phi.push_back(read_term(terms[i], "phi.terms[" + std::to_string(i) + "]"));
            p.finish();
        } else {
            c.phi.push_back(read_term(node, "phi"));
        }
    }

    {
        Block e(top.child("engine"), "engine");
        const auto method = e.text("method", "dense");
        if (method == "dense")
            c.engine.method = TraceMethod::dense;
        else if (method == "kpm")
            c.engine.method = TraceMethod::kpm;
        else
            fail("engine.method must be dense or kpm");
        c.engine.dense_cap = e.integer("dense_cap", 20000);
        c.engine.kpm_order = static_cast<int>(e.integer("kpm_order", 128));
        c.engine.kpm_probes = static_cast<int>(e.integer("kpm_probes", 32));
        const long long seed = e.integer("seed", 20240601);
        if (seed < 0) fail("engine.seed must be non-negative");
        c.engine.seed = static_cast<std::uint64_t>(seed);
        const auto damping = e.text("damping", "jackson");
        if (damping == "jackson")
            c.engine.damping = Damping::jackson;
        else if (damping == "none")
            c.engine.damping = Damping::none;
        else
            fail("engine.damping must be jackson or none");
        c.engine.grid_factor = e.number("grid_factor", 48.0);
        c.engine.two_grids = e.boolean("two_grids", true);
        c.engine.eig_column_limit = e.integer("eig_column_limit", 2500);
        c.engine.series_tolerance = e.number("series_tolerance", 1e-13);
        e.finish();
        if (c.engine.dense_cap < 1) fail("engine.dense_cap must be positive");
        if (c.engine.kpm_order < 16) fail("engine.kpm_order must be at least 16");
        if (c.engine.kpm_probes < 1) fail("engine.kpm_probes must be at least 1");
        if (c.engine.grid_factor < 8.0) fail("engine.grid_factor must be at least 8");
        if (!(c.engine.series_tolerance > 0.0)) fail("engine.series_tolerance must be positive");
    }

    {
        Block h(top.child("hs"), "hs");
        c.hs_order = static_cast<int>(h.integer("order", 4));
        c.hs.mu_nodes = static_cast<int>(h.integer("mu_nodes", 400));
        c.hs.nu_nodes = static_cast<int>(h.integer("nu_nodes", 400));
        c.hs.nu_min = h.number("nu_min", 1e-3);
        h.finish();
        if (c.hs_order < 2) fail("hs.order must be at least 2");
        if (c.hs.mu_nodes < 1 || c.hs.nu_nodes < 1 || !(c.hs.nu_min > 0.0)) fail("hs mesh must be positive");
    }

    {
        Block s(top.child("sweep"), "sweep");
        c.sweep.p_list = s.integers("p_list", {8, 16, 32});
        check_p_list(c.sweep.p_list, "sweep.p_list");
        c.sweep.order = static_cast<int>(s.integer("j", 2));
        c.sweep.residual_cap = s.number("residual_cap", 1e-3);
        c.sweep.leading_mesh = static_cast<int>(s.integer("leading_mesh", 16));
        s.finish();
        if (c.sweep.order < 0) fail("sweep.j must be non-negative");
        if (c.sweep.leading_mesh < 1) fail("sweep.leading_mesh must be positive");
    }

    {
        Block m(top.child("model"), "model");
        c.model.x0 = point_or_default(m, "x0", d);
        c.model.spacing = m.number("spacing", 0.2);
        c.model.box_halfwidth = m.number("box_halfwidth", 0.0);
        c.model.richardson = m.boolean("richardson", true);
        c.model.f0_mesh = static_cast<int>(m.integer("f0_mesh", 16));
        m.finish();
        if (!(c.model.spacing > 0.0)) fail("model.spacing must be positive");
        if (c.model.f0_mesh < 1) fail("model.f0_mesh must be positive");
    }

    {
        Block k(top.child("kernel"), "kernel");
        c.kernel.p_list = k.integers("p_list", {8, 16, 32});
        check_p_list(c.kernel.p_list, "kernel.p_list");
        std::vector<double> centre;
        for (double l : c.geom.lengths) centre.push_back(0.5 * l);
        c.kernel.x0 = k.numbers("x0", centre);
        if (static_cast<int>(c.kernel.x0.size()) != d) fail("kernel.x0 must have d entries");
        if (!k.has("pairs")) k.child("pairs") = json::array();
        const auto& pairs = k.raw("pairs");
        if (!pairs.is_array()) fail(std::string("type mismatch at kernel.pairs: expected array, got ") + type_word(pairs));
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const std::string at = "kernel.pairs[" + std::to_string(i) + "]";
            if (!pairs[i].is_array() || pairs[i].size() != 2) fail(at + " must be [Z, Z']");
            const auto z = Block::as_numbers(pairs[i][0], at + "[0]");
            const auto zp = Block::as_numbers(pairs[i][1], at + "[1]");
            if (static_cast<int>(z.size()) != d || static_cast<int>(zp.size()) != d) fail(at + " entries must have d numbers");
            c.kernel.pairs.push_back({Eigen::Map<const RealVector>(z.data(), d), Eigen::Map<const RealVector>(zp.data(), d)});
        }
        c.kernel.envelope = static_cast<int>(k.integer("envelope", 4));
        k.finish();
    }

    {
        Block k(top.child("decay"), "decay");
        c.decay.p_list = k.integers("p_list", {8, 16, 32});
        check_p_list(c.decay.p_list, "decay.p_list");
        std::vector<double> x(d, 0.0), xp(d, 0.0);
        for (int i = 0; i < d; ++i) x[i] = 0.25 * c.geom.lengths[i], xp[i] = x[i];
        xp[0] = 0.75 * c.geom.lengths[0];
        c.decay.x = k.numbers("x", x);
        c.decay.x_prime = k.numbers("x_prime", xp);
        if (static_cast<int>(c.decay.x.size()) != d || static_cast<int>(c.decay.x_prime.size()) != d)
            fail("decay points must have d entries");
        c.decay.epsilon = k.number("epsilon", 0.1);
        c.decay.threshold = k.number("threshold", -3.0);
        k.finish();
    }

    {
        Block o(top.child("operator"), "operator");
        c.op.p = static_cast<int>(o.integer("p", 8));
        c.op.grid = o.integers("grid", {});
        c.op.vectors = o.boolean("vectors", false);
        o.finish();
        if (c.op.p < 1) fail("operator.p must be positive");
        if (!c.op.grid.empty() && static_cast<int>(c.op.grid.size()) != d) fail("operator.grid must have d entries");
    }

    {
        Block a(top.child("acceptance"), "acceptance");
        c.criteria = a.integers("criteria", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
        a.finish();
        for (int id : c.criteria)
            if (id < 1 || id > 10) fail("acceptance.criteria entries must be in 1..10");
    }

    c.output = top.text("output", "out");
    c.cache = top.text("cache", "");
    top.finish();

    // Build once so invalid physics (flux, Hermiticity, phi parameters) is
    // reported before any computation.
    try {
        (void)c.problem();
    } catch (const DomainError& e) {
        throw ConfigError(e.module(), e.operation(), e.what());
    }
    return c;
}

}  // namespace scbl
