#include "flowproc/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace flowproc {

using nlohmann::json;

double DataFnSpec::eval(double x) const {
    if (kind == "one") return height;
    if (kind == "plateau") return std::abs(x - center) <= half_width ? height : 0.0;
    const double u = (x - center) / sd;
    return height * std::exp(-0.5 * u * u);
}

namespace {

ScalarFn parse_scalar_fn(const json& j, const char* name) {
    if (!j.is_object())
        throw ConfigError(std::string("parametric coefficient ") + name +
                          " needs {offset, amp, freq}");
    ScalarFn f;
    f.offset = j.value("offset", 0.0);
    f.amp = j.value("amp", 0.0);
    f.freq = j.value("freq", 0.0);
    return f;
}

std::vector<double> parse_matrix(const json& j, int dim, const char* name) {
    std::vector<double> flat;
    if (j.is_array() && !j.empty() && j.front().is_array()) {
        for (const auto& row : j)
            for (const auto& v : row) flat.push_back(v.get<double>());
    } else if (j.is_array()) {
        for (const auto& v : j) flat.push_back(v.get<double>());
    } else {
        throw ConfigError(std::string("model.") + name + " must be a matrix");
    }
    if ((int)flat.size() != dim * dim)
        throw ConfigError(std::string("model.") + name + " must hold dim*dim entries");
    return flat;
}

Coefficients parse_model(const json& j) {
    if (!j.is_object()) throw ConfigError("model block missing");
    const std::string kind = j.value("kind", "constant");
    const double delta = j.value("delta", 0.25);
    const double bound = j.value("bound", 10.0);
    const double lambda = j.value("lambda", 1.0);
    if (kind == "constant") {
        const int dim = j.value("dim", 1);
        if (dim < 1 || dim > 3) throw ConfigError("model.dim must be 1..3");
        std::vector<double> b;
        if (j.contains("b"))
            for (const auto& v : j.at("b")) b.push_back(v.get<double>());
        else
            b.assign((std::size_t)dim, 0.0);
        if ((int)b.size() != dim) throw ConfigError("model.b must hold dim entries");
        return make_constant_coefficients(dim, b, parse_matrix(j.at("sigma1"), dim, "sigma1"),
                                          parse_matrix(j.at("sigma2"), dim, "sigma2"), delta,
                                          bound, lambda);
    }
    if (kind == "parametric")
        return make_parametric_coefficients(parse_scalar_fn(j.at("b"), "b"),
                                            parse_scalar_fn(j.at("sigma1"), "sigma1"),
                                            parse_scalar_fn(j.at("sigma2"), "sigma2"), delta,
                                            bound, lambda);
    throw ConfigError("model.kind must be constant or parametric");
}

AtomicMeasure parse_initial(const json& j, int dim) {
    AtomicMeasure mu;
    mu.dim = dim;
    if (!j.contains("atoms")) throw ConfigError("initial.atoms missing");
    for (const auto& a : j.at("atoms")) {
        std::array<double, 3> pos = {0, 0, 0};
        if (a.contains("pos")) {
            const auto& p = a.at("pos");
            if ((int)p.size() != dim) throw ConfigError("initial atom pos has wrong dimension");
            for (int d = 0; d < dim; ++d) pos[(std::size_t)d] = p[(std::size_t)d].get<double>();
        } else if (a.contains("x")) {
            pos[0] = a.at("x").get<double>();
        } else {
            throw ConfigError("initial atom needs x or pos");
        }
        const double mass = a.value("mass", 1.0);
        if (!(mass >= 0)) throw ConfigError("atom mass must be nonnegative");
        mu.add(pos, mass);
    }
    return mu;
}

DataFnSpec parse_data_fn(const json& j) {
    DataFnSpec f;
    f.kind = j.value("kind", "one");
    if (f.kind != "one" && f.kind != "plateau" && f.kind != "gaussian")
        throw ConfigError("data function kind must be one, plateau or gaussian");
    f.height = j.value("height", 1.0);
    f.center = j.value("center", 0.0);
    f.half_width = j.value("half_width", 1.0);
    f.sd = j.value("sd", 1.0);
    if (!(f.height >= 0)) throw ConfigError("data function height must be nonnegative");
    if (f.kind == "plateau" && !(f.half_width > 0))
        throw ConfigError("plateau half_width must be positive");
    if (f.kind == "gaussian" && !(f.sd > 0)) throw ConfigError("gaussian sd must be positive");
    return f;
}

GridSpec parse_grid(const json& j) {
    GridSpec g;
    g.x_min = j.value("x_min", g.x_min);
    g.x_max = j.value("x_max", g.x_max);
    g.dx = j.value("dx", g.dx);
    return g;
}

json fn_json(const DataFnSpec& f) {
    json j = {{"kind", f.kind}, {"height", f.height}, {"center", f.center}};
    if (f.kind == "plateau") j["half_width"] = f.half_width;
    if (f.kind == "gaussian") j["sd"] = f.sd;
    return j;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    ExperimentConfig cfg;
    try {
        if (!j.contains("version")) throw ConfigError("config version field missing");
        cfg.version = j.at("version").get<int>();
        if (cfg.version != 1) throw ConfigError("unsupported config version");

        cfg.model = parse_model(j.value("model", json::object()));
        if (j.contains("initial")) cfg.initial = parse_initial(j.at("initial"), cfg.model.dim);
        cfg.initial.dim = cfg.model.dim;

        const json n = j.value("numerics", json::object());
        auto opt = [&](const char* key) -> std::optional<double> {
            if (!n.contains(key)) return std::nullopt;
            return n.at(key).get<double>();
        };
        cfg.numerics.dt = opt("dt");
        cfg.numerics.dx = opt("dx");
        cfg.numerics.h = opt("h");
        cfg.numerics.ds = opt("ds");
        cfg.numerics.dr = opt("dr");
        cfg.numerics.t_final = opt("t_final");
        cfg.numerics.x_min = opt("x_min");
        cfg.numerics.x_max = opt("x_max");
        cfg.numerics.horizon = opt("horizon");
        if (n.contains("snapshot_times"))
            for (const auto& v : n.at("snapshot_times"))
                cfg.numerics.snapshot_times.push_back(v.get<double>());
        if (n.contains("levels"))
            for (const auto& v : n.at("levels")) cfg.numerics.levels.push_back(v.get<double>());
        if (n.contains("population_cap"))
            cfg.numerics.population_cap = n.at("population_cap").get<long>();

        const json m = j.value("mc", json::object());
        cfg.mc.replicates = m.value("replicates", cfg.mc.replicates);
        cfg.mc.seed = m.value("seed", cfg.mc.seed);
        cfg.mc.tolerance_sigma = m.value("tolerance_sigma", cfg.mc.tolerance_sigma);
        if (cfg.mc.replicates < 1) throw ConfigError("mc.replicates must be at least 1");
        if (!(cfg.mc.tolerance_sigma > 0)) throw ConfigError("mc.tolerance_sigma must be positive");

        const json o = j.value("output", json::object());
        cfg.output.dir = o.value("dir", cfg.output.dir);
        cfg.output.atoms = o.value("atoms", cfg.output.atoms);
        cfg.output.series = o.value("series", cfg.output.series);
        if (cfg.output.dir.empty()) throw ConfigError("output.dir must not be empty");

        if (j.contains("terminal")) cfg.terminal = parse_data_fn(j.at("terminal"));
        if (j.contains("functional")) cfg.functional = parse_data_fn(j.at("functional"));

        const json d = j.value("duality", json::object());
        cfg.duality.arity = d.value("arity", cfg.duality.arity);
        cfg.duality.t = d.value("t", cfg.duality.t);
        if (d.contains("grid")) cfg.duality.grid = parse_grid(d.at("grid"));
        if (d.contains("f")) cfg.duality.f = parse_data_fn(d.at("f"));
    } catch (const FlowError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return cfg;
}

std::string resolved_config_json(const ExperimentConfig& cfg) {
    json j;
    j["version"] = cfg.version;

    json model;
    const Coefficients& c = cfg.model;
    model["dim"] = c.dim;
    model["delta"] = c.delta;
    model["bound"] = c.K;
    model["lambda"] = c.lambda;
    if (c.constant()) {
        model["kind"] = "constant";
        model["b"] = c.b_const;
        model["sigma1"] = c.sigma1_const;
        model["sigma2"] = c.sigma2_const;
    } else {
        model["kind"] = "parametric";
        auto fn = [](const ScalarFn& f) {
            return json{{"offset", f.offset}, {"amp", f.amp}, {"freq", f.freq}};
        };
        model["b"] = fn(c.b_fn);
        model["sigma1"] = fn(c.sigma1_fn);
        model["sigma2"] = fn(c.sigma2_fn);
    }
    j["model"] = model;

    json atoms = json::array();
    for (const Atom& a : cfg.initial.atoms) {
        std::vector<double> pos(a.pos.begin(), a.pos.begin() + cfg.initial.dim);
        atoms.push_back({{"pos", pos}, {"mass", a.mass}});
    }
    j["initial"] = {{"atoms", atoms}};

    json n;
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v) n[key] = *v;
    };
    put("dt", cfg.numerics.dt);
    put("dx", cfg.numerics.dx);
    put("h", cfg.numerics.h);
    put("ds", cfg.numerics.ds);
    put("dr", cfg.numerics.dr);
    put("t_final", cfg.numerics.t_final);
    put("x_min", cfg.numerics.x_min);
    put("x_max", cfg.numerics.x_max);
    put("horizon", cfg.numerics.horizon);
    if (!cfg.numerics.snapshot_times.empty()) n["snapshot_times"] = cfg.numerics.snapshot_times;
    if (!cfg.numerics.levels.empty()) n["levels"] = cfg.numerics.levels;
    if (cfg.numerics.population_cap) n["population_cap"] = *cfg.numerics.population_cap;
    j["numerics"] = n;

    j["mc"] = {{"replicates", cfg.mc.replicates},
               {"seed", cfg.mc.seed},
               {"tolerance_sigma", cfg.mc.tolerance_sigma}};
    j["output"] = {{"dir", cfg.output.dir},
                   {"atoms", cfg.output.atoms},
                   {"series", cfg.output.series}};
    j["terminal"] = fn_json(cfg.terminal);
    if (cfg.functional) j["functional"] = fn_json(*cfg.functional);
    j["duality"] = {{"arity", cfg.duality.arity},
                    {"t", cfg.duality.t},
                    {"grid",
                     {{"x_min", cfg.duality.grid.x_min},
                      {"x_max", cfg.duality.grid.x_max},
                      {"dx", cfg.duality.grid.dx}}},
                    {"f", fn_json(cfg.duality.f)}};
    return j.dump(2);
}

}  // namespace flowproc
