#include "meso/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "meso/csv.hpp"
#include "meso/error.hpp"

namespace meso::io {

using nlohmann::json;

namespace {

struct Ctx {
    std::vector<std::string> errors;
    std::vector<std::string> defaults;

    void fail(const std::string& path, const std::string& message) {
        errors.push_back(path + ": " + message);
    }
    template <typename T>
    void note_default(const std::string& path, const T& value) {
        if constexpr (std::is_same_v<T, bool>) {
            defaults.push_back(path + " = " + (value ? "true" : "false"));
        } else if constexpr (std::is_arithmetic_v<T>) {
            defaults.push_back(path + " = " + format_double(static_cast<double>(value)));
        } else {
            defaults.push_back(path + " = " + std::string(value));
        }
    }
};

void check_keys(Ctx& ctx, const json& j, const std::string& path,
                const std::set<std::string>& allowed) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key)) ctx.fail(path, "unknown key '" + key + "'");
    }
}

bool expect_object(Ctx& ctx, const json& j, const std::string& path) {
    if (j.is_object()) return true;
    ctx.fail(path, "expected an object");
    return false;
}

double get_number(Ctx& ctx, const json& j, const std::string& path, const std::string& key,
                  std::optional<double> fallback = {}) {
    if (!j.contains(key)) {
        if (fallback) {
            ctx.note_default(path + "." + key, *fallback);
            return *fallback;
        }
        ctx.fail(path, "missing required key '" + key + "'");
        return 0.0;
    }
    if (!j[key].is_number()) {
        ctx.fail(path + "." + key, "expected a number");
        return 0.0;
    }
    return j[key].get<double>();
}

std::int64_t get_integer(Ctx& ctx, const json& j, const std::string& path, const std::string& key,
                         std::optional<std::int64_t> fallback = {}) {
    if (!j.contains(key)) {
        if (fallback) {
            ctx.note_default(path + "." + key, *fallback);
            return *fallback;
        }
        ctx.fail(path, "missing required key '" + key + "'");
        return 0;
    }
    if (!j[key].is_number_integer()) {
        ctx.fail(path + "." + key, "expected an integer");
        return 0;
    }
    return j[key].get<std::int64_t>();
}

bool get_bool(Ctx& ctx, const json& j, const std::string& path, const std::string& key,
              bool fallback) {
    if (!j.contains(key)) {
        ctx.note_default(path + "." + key, fallback);
        return fallback;
    }
    if (!j[key].is_boolean()) {
        ctx.fail(path + "." + key, "expected a boolean");
        return fallback;
    }
    return j[key].get<bool>();
}

std::string get_string(Ctx& ctx, const json& j, const std::string& path, const std::string& key,
                       std::optional<std::string> fallback = {}) {
    if (!j.contains(key)) {
        if (fallback) {
            ctx.note_default(path + "." + key, *fallback);
            return *fallback;
        }
        ctx.fail(path, "missing required key '" + key + "'");
        return {};
    }
    if (!j[key].is_string()) {
        ctx.fail(path + "." + key, "expected a string");
        return {};
    }
    return j[key].get<std::string>();
}

std::vector<double> get_number_array(Ctx& ctx, const json& j, const std::string& path,
                                     const std::string& key, bool required = true) {
    std::vector<double> out;
    if (!j.contains(key)) {
        if (required) ctx.fail(path, "missing required key '" + key + "'");
        return out;
    }
    if (!j[key].is_array()) {
        ctx.fail(path + "." + key, "expected an array of numbers");
        return out;
    }
    for (const auto& v : j[key]) {
        if (!v.is_number()) {
            ctx.fail(path + "." + key, "expected numbers only");
            return {};
        }
        out.push_back(v.get<double>());
    }
    return out;
}

// {"ee": x, "ei": x, "ie": x, "ii": x}
PopMatrix get_matrix(Ctx& ctx, const json& j, const std::string& path, const std::string& key) {
    PopMatrix m{};
    if (!j.contains(key)) {
        ctx.fail(path, "missing required key '" + key + "'");
        return m;
    }
    const json& block = j[key];
    std::string sub = path + "." + key;
    if (!expect_object(ctx, block, sub)) return m;
    check_keys(ctx, block, sub, {"ee", "ei", "ie", "ii"});
    m[kE][kE] = get_number(ctx, block, sub, "ee");
    m[kE][kI] = get_number(ctx, block, sub, "ei");
    m[kI][kE] = get_number(ctx, block, sub, "ie");
    m[kI][kI] = get_number(ctx, block, sub, "ii");
    return m;
}

PerPop<double> get_pair(Ctx& ctx, const json& j, const std::string& path, const std::string& key,
                        std::optional<double> fallback = {}) {
    PerPop<double> p{};
    if (!j.contains(key)) {
        if (fallback) {
            ctx.note_default(path + "." + key + ".e", *fallback);
            ctx.note_default(path + "." + key + ".i", *fallback);
            p[kE] = p[kI] = *fallback;
            return p;
        }
        ctx.fail(path, "missing required key '" + key + "'");
        return p;
    }
    const json& block = j[key];
    std::string sub = path + "." + key;
    if (!expect_object(ctx, block, sub)) return p;
    check_keys(ctx, block, sub, {"e", "i"});
    p[kE] = get_number(ctx, block, sub, "e");
    p[kI] = get_number(ctx, block, sub, "i");
    return p;
}

ColumnParams parse_column_params(Ctx& ctx, const json& j, const std::string& path) {
    ColumnParams p;
    if (!expect_object(ctx, j, path)) return p;
    check_keys(ctx, j, path,
               {"n_e", "n_i", "tau", "v_thresh", "A", "B", "v", "phi", "nn_coeff", "long"});
    p.n_e = get_number(ctx, j, path, "n_e");
    p.n_i = get_number(ctx, j, path, "n_i");
    p.tau = get_number(ctx, j, path, "tau", 1.0);
    p.v_thresh = get_pair(ctx, j, path, "v_thresh");
    p.A = get_matrix(ctx, j, path, "A");
    p.B = get_matrix(ctx, j, path, "B");
    p.v = get_matrix(ctx, j, path, "v");
    p.phi = get_matrix(ctx, j, path, "phi");
    p.nn_coeff = get_pair(ctx, j, path, "nn_coeff", 0.0);
    if (j.contains("long")) {
        const json& lr = j["long"];
        std::string sub = path + ".long";
        if (expect_object(ctx, lr, sub)) {
            check_keys(ctx, lr, sub, {"n_dagger", "a_dagger", "b_dagger", "v_dagger"});
            LongRangedParams block;
            block.n_dagger = get_number(ctx, lr, sub, "n_dagger");
            block.a_dagger = get_number(ctx, lr, sub, "a_dagger");
            block.b_dagger = get_number(ctx, lr, sub, "b_dagger");
            block.v_dagger = get_number(ctx, lr, sub, "v_dagger");
            p.long_ranged = block;
        }
    }
    return p;
}

FiringState parse_state(Ctx& ctx, const json& j, const std::string& path) {
    FiringState s;
    if (!expect_object(ctx, j, path)) return s;
    check_keys(ctx, j, path, {"m_e", "m_i"});
    s.m_e = get_number(ctx, j, path, "m_e");
    s.m_i = get_number(ctx, j, path, "m_i");
    return s;
}

PopulationSection parse_population(Ctx& ctx, const json& j, const std::string& path) {
    PopulationSection section;
    check_keys(ctx, j, path,
               {"regions", "connections", "drives", "pattern", "epochs", "ensemble", "fit"});
    section.epochs = get_integer(ctx, j, path, "epochs", 200);
    section.ensemble = static_cast<int>(get_integer(ctx, j, path, "ensemble", 256));

    if (!j.contains("regions") || !j["regions"].is_array() || j["regions"].empty()) {
        ctx.fail(path, "missing or empty 'regions' array");
        return section;
    }
    int r_idx = 0;
    for (const json& region_json : j["regions"]) {
        std::string rp = path + ".regions[" + std::to_string(r_idx++) + "]";
        Region region;
        if (!expect_object(ctx, region_json, rp)) continue;
        check_keys(ctx, region_json, rp, {"id", "columns", "lattice"});
        region.id = get_string(ctx, region_json, rp, "id");
        if (region_json.contains("lattice")) {
            std::vector<double> lattice = get_number_array(ctx, region_json, rp, "lattice");
            std::vector<int> shape;
            for (double v : lattice) shape.push_back(static_cast<int>(v));
            region.lattice_shape = shape;
        }
        if (!region_json.contains("columns") || !region_json["columns"].is_array()) {
            ctx.fail(rp, "missing 'columns' array");
            continue;
        }
        int c_idx = 0;
        for (const json& col_json : region_json["columns"]) {
            std::string cp = rp + ".columns[" + std::to_string(c_idx++) + "]";
            if (!expect_object(ctx, col_json, cp)) continue;
            check_keys(ctx, col_json, cp, {"params", "state", "centered", "count"});
            if (!col_json.contains("params")) {
                ctx.fail(cp, "missing required key 'params'");
                continue;
            }
            Column col;
            col.params = parse_column_params(ctx, col_json["params"], cp + ".params");
            if (col_json.contains("state"))
                col.state = parse_state(ctx, col_json["state"], cp + ".state");
            else
                ctx.note_default(cp + ".state", std::string("origin"));
            bool centered = get_bool(ctx, col_json, cp, "centered", false);
            std::int64_t count = get_integer(ctx, col_json, cp, "count", 1);
            if (count < 1) ctx.fail(cp + ".count", "must be >= 1");
            if (ctx.errors.empty() && centered) {
                try {
                    col.params = center_background(col.params);
                } catch (const Error& e) {
                    ctx.fail(cp, std::string("centering failed: ") + e.what());
                }
            }
            for (std::int64_t k = 0; k < count; ++k) region.columns.push_back(col);
        }
        section.graph.regions.push_back(std::move(region));
    }

    if (j.contains("connections")) {
        if (!j["connections"].is_array()) {
            ctx.fail(path + ".connections", "expected an array");
        } else {
            int i = 0;
            for (const json& cj : j["connections"]) {
                std::string cp = path + ".connections[" + std::to_string(i++) + "]";
                if (!expect_object(ctx, cj, cp)) continue;
                check_keys(ctx, cj, cp, {"src", "dst", "weight", "delay", "allow_self"});
                Connection c;
                c.src = get_string(ctx, cj, cp, "src");
                c.dst = get_string(ctx, cj, cp, "dst");
                c.weight = get_number(ctx, cj, cp, "weight");
                c.delay = static_cast<int>(get_integer(ctx, cj, cp, "delay", 1));
                c.allow_self = get_bool(ctx, cj, cp, "allow_self", false);
                section.graph.connections.push_back(c);
            }
        }
    }
    if (j.contains("drives")) {
        int i = 0;
        for (const json& dj : j["drives"]) {
            std::string dp = path + ".drives[" + std::to_string(i++) + "]";
            if (!expect_object(ctx, dj, dp)) continue;
            check_keys(ctx, dj, dp, {"region", "schedule"});
            ExogenousDrive drive;
            drive.region = get_string(ctx, dj, dp, "region");
            if (dj.contains("schedule") && dj["schedule"].is_array()) {
                int w = 0;
                for (const json& wj : dj["schedule"]) {
                    std::string wp = dp + ".schedule[" + std::to_string(w++) + "]";
                    if (!expect_object(ctx, wj, wp)) continue;
                    check_keys(ctx, wj, wp, {"from", "to", "amount"});
                    DriveWindow window;
                    window.first_epoch = get_integer(ctx, wj, wp, "from");
                    window.last_epoch = get_integer(ctx, wj, wp, "to");
                    window.amount = get_number(ctx, wj, wp, "amount");
                    drive.schedule.push_back(window);
                }
            } else {
                ctx.fail(dp, "missing 'schedule' array");
            }
            section.graph.drives.push_back(std::move(drive));
        }
    }
    if (j.contains("pattern")) {
        const json& pj = j["pattern"];
        std::string pp = path + ".pattern";
        if (expect_object(ctx, pj, pp)) {
            check_keys(ctx, pj, pp, {"tolerance", "targets"});
            IdeaPattern pattern;
            pattern.tolerance = get_number(ctx, pj, pp, "tolerance");
            if (pj.contains("targets") && pj["targets"].is_object()) {
                for (const auto& [id, states] : pj["targets"].items()) {
                    std::string tp = pp + ".targets." + id;
                    if (!states.is_array()) {
                        ctx.fail(tp, "expected an array of states");
                        continue;
                    }
                    int s_idx = 0;
                    for (const json& sj : states)
                        pattern.targets[id].push_back(
                            parse_state(ctx, sj, tp + "[" + std::to_string(s_idx++) + "]"));
                }
            } else {
                ctx.fail(pp, "missing 'targets' object");
            }
            section.pattern = std::move(pattern);
        }
    }
    if (j.contains("fit")) {
        const json& fj = j["fit"];
        std::string fp = path + ".fit";
        if (expect_object(ctx, fj, fp)) {
            check_keys(ctx, fj, fp,
                       {"regions", "mode", "budget", "c", "pattern_epochs", "pattern_ensemble",
                        "trajectory"});
            FitSection fit;
            if (fj.contains("regions") && fj["regions"].is_array()) {
                for (const json& v : fj["regions"])
                    if (v.is_string()) fit.regions.push_back(v.get<std::string>());
            } else {
                ctx.fail(fp, "missing 'regions' array");
            }
            std::string mode = get_string(ctx, fj, fp, "mode", std::string("background"));
            if (mode == "background")
                fit.mode = FitMode::background;
            else if (mode == "background_shift")
                fit.mode = FitMode::background_shift;
            else
                ctx.fail(fp + ".mode", "expected 'background' or 'background_shift'");
            fit.budget = get_integer(ctx, fj, fp, "budget", 10000);
            fit.c = get_number(ctx, fj, fp, "c", 1.0);
            fit.pattern_epochs = get_integer(ctx, fj, fp, "pattern_epochs", 50);
            fit.pattern_ensemble = static_cast<int>(get_integer(ctx, fj, fp, "pattern_ensemble", 64));
            if (fj.contains("trajectory")) fit.trajectory_csv = get_string(ctx, fj, fp, "trajectory");
            section.fit = std::move(fit);
        }
    }
    return section;
}

PathintSection parse_pathint(Ctx& ctx, const json& j, const std::string& path) {
    PathintSection section;
    check_keys(ctx, j, path, {"grid", "dt", "steps", "bandwidth", "dynamics", "initial", "trough"});
    section.dt = get_number(ctx, j, path, "dt");
    section.steps = get_integer(ctx, j, path, "steps");

    if (j.contains("grid") && j["grid"].is_object() && j["grid"].contains("axes") &&
        j["grid"]["axes"].is_array()) {
        check_keys(ctx, j["grid"], path + ".grid", {"axes"});
        int a_idx = 0;
        for (const json& aj : j["grid"]["axes"]) {
            std::string ap = path + ".grid.axes[" + std::to_string(a_idx++) + "]";
            if (!expect_object(ctx, aj, ap)) continue;
            check_keys(ctx, aj, ap, {"lo", "hi", "n", "label"});
            pathint::Axis axis;
            axis.lo = get_number(ctx, aj, ap, "lo");
            axis.hi = get_number(ctx, aj, ap, "hi");
            axis.n = static_cast<int>(get_integer(ctx, aj, ap, "n"));
            axis.label = get_string(ctx, aj, ap, "label", std::string("x"));
            section.grid.axes.push_back(axis);
        }
    } else {
        ctx.fail(path, "missing 'grid.axes' array");
    }

    std::vector<double> band = get_number_array(ctx, j, path, "bandwidth");
    for (double b : band) section.bandwidth.push_back(static_cast<int>(b));

    if (j.contains("dynamics") && j["dynamics"].is_object()) {
        const json& dj = j["dynamics"];
        std::string dp = path + ".dynamics";
        std::string kind = get_string(ctx, dj, dp, "type");
        if (kind == "ou") {
            check_keys(ctx, dj, dp, {"type", "tau", "sigma2"});
            section.dynamics.kind = PathintDynamics::Kind::ou;
            section.dynamics.tau = get_number(ctx, dj, dp, "tau", 1.0);
            section.dynamics.sigma2 = get_number(ctx, dj, dp, "sigma2", 1.0);
        } else if (kind == "diffusion") {
            check_keys(ctx, dj, dp, {"type", "sigma2"});
            section.dynamics.kind = PathintDynamics::Kind::diffusion;
            section.dynamics.sigma2 = get_number(ctx, dj, dp, "sigma2", 1.0);
        } else if (kind == "column") {
            check_keys(ctx, dj, dp, {"type", "params", "centered"});
            section.dynamics.kind = PathintDynamics::Kind::column;
            if (dj.contains("params"))
                section.dynamics.column = parse_column_params(ctx, dj["params"], dp + ".params");
            else
                ctx.fail(dp, "missing 'params' for column dynamics");
            section.dynamics.center_column = get_bool(ctx, dj, dp, "centered", false);
        } else if (!kind.empty()) {
            ctx.fail(dp + ".type", "expected 'ou', 'diffusion' or 'column'");
        }
    } else {
        ctx.fail(path, "missing 'dynamics' object");
    }

    if (j.contains("initial") && j["initial"].is_object()) {
        const json& ij = j["initial"];
        std::string ip = path + ".initial";
        std::string kind = get_string(ctx, ij, ip, "type");
        if (kind == "delta") {
            check_keys(ctx, ij, ip, {"type", "mean"});
            section.initial_delta = true;
            section.initial_mean = get_number_array(ctx, ij, ip, "mean");
        } else if (kind == "gaussian") {
            check_keys(ctx, ij, ip, {"type", "mean", "var"});
            section.initial_mean = get_number_array(ctx, ij, ip, "mean");
            section.initial_var = get_number_array(ctx, ij, ip, "var");
        } else if (!kind.empty()) {
            ctx.fail(ip + ".type", "expected 'delta' or 'gaussian'");
        }
    } else {
        ctx.fail(path, "missing 'initial' object");
    }

    if (j.contains("trough")) {
        const json& tj = j["trough"];
        std::string tp = path + ".trough";
        if (expect_object(ctx, tj, tp)) {
            check_keys(ctx, tj, tp, {"from", "to", "floor"});
            pathint::TroughSpec trough;
            for (double v : get_number_array(ctx, tj, tp, "from"))
                trough.from.push_back(static_cast<int>(v));
            for (double v : get_number_array(ctx, tj, tp, "to"))
                trough.to.push_back(static_cast<int>(v));
            trough.floor_fraction = get_number(ctx, tj, tp, "floor", 1e-6);
            section.trough = std::move(trough);
        }
    }
    return section;
}

RiskSection parse_risk(Ctx& ctx, const json& j, const std::string& path) {
    RiskSection section;
    check_keys(ctx, j, path,
               {"series", "window", "preaverage", "asymmetric", "n_events", "bins", "var_level",
                "q_target", "portfolio", "optimize"});
    section.series_csv = get_string(ctx, j, path, "series");
    section.window = static_cast<std::size_t>(get_integer(ctx, j, path, "window", 0));
    section.preaverage = get_bool(ctx, j, path, "preaverage", true);
    section.asymmetric = get_bool(ctx, j, path, "asymmetric", false);
    section.n_events = static_cast<std::size_t>(get_integer(ctx, j, path, "n_events", 100000));
    section.var_level = get_number(ctx, j, path, "var_level", 0.05);
    section.q_target = get_number(ctx, j, path, "q_target", 0.01);

    if (j.contains("bins")) {
        const json& bj = j["bins"];
        std::string bp = path + ".bins";
        if (expect_object(ctx, bj, bp)) {
            check_keys(ctx, bj, bp, {"count", "width"});
            section.bins.count = static_cast<int>(get_integer(ctx, bj, bp, "count", 101));
            section.bins.width = get_number(ctx, bj, bp, "width", 0.0);
        }
    } else {
        ctx.note_default(path + ".bins.count", 101);
    }

    if (j.contains("portfolio") && j["portfolio"].is_object()) {
        const json& pj = j["portfolio"];
        std::string pp = path + ".portfolio";
        std::string kind = get_string(ctx, pj, pp, "type");
        if (kind == "direct") {
            check_keys(ctx, pj, pp, {"type", "a", "b"});
            risk::DirectPortfolio direct;
            direct.a = get_number_array(ctx, pj, pp, "a");
            direct.b = get_number_array(ctx, pj, pp, "b", false);
            if (direct.b.empty()) {
                direct.b.assign(direct.a.size(), 0.0);
                ctx.note_default(pp + ".b", std::string("zeros"));
            }
            section.portfolio.direct = std::move(direct);
        } else if (kind == "position") {
            check_keys(ctx, pj, pp,
                       {"type", "nc", "nc_prev", "price", "price_at", "y_cash", "sl_rate"});
            risk::PositionPortfolio pos;
            pos.nc = get_number_array(ctx, pj, pp, "nc");
            pos.nc_prev = get_number_array(ctx, pj, pp, "nc_prev", false);
            pos.price = get_number_array(ctx, pj, pp, "price");
            pos.price_at = get_number_array(ctx, pj, pp, "price_at");
            pos.y_cash = get_number(ctx, pj, pp, "y_cash");
            pos.sl_rate = get_number(ctx, pj, pp, "sl_rate", 0.0);
            section.portfolio.position = std::move(pos);
        } else {
            ctx.fail(pp + ".type", "expected 'direct' or 'position'");
        }
    } else {
        ctx.fail(path, "missing 'portfolio' object");
    }

    if (j.contains("optimize")) {
        const json& oj = j["optimize"];
        std::string op = path + ".optimize";
        if (expect_object(ctx, oj, op)) {
            check_keys(ctx, oj, op,
                       {"free", "lo", "hi", "objective", "penalty", "budget", "c"});
            RiskOptimizeSection opt;
            for (double v : get_number_array(ctx, oj, op, "free"))
                opt.free_indices.push_back(static_cast<std::size_t>(v));
            opt.lo = get_number_array(ctx, oj, op, "lo");
            opt.hi = get_number_array(ctx, oj, op, "hi");
            std::string objective = get_string(ctx, oj, op, "objective", std::string("mean_return"));
            if (objective == "mean_return")
                opt.objective = risk::ExposureObjective::mean_return;
            else if (objective == "none")
                opt.objective = risk::ExposureObjective::none;
            else
                ctx.fail(op + ".objective", "expected 'mean_return' or 'none'");
            opt.penalty_weight = get_number(ctx, oj, op, "penalty", 1000.0);
            opt.budget = get_integer(ctx, oj, op, "budget", 10000);
            opt.c = get_number(ctx, oj, op, "c", 0.02);
            section.optimize = std::move(opt);
        }
    }
    return section;
}

AsaSection parse_asa(Ctx& ctx, const json& j, const std::string& path) {
    AsaSection section;
    check_keys(ctx, j, path,
               {"target", "bounds", "t0", "c", "t0_accept", "c_accept", "budget", "reanneal_every",
                "n_samples"});
    section.target = get_string(ctx, j, path, "target", std::string("quadratic"));
    if (section.target != "quadratic" && section.target != "cosine_bowl")
        ctx.fail(path + ".target", "expected 'quadratic' or 'cosine_bowl'");
    if (j.contains("bounds") && j["bounds"].is_array()) {
        int i = 0;
        for (const json& bj : j["bounds"]) {
            std::string bp = path + ".bounds[" + std::to_string(i++) + "]";
            if (!bj.is_array() || bj.size() != 2 || !bj[0].is_number() || !bj[1].is_number()) {
                ctx.fail(bp, "expected [lo, hi]");
                continue;
            }
            section.bounds.lo.push_back(bj[0].get<double>());
            section.bounds.hi.push_back(bj[1].get<double>());
        }
    } else {
        ctx.fail(path, "missing 'bounds' array");
    }
    section.t0 = get_number(ctx, j, path, "t0", 1.0);
    section.c = get_number(ctx, j, path, "c", 1.0);
    section.t0_accept = get_number(ctx, j, path, "t0_accept", 1.0);
    section.c_accept = get_number(ctx, j, path, "c_accept", 0.0);
    section.budget = get_integer(ctx, j, path, "budget", 10000);
    section.reanneal_every = get_integer(ctx, j, path, "reanneal_every", 0);
    section.n_samples = static_cast<std::size_t>(get_integer(ctx, j, path, "n_samples", 100));
    return section;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin,
                        const std::string& base_dir) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error(origin + ": parse error: " + e.what());
    }

    Ctx ctx;
    Scenario scenario;
    scenario.raw_text = text;
    scenario.base_dir = base_dir;

    if (!root.is_object()) throw config_error(origin + ": top level must be an object");
    check_keys(ctx, root, origin, {"seed", "output_dir", "population", "pathint", "risk", "asa"});

    if (root.contains("seed")) {
        if (!root["seed"].is_number_unsigned() && !root["seed"].is_number_integer())
            ctx.fail(origin + ".seed", "expected a nonnegative integer");
        else
            scenario.seed = root["seed"].get<std::uint64_t>();
    } else {
        ctx.note_default(origin + ".seed", 0);
    }
    if (root.contains("output_dir"))
        scenario.output_dir = get_string(ctx, root, origin, "output_dir");

    if (root.contains("population") && expect_object(ctx, root["population"], origin + ".population"))
        scenario.population = parse_population(ctx, root["population"], origin + ".population");
    if (root.contains("pathint") && expect_object(ctx, root["pathint"], origin + ".pathint"))
        scenario.pathint = parse_pathint(ctx, root["pathint"], origin + ".pathint");
    if (root.contains("risk") && expect_object(ctx, root["risk"], origin + ".risk"))
        scenario.risk = parse_risk(ctx, root["risk"], origin + ".risk");
    if (root.contains("asa") && expect_object(ctx, root["asa"], origin + ".asa"))
        scenario.asa = parse_asa(ctx, root["asa"], origin + ".asa");

    // Structural validation with the same error collection.
    if (ctx.errors.empty() && scenario.population) {
        try {
            scenario.population->graph.validate();
            if (scenario.population->pattern)
                scenario.population->pattern->validate(scenario.population->graph);
            if (scenario.population->fit) {
                for (const std::string& id : scenario.population->fit->regions)
                    if (scenario.population->graph.region_index(id) < 0)
                        ctx.fail(origin + ".population.fit",
                                 "fit references undefined region " + id);
            }
        } catch (const Error& e) {
            ctx.fail(origin + ".population", e.what());
        }
    }
    if (ctx.errors.empty() && scenario.pathint) {
        try {
            scenario.pathint->grid.validate();
        } catch (const Error& e) {
            ctx.fail(origin + ".pathint", e.what());
        }
    }

    if (!ctx.errors.empty()) {
        std::string joined = "schema errors in " + origin + ":";
        for (const std::string& e : ctx.errors) joined += "\n  - " + e;
        throw config_error(joined);
    }
    scenario.defaults = std::move(ctx.defaults);
    return scenario;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("scenario file not found: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string base = std::filesystem::path(path).parent_path().string();
    return parse_scenario(ss.str(), path, base);
}

}  // namespace meso::io
