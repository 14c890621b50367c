#include "bmo/config.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "bmo/errors.hpp"

namespace bmo {

IntegrandSpec IntegrandConfig::to_spec() const {
    if (kind == "constant") return IntegrandSpec::constant(lambda);
    if (kind == "piecewise") {
        Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
        for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
        return IntegrandSpec::piecewise(std::move(v));
    }
    if (kind == "sine") return IntegrandSpec::sine(base, swing);
    throw InputError("IntegrandConfig: unknown kind '" + kind + "'");
}

SliceEstimator ExperimentConfig::slice_estimator() const {
    if (estimator == "regression") {
        SliceEstimator e = SliceEstimator::regression(degree);
        e.reg.t_threshold = t_threshold;
        e.reg.clamp_quantile = clamp_quantile;
        return e;
    }
    if (estimator == "nested") return SliceEstimator::nested(branch);
    if (estimator == "closed_form")
        throw InputError("ExperimentConfig: closed_form estimator needs a kernel; "
                         "only subcommands with a known kernel accept it");
    throw InputError("ExperimentConfig: unknown estimator '" + estimator + "'");
}

void ExperimentConfig::validate() const {
    grid();  // throws on a degenerate grid
    if (n_paths < 1) throw InputError("config: paths.n must be >= 1");
    if (block < 1) throw InputError("config: paths.block must be >= 1");
    if (degree < 1) throw InputError("config: estimator.degree must be >= 1");
    if (branch < 2) throw InputError("config: estimator.branch must be >= 2");
    if (!(p > 1.0)) throw InputError("config: run.p must be > 1");
    if (corollary_n < 1) throw InputError("config: run.corollary_n must be >= 1");
    for (double v : {tol.bmo_rel, tol.moment_rel, tol.bsde_y0_rel, tol.psi_sup, tol.route_rel,
                     tol.ratio_slack, tol.se_mult, ess_floor, overflow_cap, ess_quantile,
                     t_threshold, clamp_quantile})
        if (!(v > 0.0)) throw InputError("config: tolerances and thresholds must be positive");
    for (double v : p_list)
        if (!(v > 1.0)) throw InputError("config: run.p_list entries must be > 1");
    m.to_spec();
    x.to_spec();
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& section, const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw InputError("config: bad number for " + section + "." + key + ": '" + v + "'");
    }
}

long long to_ll(const std::string& section, const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long d = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw InputError("config: bad integer for " + section + "." + key + ": '" + v + "'");
    }
}

std::vector<double> to_list(const std::string& section, const std::string& key,
                            const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(to_double(section, key, item));
    }
    return out;
}

std::string list_str(const std::vector<double>& v) {
    std::string s;
    char buf[40];
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", v[i]);
        if (i) s += ",";
        s += buf;
    }
    return s;
}

void apply_integrand(IntegrandConfig& ic, const std::string& section, const std::string& key,
                     const std::string& value) {
    if (key == "kind") ic.kind = value;
    else if (key == "lambda") ic.lambda = to_double(section, key, value);
    else if (key == "values") ic.values = to_list(section, key, value);
    else if (key == "base") ic.base = to_double(section, key, value);
    else if (key == "swing") ic.swing = to_double(section, key, value);
    else throw InputError("config: unknown key " + section + "." + key);
}

}  // namespace

ExperimentConfig parse_config(std::istream& is) {
    ExperimentConfig cfg;
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw InputError("config: bad section header at line " + std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError("config: expected key = value at line " + std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (section == "grid") {
            if (key == "T") cfg.horizon = to_double(section, key, value);
            else if (key == "steps") cfg.steps = static_cast<int>(to_ll(section, key, value));
            else throw InputError("config: unknown key grid." + key);
        } else if (section == "paths") {
            if (key == "n") cfg.n_paths = to_ll(section, key, value);
            else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_ll(section, key, value));
            else if (key == "block") cfg.block = static_cast<int>(to_ll(section, key, value));
            else throw InputError("config: unknown key paths." + key);
        } else if (section == "integrand_m") {
            apply_integrand(cfg.m, section, key, value);
        } else if (section == "integrand_x") {
            apply_integrand(cfg.x, section, key, value);
        } else if (section == "estimator") {
            if (key == "method") cfg.estimator = value;
            else if (key == "degree") cfg.degree = static_cast<int>(to_ll(section, key, value));
            else if (key == "t_threshold") cfg.t_threshold = to_double(section, key, value);
            else if (key == "clamp_quantile") cfg.clamp_quantile = to_double(section, key, value);
            else if (key == "branch") cfg.branch = static_cast<int>(to_ll(section, key, value));
            else throw InputError("config: unknown key estimator." + key);
        } else if (section == "run") {
            if (key == "p") cfg.p = to_double(section, key, value);
            else if (key == "p_list") cfg.p_list = to_list(section, key, value);
            else if (key == "beta") cfg.beta = to_double(section, key, value);
            else if (key == "norm_list") cfg.norm_list = to_list(section, key, value);
            else if (key == "lambda_list") cfg.lambda_list = to_list(section, key, value);
            else if (key == "corollary_n") cfg.corollary_n = static_cast<int>(to_ll(section, key, value));
            else if (key == "ess_floor") cfg.ess_floor = to_double(section, key, value);
            else if (key == "overflow_cap") cfg.overflow_cap = to_double(section, key, value);
            else if (key == "ess_quantile") cfg.ess_quantile = to_double(section, key, value);
            else throw InputError("config: unknown key run." + key);
        } else if (section == "tolerances") {
            if (key == "bmo_rel") cfg.tol.bmo_rel = to_double(section, key, value);
            else if (key == "moment_rel") cfg.tol.moment_rel = to_double(section, key, value);
            else if (key == "bsde_y0_rel") cfg.tol.bsde_y0_rel = to_double(section, key, value);
            else if (key == "psi_sup") cfg.tol.psi_sup = to_double(section, key, value);
            else if (key == "route_rel") cfg.tol.route_rel = to_double(section, key, value);
            else if (key == "ratio_slack") cfg.tol.ratio_slack = to_double(section, key, value);
            else if (key == "se_mult") cfg.tol.se_mult = to_double(section, key, value);
            else throw InputError("config: unknown key tolerances." + key);
        } else if (section == "output") {
            if (key == "dir") cfg.out_dir = value;
            else throw InputError("config: unknown key output." + key);
        } else {
            throw InputError("config: unknown section [" + section + "]");
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("config: cannot open '" + path + "'");
    return parse_config(f);
}

void serialize_config(const ExperimentConfig& cfg, std::ostream& os) {
    char buf[64];
    const auto num = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    const auto integrand = [&](const char* name, const IntegrandConfig& ic) {
        os << "[" << name << "]\n";
        os << "kind = " << ic.kind << "\n";
        os << "lambda = " << num(ic.lambda) << "\n";
        if (!ic.values.empty()) os << "values = " << list_str(ic.values) << "\n";
        os << "base = " << num(ic.base) << "\n";
        os << "swing = " << num(ic.swing) << "\n";
    };

    os << "[grid]\nT = " << num(cfg.horizon) << "\nsteps = " << cfg.steps << "\n";
    os << "[paths]\nn = " << cfg.n_paths << "\nseed = " << cfg.seed
       << "\nblock = " << cfg.block << "\n";
    integrand("integrand_m", cfg.m);
    integrand("integrand_x", cfg.x);
    os << "[estimator]\nmethod = " << cfg.estimator << "\ndegree = " << cfg.degree
       << "\nt_threshold = " << num(cfg.t_threshold)
       << "\nclamp_quantile = " << num(cfg.clamp_quantile) << "\nbranch = " << cfg.branch << "\n";
    os << "[run]\np = " << num(cfg.p) << "\np_list = " << list_str(cfg.p_list)
       << "\nbeta = " << num(cfg.beta) << "\nnorm_list = " << list_str(cfg.norm_list)
       << "\nlambda_list = " << list_str(cfg.lambda_list)
       << "\ncorollary_n = " << cfg.corollary_n << "\ness_floor = " << num(cfg.ess_floor)
       << "\noverflow_cap = " << num(cfg.overflow_cap)
       << "\ness_quantile = " << num(cfg.ess_quantile) << "\n";
    os << "[tolerances]\nbmo_rel = " << num(cfg.tol.bmo_rel)
       << "\nmoment_rel = " << num(cfg.tol.moment_rel)
       << "\nbsde_y0_rel = " << num(cfg.tol.bsde_y0_rel) << "\npsi_sup = " << num(cfg.tol.psi_sup)
       << "\nroute_rel = " << num(cfg.tol.route_rel)
       << "\nratio_slack = " << num(cfg.tol.ratio_slack) << "\nse_mult = " << num(cfg.tol.se_mult)
       << "\n";
    os << "[output]\ndir = " << cfg.out_dir << "\n";
}

}  // namespace bmo
