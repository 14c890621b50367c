#include "bmo/paths.hpp"

#include <cmath>
#include <ostream>

#include "bmo/rng.hpp"

namespace bmo {

PathBundle simulate_brownian(const TimeGrid& grid, Eigen::Index n_paths,
                             std::uint64_t seed, int block_size) {
    if (n_paths < 1) throw InputError("simulate_brownian: need at least one path");
    if (block_size < 1) throw InputError("simulate_brownian: block_size must be positive");

    PathBundle b;
    b.grid = grid;
    b.seed = seed;
    b.block_size = block_size;
    b.dw.resize(n_paths, grid.n_steps);
    b.w.resize(n_paths, grid.n_times());
    b.w.col(0).setZero();

    const double sdt = std::sqrt(grid.dt());
    for (Eigen::Index lo = 0; lo < n_paths; lo += block_size) {
        const Eigen::Index hi = std::min<Eigen::Index>(lo + block_size, n_paths);
        for (Eigen::Index i = lo; i < hi; ++i)
            for (int k = 0; k < grid.n_steps; ++k)
                b.dw(i, k) = sdt * rng::normal(seed, static_cast<std::uint64_t>(i),
                                               static_cast<std::uint64_t>(k));
    }
    for (int k = 0; k < grid.n_steps; ++k) b.w.col(k + 1) = b.w.col(k) + b.dw.col(k);
    return b;
}

PathBundle coarsen(const PathBundle& bundle, int factor) {
    if (factor < 1 || bundle.grid.n_steps % factor != 0)
        throw InputError("coarsen: factor must divide n_steps");
    PathBundle c;
    c.grid = TimeGrid::uniform(bundle.grid.horizon, bundle.grid.n_steps / factor);
    c.seed = bundle.seed;
    c.block_size = bundle.block_size;
    c.dw.resize(bundle.n_paths(), c.grid.n_steps);
    for (int k = 0; k < c.grid.n_steps; ++k) {
        c.dw.col(k) = bundle.dw.col(k * factor);
        for (int j = 1; j < factor; ++j) c.dw.col(k) += bundle.dw.col(k * factor + j);
    }
    c.w.resize(bundle.n_paths(), c.grid.n_times());
    c.w.col(0).setZero();
    for (int k = 0; k < c.grid.n_steps; ++k) c.w.col(k + 1) = c.w.col(k) + c.dw.col(k);
    return c;
}

void write_csv(const PathBundle& bundle, std::ostream& os, Eigen::Index max_paths) {
    os << "path,step,dw\n";
    const Eigen::Index np = std::min(max_paths, bundle.n_paths());
    char buf[64];
    for (Eigen::Index i = 0; i < np; ++i)
        for (int k = 0; k < bundle.grid.n_steps; ++k) {
            std::snprintf(buf, sizeof buf, "%lld,%d,%.17g",
                          static_cast<long long>(i), k, bundle.dw(i, k));
            os << buf << '\n';
        }
}

ProcessPaths build_martingale(const PathBundle& bundle, const IntegrandSpec& spec) {
    spec.validate(bundle.grid);

    ProcessPaths p;
    p.grid = bundle.grid;
    const Eigen::Index n = bundle.n_paths();
    p.m.resize(n, p.grid.n_times());
    p.qv.resize(n, p.grid.n_times());
    p.m.col(0).setZero();
    p.qv.col(0).setZero();

    const double dt = p.grid.dt();
    for (int k = 0; k < p.grid.n_steps; ++k) {
        const Eigen::ArrayXd theta = spec.at(bundle.grid, k, bundle.w.col(k));
        p.m.col(k + 1) = p.m.col(k) + theta * bundle.dw.col(k);
        p.qv.col(k + 1) = p.qv.col(k) + theta.square() * dt;
    }
    return p;
}

ProcessPaths& stochastic_exponential(ProcessPaths& proc, double cap) {
    proc.overflow_paths.clear();
    const Eigen::ArrayXd max_abs_m = proc.m.abs().rowwise().maxCoeff();
    for (Eigen::Index i = 0; i < proc.n_paths(); ++i)
        if (max_abs_m[i] > cap) proc.overflow_paths.push_back(i);
    proc.exp_m = (proc.m - 0.5 * proc.qv).exp();
    return proc;
}

Eigen::ArrayXXd cross_variation(const PathBundle& bundle, const IntegrandSpec& spec_x,
                                const IntegrandSpec& spec_m) {
    spec_x.validate(bundle.grid);
    spec_m.validate(bundle.grid);
    Eigen::ArrayXXd cv(bundle.n_paths(), bundle.grid.n_times());
    cv.col(0).setZero();
    const double dt = bundle.grid.dt();
    for (int k = 0; k < bundle.grid.n_steps; ++k) {
        const Eigen::ArrayXd tx = spec_x.at(bundle.grid, k, bundle.w.col(k));
        const Eigen::ArrayXd tm = spec_m.at(bundle.grid, k, bundle.w.col(k));
        cv.col(k + 1) = cv.col(k) + tx * tm * dt;
    }
    return cv;
}

}  // namespace bmo
