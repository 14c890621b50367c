#include "bmo/girsanov.hpp"

#include <cmath>

#include "bmo/rng.hpp"

namespace bmo {

MeasureChange make_measure_change(const ProcessPaths& proc, double ess_floor_fraction) {
    if (!proc.has_exponential())
        throw InputError("make_measure_change: stochastic exponential not filled");

    MeasureChange mc;
    mc.weights = proc.exp_m.col(proc.grid.n_steps);
    const auto ms = stats::mean_se(mc.weights);
    mc.mean = ms.mean;
    mc.se_mean = ms.se;
    mc.ess = stats::effective_sample_size(mc.weights);
    mc.ess_floor = ess_floor_fraction * static_cast<double>(mc.weights.size());
    mc.degenerate = mc.ess < mc.ess_floor;
    return mc;
}

TildeProcesses tilde_transform(const PathBundle& bundle, const ProcessPaths& x,
                               const ProcessPaths& m, const IntegrandSpec& spec_x,
                               const IntegrandSpec& spec_m) {
    if (!(x.grid == m.grid) || !(x.grid == bundle.grid))
        throw InputError("tilde_transform: mismatched grids");
    if (x.n_paths() != m.n_paths() || x.n_paths() != bundle.n_paths())
        throw InputError("tilde_transform: mismatched path counts");

    TildeProcesses t;
    t.cross_qv = cross_variation(bundle, spec_x, spec_m);
    t.tilde_x.grid = x.grid;
    t.tilde_x.m = t.cross_qv - x.m;
    t.tilde_x.qv = x.qv;                    // <tilde X> = <X>, exact in the scheme
    t.tilde_m.grid = m.grid;
    t.tilde_m.m = m.qv - m.m;
    t.tilde_m.qv = m.qv;
    return t;
}

stats::MeanSe expect_tilde(const Eigen::ArrayXd& payoff, const MeasureChange& mc) {
    if (payoff.size() != mc.weights.size())
        throw InputError("expect_tilde: payoff size mismatch");
    if (!payoff.allFinite()) throw InputError("expect_tilde: non-finite payoff");
    return stats::mean_se(mc.weights * payoff);
}

TildeSimulation simulate_under_tilde(const TimeGrid& grid, const IntegrandSpec& spec_m,
                                     const IntegrandSpec& spec_x, Eigen::Index n_paths,
                                     std::uint64_t seed) {
    spec_m.validate(grid);
    spec_x.validate(grid);
    if (n_paths < 1) throw InputError("simulate_under_tilde: need at least one path");

    const PathBundle tilde = simulate_brownian(grid, n_paths, seed);
    TildeSimulation sim;
    sim.w.resize(n_paths, grid.n_times());
    sim.w.col(0).setZero();
    sim.x_tilde.grid = grid;
    sim.x_tilde.m.resize(n_paths, grid.n_times());
    sim.x_tilde.qv.resize(n_paths, grid.n_times());
    sim.x_tilde.m.col(0).setZero();
    sim.x_tilde.qv.col(0).setZero();

    const double dt = grid.dt();
    for (int k = 0; k < grid.n_steps; ++k) {
        const Eigen::ArrayXd tm = spec_m.at(grid, k, sim.w.col(k));
        const Eigen::ArrayXd tx = spec_x.at(grid, k, sim.w.col(k));
        sim.w.col(k + 1) = sim.w.col(k) + tilde.dw.col(k) + tm * dt;
        sim.x_tilde.m.col(k + 1) = sim.x_tilde.m.col(k) - tx * tilde.dw.col(k);
        sim.x_tilde.qv.col(k + 1) = sim.x_tilde.qv.col(k) + tx.square() * dt;
    }
    return sim;
}

}  // namespace bmo
