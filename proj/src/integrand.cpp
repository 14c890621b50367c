#include "bmo/integrand.hpp"

#include <cmath>
#include <utility>

namespace bmo {

IntegrandSpec IntegrandSpec::constant(double lambda) {
    IntegrandSpec s;
    s.kind = Kind::Constant;
    s.value = lambda;
    s.bound = std::abs(lambda);
    s.label = "constant(" + std::to_string(lambda) + ")";
    return s;
}

IntegrandSpec IntegrandSpec::piecewise(Eigen::VectorXd per_interval) {
    IntegrandSpec s;
    s.kind = Kind::PiecewiseDeterministic;
    s.values = std::move(per_interval);
    s.bound = s.values.size() ? s.values.cwiseAbs().maxCoeff() : 0.0;
    s.label = "piecewise[" + std::to_string(s.values.size()) + "]";
    return s;
}

IntegrandSpec IntegrandSpec::state_dependent(std::function<double(double, double)> theta,
                                             double declared_bound, std::string label) {
    IntegrandSpec s;
    s.kind = Kind::StateDependent;
    s.fn = std::move(theta);
    s.bound = declared_bound;
    s.label = std::move(label);
    return s;
}

IntegrandSpec IntegrandSpec::sine(double base, double swing) {
    auto theta = [base, swing](double, double w) { return base * (1.0 + swing * std::sin(w)); };
    return state_dependent(theta, std::abs(base) * (1.0 + std::abs(swing)),
                           "sine(" + std::to_string(base) + "," + std::to_string(swing) + ")");
}

double IntegrandSpec::at(int step, double t, double w) const {
    switch (kind) {
        case Kind::Constant: return value;
        case Kind::PiecewiseDeterministic: return values[step];
        case Kind::StateDependent: return fn(t, w);
    }
    return 0.0;
}

Eigen::ArrayXd IntegrandSpec::at(const TimeGrid& grid, int step, const Eigen::ArrayXd& w) const {
    const double t = grid.time(step);
    switch (kind) {
        case Kind::Constant: return Eigen::ArrayXd::Constant(w.size(), value);
        case Kind::PiecewiseDeterministic:
            return Eigen::ArrayXd::Constant(w.size(), values[step]);
        case Kind::StateDependent: {
            Eigen::ArrayXd out(w.size());
            for (Eigen::Index i = 0; i < w.size(); ++i) out[i] = fn(t, w[i]);
            return out;
        }
    }
    return Eigen::ArrayXd::Zero(w.size());
}

void IntegrandSpec::validate(const TimeGrid& grid) const {
    if (!std::isfinite(bound)) throw InputError("IntegrandSpec: bound must be finite");
    switch (kind) {
        case Kind::Constant:
            if (!std::isfinite(value)) throw InputError("IntegrandSpec: non-finite constant");
            break;
        case Kind::PiecewiseDeterministic:
            if (values.size() != grid.n_steps)
                throw InputError("IntegrandSpec: piecewise needs one value per interval");
            if (!values.allFinite()) throw InputError("IntegrandSpec: non-finite value");
            break;
        case Kind::StateDependent: {
            if (!fn) throw InputError("IntegrandSpec: missing state function");
            // Sample |theta| over the reachable region; the declared bound must hold.
            const double wmax = 6.0 * std::sqrt(grid.horizon);
            for (int k = 0; k < grid.n_steps; ++k) {
                const double t = grid.time(k);
                for (int j = 0; j <= 64; ++j) {
                    const double w = -wmax + 2.0 * wmax * j / 64.0;
                    const double th = fn(t, w);
                    if (!std::isfinite(th)) throw InputError("IntegrandSpec: non-finite theta");
                    if (std::abs(th) > bound * (1.0 + 1e-12) + 1e-300)
                        throw InputError("IntegrandSpec: sampled |theta| exceeds declared bound");
                }
            }
            break;
        }
    }
}

}  // namespace bmo
