#include <algorithm>
#include <cmath>

#include "adahi/env.hpp"

namespace adahi {

namespace {

EnvSpec base_spec(const std::string& name, std::size_t dim) {
    EnvSpec s;
    s.name = name;
    s.state_dim = s.action_dim = s.goal_dim = dim;
    s.A = Mat::identity(dim);
    s.B = Mat::identity(dim);
    return s;
}

}  // namespace

EnvSpec make_env_fixture(const std::string& name) {
    if (name == "reach-2d") {
        // Ball-balancing analog: 2-D point mass, tight radius.
        EnvSpec s = base_spec(name, 2);
        s.success_radius = 0.25;
        s.horizon = 14;
        s.goal_radius = 1.5;
        return s;
    }
    if (name == "reach-7d") {
        // Kitchen analog: higher-dimensional action, looser radius, longer
        // horizon.
        EnvSpec s = base_spec(name, 7);
        s.success_radius = 1.15;
        s.horizon = 12;
        s.goal_radius = 2.2;
        return s;
    }
    if (name == "swarm-2d") {
        // 4 agents x 2-D under a shared policy; all agents must reach.
        EnvSpec s = base_spec(name, 8);
        s.agents = 4;
        s.success_radius = 0.8;
        s.horizon = 12;
        s.goal_radius = 1.0;
        return s;
    }
    throw ConfigError("unknown env fixture: " + name);
}

Observation reset(const EnvSpec& spec, uint64_t seed) {
    RngStream rng(seed);
    Observation o;
    o.step = 0;
    o.state.resize(spec.state_dim);
    o.goal.resize(spec.goal_dim);

    if (spec.agents > 1) {
        // Per-agent goal on a sphere of radius goal_radius around the origin.
        const std::size_t ad = spec.state_dim / spec.agents;
        for (std::size_t g = 0; g < spec.agents; ++g) {
            Vec dir(ad);
            for (auto& v : dir) v = rng.normal();
            double nrm = norm2(dir);
            for (std::size_t j = 0; j < ad; ++j) {
                o.goal[g * ad + j] = spec.goal_radius * dir[j] / std::max(nrm, 1e-12);
            }
        }
    } else {
        Vec dir(spec.goal_dim);
        for (auto& v : dir) v = rng.normal();
        double nrm = norm2(dir);
        for (std::size_t j = 0; j < spec.goal_dim; ++j) {
            o.goal[j] = spec.goal_radius * dir[j] / std::max(nrm, 1e-12);
        }
    }
    for (auto& v : o.state) v = spec.init_state_noise * rng.normal();
    return o;
}

double goal_distance(const EnvSpec& spec, std::span<const double> state,
                     std::span<const double> goal) {
    if (spec.agents > 1) {
        const std::size_t ad = spec.state_dim / spec.agents;
        double worst = 0.0;
        for (std::size_t g = 0; g < spec.agents; ++g) {
            double acc = 0.0;
            for (std::size_t j = 0; j < ad; ++j) {
                double diff = state[g * ad + j] - goal[g * ad + j];
                acc += diff * diff;
            }
            worst = std::max(worst, std::sqrt(acc));
        }
        return worst;
    }
    return norm2(sub(state, goal));
}

Vec expert_action(const EnvSpec& spec, const Observation& o) {
    return scaled(sub(o.goal, o.state), spec.expert_gain);
}

StepResult step(const EnvSpec& spec, const Observation& o, std::span<const double> a,
                RngStream& rng) {
    if (a.size() != spec.action_dim) throw ContractError("env: action dimension mismatch");
    if (o.state.size() != spec.state_dim) throw ContractError("env: state dimension mismatch");

    StepResult res;
    res.expert_action = expert_action(spec, o);
    res.next_state = matvec(spec.A, o.state);
    Vec ba = matvec(spec.B, a);
    for (std::size_t i = 0; i < res.next_state.size(); ++i) {
        res.next_state[i] += ba[i] + spec.process_noise * rng.normal();
    }
    res.success = goal_distance(spec, res.next_state, o.goal) < spec.success_radius;
    return res;
}

}  // namespace adahi
