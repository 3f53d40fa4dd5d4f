#pragma once

#include <string>

#include "adahi/policy.hpp"
#include "adahi/rng.hpp"

namespace adahi {

// Linear-dynamics toy control task: next = A*state + B*action + noise.
struct EnvSpec {
    std::string name;
    std::size_t state_dim = 2;
    std::size_t action_dim = 2;
    std::size_t goal_dim = 2;
    Mat A;
    Mat B;
    double process_noise = 0.01;   // std of additive state noise
    double success_radius = 0.1;
    std::size_t horizon = 30;
    double expert_gain = 0.5;      // ground-truth feedback gain
    double goal_radius = 1.5;      // reset: goal sampled on this sphere
    double init_state_noise = 0.1;
    std::size_t agents = 1;        // >1: success requires every agent block in radius
};

struct StepResult {
    Vec next_state;
    bool success = false;
    Vec expert_action;
};

// Named fixtures: reach-2d, reach-7d, swarm-2d.
EnvSpec make_env_fixture(const std::string& name);

Observation reset(const EnvSpec& spec, uint64_t seed);

StepResult step(const EnvSpec& spec, const Observation& o, std::span<const double> a,
                RngStream& rng);

// Distance used by the success predicate: Euclidean for single-agent
// fixtures, max per-agent Euclidean for swarm.
double goal_distance(const EnvSpec& spec, std::span<const double> state,
                     std::span<const double> goal);

Vec expert_action(const EnvSpec& spec, const Observation& o);

}  // namespace adahi
