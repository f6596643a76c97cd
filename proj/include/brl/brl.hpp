#pragma once

#include "brl/distribution.hpp"
#include "brl/experiment.hpp"
#include "brl/learner.hpp"
#include "brl/maze.hpp"
#include "brl/mdp.hpp"
#include "brl/numerics.hpp"
#include "brl/policy.hpp"
#include "brl/posterior.hpp"
#include "brl/prior.hpp"
#include "brl/random.hpp"
