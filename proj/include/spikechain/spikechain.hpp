#pragma once

#include "spikechain/continuum_ode.hpp"
#include "spikechain/discrete_solver.hpp"
#include "spikechain/driver.hpp"
#include "spikechain/error.hpp"
#include "spikechain/geometry.hpp"
#include "spikechain/ground_state.hpp"
#include "spikechain/interaction.hpp"
#include "spikechain/run_config.hpp"
#include "spikechain/verifier.hpp"
