#ifndef FLAGSWAP_FLAGSWAP_HPP
#define FLAGSWAP_FLAGSWAP_HPP

#include "flagswap/baselines.hpp"
#include "flagswap/delay_model.hpp"
#include "flagswap/error.hpp"
#include "flagswap/experiment.hpp"
#include "flagswap/io.hpp"
#include "flagswap/pso.hpp"
#include "flagswap/round_engine.hpp"
#include "flagswap/snapshot.hpp"
#include "flagswap/topology.hpp"

#endif  // FLAGSWAP_FLAGSWAP_HPP
