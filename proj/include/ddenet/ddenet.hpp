#pragma once

#include "ddenet/activation.hpp"
#include "ddenet/dde_sim.hpp"
#include "ddenet/error.hpp"
#include "ddenet/format.hpp"
#include "ddenet/io.hpp"
#include "ddenet/modulation.hpp"
#include "ddenet/time_grid.hpp"
#include "ddenet/unfolded_net.hpp"
#include "ddenet/verify.hpp"
