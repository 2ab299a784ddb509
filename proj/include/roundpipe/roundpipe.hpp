#pragma once

#include "roundpipe/compare.hpp"
#include "roundpipe/config_io.hpp"
#include "roundpipe/consistency.hpp"
#include "roundpipe/cost_model.hpp"
#include "roundpipe/partitioner.hpp"
#include "roundpipe/scheduler.hpp"
#include "roundpipe/simulator.hpp"
#include "roundpipe/svg.hpp"
#include "roundpipe/transfer_planner.hpp"
