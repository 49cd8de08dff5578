#pragma once

#include "ptexplore/bench.hpp"
#include "ptexplore/config.hpp"
#include "ptexplore/dynamics.hpp"
#include "ptexplore/env.hpp"
#include "ptexplore/exploration.hpp"
#include "ptexplore/geometry.hpp"
#include "ptexplore/grid.hpp"
#include "ptexplore/map_io.hpp"
#include "ptexplore/metrics.hpp"
#include "ptexplore/planner.hpp"
#include "ptexplore/policies.hpp"
#include "ptexplore/protocol.hpp"
#include "ptexplore/record.hpp"
#include "ptexplore/remote.hpp"
#include "ptexplore/rng.hpp"
#include "ptexplore/scenario.hpp"
#include "ptexplore/sensing.hpp"
#include "ptexplore/server.hpp"
#include "ptexplore/vector_env.hpp"
#include "ptexplore/world_map.hpp"
