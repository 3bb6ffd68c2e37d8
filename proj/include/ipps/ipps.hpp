#pragma once

#include "ipps/bench.hpp"
#include "ipps/combination.hpp"
#include "ipps/env.hpp"
#include "ipps/generator.hpp"
#include "ipps/graph_state.hpp"
#include "ipps/greedy.hpp"
#include "ipps/instance.hpp"
#include "ipps/instance_io.hpp"
#include "ipps/kim.hpp"
#include "ipps/milp.hpp"
#include "ipps/oracle.hpp"
#include "ipps/protocol.hpp"
#include "ipps/rng.hpp"
#include "ipps/schedule.hpp"
#include "ipps/tcp.hpp"
#include "ipps/time.hpp"
