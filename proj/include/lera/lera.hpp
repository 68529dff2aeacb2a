#pragma once

// Core library: simulator, plans, replanning pipeline, episodes, metrics and
// suites. The HTTP backend lives in lera/http_backend.hpp so that only code
// talking to a real model pulls in the network and image dependencies.

#include "lera/agent.hpp"
#include "lera/backend.hpp"
#include "lera/evidence.hpp"
#include "lera/metrics.hpp"
#include "lera/observe.hpp"
#include "lera/plan.hpp"
#include "lera/prompts.hpp"
#include "lera/replanner.hpp"
#include "lera/rng.hpp"
#include "lera/scripted.hpp"
#include "lera/suite.hpp"
#include "lera/tasks.hpp"
#include "lera/trace.hpp"
#include "lera/world.hpp"
