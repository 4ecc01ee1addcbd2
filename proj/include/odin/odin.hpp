#pragma once
// Umbrella header for the odin discovery engine.

#include "odin/common.hpp"
#include "odin/kg_store.hpp"
#include "odin/path.hpp"
#include "odin/ppr.hpp"
#include "odin/npll.hpp"
#include "odin/community.hpp"
#include "odin/compass.hpp"
#include "odin/beam_search.hpp"
#include "odin/eval.hpp"
#include "odin/pipeline.hpp"
#include "odin/report.hpp"
