#pragma once

#include "aerogrid/errors.hpp"
#include "aerogrid/geometry.hpp"
#include "aerogrid/global_planner.hpp"
#include "aerogrid/gridmask.hpp"
#include "aerogrid/local_planner.hpp"
#include "aerogrid/mission.hpp"
#include "aerogrid/perception.hpp"
#include "aerogrid/report.hpp"
#include "aerogrid/scenario.hpp"
#include "aerogrid/semantic_map.hpp"
#include "aerogrid/spline.hpp"
#include "aerogrid/world.hpp"
