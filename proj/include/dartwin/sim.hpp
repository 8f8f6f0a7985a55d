#pragma once

#include "sim/behaviors.hpp"
#include "sim/engine.hpp"
#include "sim/goals.hpp"
#include "sim/scenario.hpp"
#include "sim/value.hpp"
